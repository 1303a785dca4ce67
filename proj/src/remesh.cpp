#include <lapnet/synth.hpp>

#include <algorithm>
#include <random>
#include <set>

namespace lapnet {

namespace {

/// Mutable triangle soup with vertex-to-face incidence, for edge collapses.
class CollapseMesh {
public:
    explicit CollapseMesh(const Mesh& mesh)
        : positions_(mesh.vertices)
        , faces_(mesh.faces)
        , face_alive_(mesh.faces.size(), true)
        , vertex_alive_(mesh.vertices.size(), true)
        , incident_(mesh.vertices.size())
        , alive_vertices_(mesh.num_vertices())
    {
        for (std::size_t f = 0; f < faces_.size(); ++f) {
            for (int v : faces_[f]) {
                incident_[v].push_back(static_cast<int>(f));
            }
        }
    }

    int alive_vertices() const { return alive_vertices_; }
    bool alive(int v) const { return vertex_alive_[v]; }
    double edge_length_sq(int a, int b) const { return (positions_[a] - positions_[b]).squaredNorm(); }

    std::set<int> neighbors(int v) const
    {
        std::set<int> out;
        for (int f : incident_[v]) {
            for (int w : faces_[f]) {
                if (w != v) {
                    out.insert(w);
                }
            }
        }
        return out;
    }

    std::vector<std::pair<int, int>> edges() const
    {
        std::set<std::pair<int, int>> out;
        for (std::size_t f = 0; f < faces_.size(); ++f) {
            if (!face_alive_[f]) {
                continue;
            }
            for (int k = 0; k < 3; ++k) {
                out.insert(std::minmax(faces_[f][k], faces_[f][(k + 1) % 3]));
            }
        }
        return {out.begin(), out.end()};
    }

    /// Merges v into u at the edge midpoint. Returns false (and leaves the mesh
    /// untouched) when the collapse would break manifoldness or flip a face.
    bool collapse(int u, int v)
    {
        std::vector<int> shared;
        for (int f : incident_[u]) {
            const auto& face = faces_[f];
            if (std::find(face.begin(), face.end(), v) != face.end()) {
                shared.push_back(f);
            }
        }
        if (shared.size() != 2) {
            return false;
        }
        const auto nu = neighbors(u);
        const auto nv = neighbors(v);
        std::vector<int> common;
        std::set_intersection(nu.begin(), nu.end(), nv.begin(), nv.end(), std::back_inserter(common));
        if (common.size() != 2) {
            return false;
        }

        const Vec3 target = 0.5 * (positions_[u] + positions_[v]);
        for (int w : {u, v}) {
            for (int f : incident_[w]) {
                if (std::find(shared.begin(), shared.end(), f) != shared.end()) {
                    continue;
                }
                Face after = faces_[f];
                std::array<Vec3, 3> p;
                for (int k = 0; k < 3; ++k) {
                    if (after[k] == v) {
                        after[k] = u;
                    }
                    p[k] = after[k] == u ? target : positions_[after[k]];
                }
                const Vec3 before_n = normal(faces_[f]);
                const Vec3 after_n = (p[1] - p[0]).cross(p[2] - p[0]);
                if (after_n.norm() < 1e-3 * before_n.norm() || before_n.dot(after_n) <= 0.2 * before_n.norm() * after_n.norm()) {
                    return false;
                }
            }
        }

        for (int f : shared) {
            face_alive_[f] = false;
            for (int w : faces_[f]) {
                auto& inc = incident_[w];
                inc.erase(std::remove(inc.begin(), inc.end(), f), inc.end());
            }
        }
        for (int f : incident_[v]) {
            for (auto& w : faces_[f]) {
                if (w == v) {
                    w = u;
                }
            }
            incident_[u].push_back(f);
        }
        incident_[v].clear();
        positions_[u] = target;
        vertex_alive_[v] = false;
        --alive_vertices_;
        return true;
    }

    Mesh compact() const
    {
        Mesh out;
        std::vector<int> remap(positions_.size(), -1);
        for (std::size_t v = 0; v < positions_.size(); ++v) {
            if (vertex_alive_[v]) {
                remap[v] = out.num_vertices();
                out.vertices.push_back(positions_[v]);
            }
        }
        for (std::size_t f = 0; f < faces_.size(); ++f) {
            if (face_alive_[f]) {
                out.faces.push_back({remap[faces_[f][0]], remap[faces_[f][1]], remap[faces_[f][2]]});
            }
        }
        return out;
    }

private:
    Vec3 normal(const Face& f) const
    {
        return (positions_[f[1]] - positions_[f[0]]).cross(positions_[f[2]] - positions_[f[0]]);
    }

    std::vector<Vec3> positions_;
    std::vector<Face> faces_;
    std::vector<bool> face_alive_;
    std::vector<bool> vertex_alive_;
    std::vector<std::vector<int>> incident_;
    int alive_vertices_;
};

} // namespace

Mesh decimate(const Mesh& mesh, int target_vertices, std::uint64_t seed)
{
    if (target_vertices < 4) {
        throw ArgumentError("cannot decimate below 4 vertices");
    }
    CollapseMesh work(mesh);
    std::mt19937_64 rng(seed);
    while (work.alive_vertices() > target_vertices) {
        auto edges = work.edges();
        std::shuffle(edges.begin(), edges.end(), rng);
        std::stable_sort(edges.begin(), edges.end(), [&](const auto& x, const auto& y) {
            return work.edge_length_sq(x.first, x.second) < work.edge_length_sq(y.first, y.second);
        });
        // Vertices touched in this pass are frozen until the next one so the
        // collapses spread evenly over the surface.
        std::vector<bool> touched(mesh.vertices.size(), false);
        const int before = work.alive_vertices();
        for (auto [a, b] : edges) {
            if (work.alive_vertices() <= target_vertices) {
                break;
            }
            if (!work.alive(a) || !work.alive(b) || touched[a] || touched[b]) {
                continue;
            }
            auto [u, v] = (rng() & 1U) ? std::pair{a, b} : std::pair{b, a};
            if (work.collapse(u, v)) {
                for (int w : work.neighbors(u)) {
                    touched[w] = true;
                }
                touched[u] = true;
            }
        }
        if (work.alive_vertices() == before) {
            throw MeshError("decimation stalled at " + std::to_string(before) + " vertices");
        }
    }
    Mesh out = work.compact();
    validate_mesh(out);
    return out;
}

Mesh remesh(const Mesh& mesh, std::uint64_t seed, std::optional<int> target_vertices)
{
    return decimate(midpoint_subdivide(mesh), target_vertices.value_or(mesh.num_vertices()), seed);
}

} // namespace lapnet
