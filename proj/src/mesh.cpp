#include <lapnet/mesh.hpp>

#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

namespace lapnet {

namespace {

Vec3 face_cross(const Mesh& mesh, const Face& f)
{
    const Vec3& a = mesh.vertices[f[0]];
    const Vec3& b = mesh.vertices[f[1]];
    const Vec3& c = mesh.vertices[f[2]];
    return (b - a).cross(c - a);
}

bool parse_double(std::string_view token, double& out)
{
    const auto* end = token.data() + token.size();
    auto [ptr, ec] = std::from_chars(token.data(), end, out);
    return ec == std::errc() && ptr == end;
}

// Parses the vertex part of an OBJ face token ("12", "12/3", "12//4", "-1").
bool parse_face_index(std::string_view token, long& out)
{
    auto slash = token.find('/');
    auto head = token.substr(0, slash);
    if (head.empty()) {
        return false;
    }
    const auto* end = head.data() + head.size();
    auto [ptr, ec] = std::from_chars(head.data(), end, out);
    return ec == std::errc() && ptr == end && out != 0;
}

std::vector<std::string_view> split_ws(std::string_view line)
{
    std::vector<std::string_view> tokens;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) {
            ++i;
        }
        std::size_t j = i;
        while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j]))) {
            ++j;
        }
        if (j > i) {
            tokens.push_back(line.substr(i, j - i));
        }
        i = j;
    }
    return tokens;
}

} // namespace

double bounding_box_diagonal(const Mesh& mesh)
{
    if (mesh.vertices.empty()) {
        return 0.0;
    }
    Vec3 lo = mesh.vertices.front();
    Vec3 hi = lo;
    for (const auto& v : mesh.vertices) {
        lo = lo.cwiseMin(v);
        hi = hi.cwiseMax(v);
    }
    return (hi - lo).norm();
}

double face_area(const Mesh& mesh, const Face& face)
{
    return 0.5 * face_cross(mesh, face).norm();
}

double surface_area(const Mesh& mesh)
{
    double total = 0.0;
    for (const auto& f : mesh.faces) {
        total += face_area(mesh, f);
    }
    return total;
}

void validate_mesh(const Mesh& mesh)
{
    const int n = mesh.num_vertices();
    const double diag = bounding_box_diagonal(mesh);
    const double min_area = kDegenerateAreaFraction * diag * diag;
    for (std::size_t fi = 0; fi < mesh.faces.size(); ++fi) {
        const Face& f = mesh.faces[fi];
        for (int idx : f) {
            if (idx < 0 || idx >= n) {
                throw MeshError("face " + std::to_string(fi) + " references vertex "
                                + std::to_string(idx) + " outside [0, " + std::to_string(n) + ")");
            }
        }
        if (f[0] == f[1] || f[1] == f[2] || f[0] == f[2]) {
            throw MeshError("face " + std::to_string(fi) + " repeats a vertex");
        }
        if (!(face_area(mesh, f) >= min_area) || min_area == 0.0) {
            throw MeshError("face " + std::to_string(fi) + " is degenerate");
        }
    }
}

Mesh parse_obj(std::istream& in)
{
    Mesh mesh;
    std::vector<std::size_t> face_lines;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        auto tokens = split_ws(line);
        if (tokens.empty() || tokens[0].front() == '#') {
            continue;
        }
        if (tokens[0] == "v") {
            if (tokens.size() < 4) {
                throw ParseError("vertex record needs three coordinates", line_no);
            }
            Vec3 p;
            for (int k = 0; k < 3; ++k) {
                if (!parse_double(tokens[k + 1], p[k]) || !std::isfinite(p[k])) {
                    throw ParseError("malformed vertex coordinate '" + std::string(tokens[k + 1]) + "'",
                                     line_no);
                }
            }
            mesh.vertices.push_back(p);
        } else if (tokens[0] == "f") {
            if (tokens.size() != 4) {
                throw ParseError(tokens.size() > 4 ? "non-triangular face" : "face needs three vertices",
                                 line_no);
            }
            Face f{};
            const long n = static_cast<long>(mesh.vertices.size());
            for (int k = 0; k < 3; ++k) {
                long idx = 0;
                if (!parse_face_index(tokens[k + 1], idx)) {
                    throw ParseError("malformed face index '" + std::string(tokens[k + 1]) + "'", line_no);
                }
                long zero_based = idx > 0 ? idx - 1 : n + idx;
                if (zero_based < 0 || zero_based >= n) {
                    throw ParseError("face index " + std::to_string(idx) + " out of range", line_no);
                }
                f[k] = static_cast<int>(zero_based);
            }
            mesh.faces.push_back(f);
            face_lines.push_back(line_no);
        }
    }

    // The degenerate-area threshold depends on the bounding box, so face checks
    // run once every vertex is known.
    const double diag = bounding_box_diagonal(mesh);
    const double min_area = kDegenerateAreaFraction * diag * diag;
    for (std::size_t fi = 0; fi < mesh.faces.size(); ++fi) {
        const Face& f = mesh.faces[fi];
        if (f[0] == f[1] || f[1] == f[2] || f[0] == f[2]) {
            throw ParseError("face repeats a vertex", face_lines[fi]);
        }
        if (!(face_area(mesh, f) >= min_area) || min_area == 0.0) {
            throw ParseError("degenerate face", face_lines[fi]);
        }
    }
    return mesh;
}

Mesh load_obj(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) {
        throw Error("cannot open " + path.string());
    }
    try {
        return parse_obj(in);
    } catch (const ParseError& e) {
        throw ParseError(e.detail(), e.line(), path.filename().string());
    }
}

void write_obj(const Mesh& mesh, std::ostream& out)
{
    out << std::setprecision(17);
    for (const auto& v : mesh.vertices) {
        out << "v " << v.x() << ' ' << v.y() << ' ' << v.z() << '\n';
    }
    for (const auto& f : mesh.faces) {
        out << "f " << f[0] + 1 << ' ' << f[1] + 1 << ' ' << f[2] + 1 << '\n';
    }
}

void save_obj(const Mesh& mesh, const std::filesystem::path& path)
{
    std::ofstream out(path);
    if (!out) {
        throw Error("cannot write " + path.string());
    }
    write_obj(mesh, out);
}

VertexNormals compute_vertex_normals(const Mesh& mesh)
{
    VertexNormals result;
    result.normals.assign(mesh.vertices.size(), Vec3::Zero());
    std::vector<int> incident(mesh.vertices.size(), 0);
    for (const auto& f : mesh.faces) {
        // Unnormalized cross product has length 2*area: area weighting for free.
        Vec3 n = face_cross(mesh, f);
        for (int idx : f) {
            result.normals[idx] += n;
            ++incident[idx];
        }
    }
    for (std::size_t i = 0; i < result.normals.size(); ++i) {
        const double len = result.normals[i].norm();
        if (incident[i] == 0 || len == 0.0) {
            result.normals[i].setZero();
            result.isolated.push_back(static_cast<int>(i));
            result.warnings.push_back("vertex " + std::to_string(i) + " has no incident face; normal set to zero");
        } else {
            result.normals[i] /= len;
        }
    }
    return result;
}

VertexAreas compute_vertex_areas(const Mesh& mesh)
{
    VertexAreas areas;
    areas.values = Eigen::VectorXd::Zero(mesh.num_vertices());
    for (const auto& f : mesh.faces) {
        const double third = face_area(mesh, f) / 3.0;
        for (int idx : f) {
            areas.values[idx] += third;
        }
    }
    return areas;
}

std::uint64_t mesh_hash(const Mesh& mesh)
{
    Fnv1a h;
    const std::uint64_t nv = mesh.vertices.size();
    const std::uint64_t nf = mesh.faces.size();
    h.update_value(nv);
    h.update_value(nf);
    for (const auto& v : mesh.vertices) {
        h.update(v.data(), 3 * sizeof(double));
    }
    for (const auto& f : mesh.faces) {
        h.update(f.data(), 3 * sizeof(int));
    }
    return h.digest();
}

} // namespace lapnet
