#include <lapnet/synth.hpp>

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <random>

namespace lapnet {

namespace {

constexpr double kPi = std::numbers::pi;

double uniform01(std::mt19937_64& rng)
{
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

double uniform(std::mt19937_64& rng, double lo, double hi)
{
    return lo + (hi - lo) * uniform01(rng);
}

int target_for_resolution(int resolution)
{
    if (resolution < 0 || resolution > 8) {
        throw ArgumentError("resolution must be in [0, 8]");
    }
    return 10 * (1 << (2 * resolution)) + 2;
}

/// Profile curve in the (rho, z) half-plane from the bottom pole to the top
/// pole, resampled by arc length.
struct Profile {
    std::vector<double> rho;
    std::vector<double> z;
    std::vector<double> arc;

    double length() const { return arc.back(); }

    std::pair<double, double> at(double s) const
    {
        const auto it = std::upper_bound(arc.begin(), arc.end(), s);
        const auto hi = static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(it - arc.begin(), 1, arc.size() - 1));
        const std::size_t lo = hi - 1;
        const double t = (s - arc[lo]) / (arc[hi] - arc[lo]);
        return {rho[lo] + t * (rho[hi] - rho[lo]), z[lo] + t * (z[hi] - z[lo])};
    }

    double mean_radius() const
    {
        double sum = 0.0;
        for (std::size_t i = 1; i < arc.size(); ++i) {
            sum += 0.5 * (rho[i] + rho[i - 1]) * (arc[i] - arc[i - 1]);
        }
        return sum / length();
    }
};

Profile make_profile(std::vector<double> rho, std::vector<double> z)
{
    Profile p{std::move(rho), std::move(z), {}};
    p.arc.assign(p.rho.size(), 0.0);
    for (std::size_t i = 1; i < p.rho.size(); ++i) {
        p.arc[i] = p.arc[i - 1] + std::hypot(p.rho[i] - p.rho[i - 1], p.z[i] - p.z[i - 1]);
    }
    return p;
}

Profile sphere_profile()
{
    constexpr int samples = 4096;
    std::vector<double> rho(samples + 1);
    std::vector<double> z(samples + 1);
    for (int i = 0; i <= samples; ++i) {
        const double t = kPi * i / samples;
        rho[i] = std::sin(t);
        z[i] = -std::cos(t);
    }
    rho.front() = rho.back() = 0.0;
    return make_profile(std::move(rho), std::move(z));
}

/// Cylinder of radius 0.5 and height 2 with flat caps and rounded rims.
Profile cylinder_profile()
{
    constexpr double radius = 0.5;
    constexpr double half_height = 1.0;
    constexpr double fillet = 0.1;
    constexpr int samples = 512;
    std::vector<double> rho;
    std::vector<double> z;
    auto line = [&](double r0, double z0, double r1, double z1) {
        for (int i = 0; i < samples; ++i) {
            const double t = static_cast<double>(i) / samples;
            rho.push_back(r0 + t * (r1 - r0));
            z.push_back(z0 + t * (z1 - z0));
        }
    };
    auto arc = [&](double cr, double cz, double a0, double a1) {
        for (int i = 0; i < samples; ++i) {
            const double a = a0 + (a1 - a0) * i / samples;
            rho.push_back(cr + fillet * std::cos(a));
            z.push_back(cz + fillet * std::sin(a));
        }
    };
    line(0.0, -half_height, radius - fillet, -half_height);
    arc(radius - fillet, -half_height + fillet, -kPi / 2, 0.0);
    line(radius, -half_height + fillet, radius, half_height - fillet);
    arc(radius - fillet, half_height - fillet, 0.0, kPi / 2);
    line(radius - fillet, half_height, 0.0, half_height);
    rho.push_back(0.0);
    z.push_back(half_height);
    return make_profile(std::move(rho), std::move(z));
}

constexpr double kBallRadius = 1.0;
constexpr double kBallOffset = 1.6;
constexpr double kNeckRadius = 0.35;

/// Two unit balls centred at z = +-1.6 joined by a neck of radius 0.35.
Profile dumbbell_profile()
{
    constexpr int samples = 20000;
    constexpr double extent = kBallOffset + kBallRadius;
    std::vector<double> rho(samples + 1);
    std::vector<double> z(samples + 1);
    for (int i = 0; i <= samples; ++i) {
        // Cosine spacing concentrates samples near the poles.
        const double zi = -extent * std::cos(kPi * i / samples);
        const double d = std::abs(zi) - kBallOffset;
        const double ball = std::sqrt(std::max(0.0, kBallRadius * kBallRadius - d * d));
        double r = ball;
        if (std::abs(zi) < kBallOffset) {
            r = std::pow(std::pow(ball, 6.0) + std::pow(kNeckRadius, 6.0), 1.0 / 6.0);
        }
        rho[i] = r;
        z[i] = zi;
    }
    rho.front() = rho.back() = 0.0;
    return make_profile(std::move(rho), std::move(z));
}

Mesh revolve(const Profile& profile, int target_vertices)
{
    const double n = std::max(8, target_vertices - 2);
    const int segments = std::max(6, static_cast<int>(std::lround(std::sqrt(n * 2.0 * kPi * profile.mean_radius() / profile.length()))));
    const int rings = std::max(1, static_cast<int>(std::lround(n / segments)));

    Mesh mesh;
    const auto [rho0, z0] = profile.at(0.0);
    mesh.vertices.emplace_back(0.0, 0.0, z0);
    for (int i = 1; i <= rings; ++i) {
        const auto [rho, z] = profile.at(profile.length() * i / (rings + 1));
        const double offset = 0.5 * (i % 2);
        for (int j = 0; j < segments; ++j) {
            const double theta = 2.0 * kPi * (j + offset) / segments;
            mesh.vertices.emplace_back(rho * std::cos(theta), rho * std::sin(theta), z);
        }
    }
    const auto [rho1, z1] = profile.at(profile.length());
    mesh.vertices.emplace_back(0.0, 0.0, z1);
    (void)rho0;
    (void)rho1;

    const int top = rings * segments + 1;
    auto ring = [segments](int i, int j) { return 1 + (i - 1) * segments + (j % segments); };
    for (int j = 0; j < segments; ++j) {
        mesh.faces.push_back({0, ring(1, j + 1), ring(1, j)});
        mesh.faces.push_back({top, ring(rings, j), ring(rings, j + 1)});
    }
    for (int i = 1; i < rings; ++i) {
        for (int j = 0; j < segments; ++j) {
            const int a = ring(i, j);
            const int b = ring(i, j + 1);
            const int c = ring(i + 1, j);
            const int d = ring(i + 1, j + 1);
            // Odd rings are shifted half a step forward, so pick the shorter
            // diagonal of each staggered quad.
            if (i % 2 == 1) {
                mesh.faces.push_back({a, b, d});
                mesh.faces.push_back({a, d, c});
            } else {
                mesh.faces.push_back({a, b, c});
                mesh.faces.push_back({b, d, c});
            }
        }
    }
    return mesh;
}

std::vector<int> dumbbell_labels(const Mesh& mesh, LabelRule rule)
{
    const double neck_half_length = kBallOffset - std::sqrt(kBallRadius * kBallRadius - kNeckRadius * kNeckRadius);
    std::vector<int> labels(mesh.vertices.size(), 0);
    for (std::size_t i = 0; i < mesh.vertices.size(); ++i) {
        const double z = mesh.vertices[i].z();
        if (rule == LabelRule::DumbbellTwoPart) {
            labels[i] = z < 0.0 ? 0 : 1;
        } else {
            labels[i] = std::abs(z) < neck_half_length ? 2 : (z < 0.0 ? 0 : 1);
        }
    }
    return labels;
}

} // namespace

std::string family_name(ShapeFamily family)
{
    switch (family) {
    case ShapeFamily::Sphere:
        return "sphere";
    case ShapeFamily::Torus:
        return "torus";
    case ShapeFamily::Cylinder:
        return "cylinder";
    case ShapeFamily::Dumbbell:
        return "dumbbell";
    }
    return "unknown";
}

ShapeFamily parse_family(const std::string& name)
{
    for (auto f : {ShapeFamily::Sphere, ShapeFamily::Torus, ShapeFamily::Cylinder, ShapeFamily::Dumbbell}) {
        if (family_name(f) == name) {
            return f;
        }
    }
    throw ArgumentError("unknown shape family '" + name + "' (sphere, torus, cylinder, dumbbell)");
}

Mesh make_icosphere(int subdivisions)
{
    if (subdivisions < 0) {
        throw ArgumentError("subdivision level must be non-negative");
    }
    const double t = (1.0 + std::sqrt(5.0)) / 2.0;
    Mesh mesh;
    for (const auto& v : {Vec3(-1, t, 0), Vec3(1, t, 0), Vec3(-1, -t, 0), Vec3(1, -t, 0), Vec3(0, -1, t), Vec3(0, 1, t),
                          Vec3(0, -1, -t), Vec3(0, 1, -t), Vec3(t, 0, -1), Vec3(t, 0, 1), Vec3(-t, 0, -1), Vec3(-t, 0, 1)}) {
        mesh.vertices.push_back(v.normalized());
    }
    mesh.faces = {{0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11}, {1, 5, 9}, {5, 11, 4},
                  {11, 10, 2}, {10, 7, 6}, {7, 1, 8},  {3, 9, 4},  {3, 4, 2},   {3, 2, 6}, {3, 6, 8},
                  {3, 8, 9},  {4, 9, 5},  {2, 4, 11}, {6, 2, 10}, {8, 6, 7},   {9, 8, 1}};
    for (int s = 0; s < subdivisions; ++s) {
        mesh = midpoint_subdivide(mesh);
        for (auto& v : mesh.vertices) {
            v.normalize();
        }
    }
    return mesh;
}

Mesh make_torus(int rings, int segments, double major_radius, double minor_radius)
{
    if (rings < 3 || segments < 3) {
        throw ArgumentError("torus needs at least 3 rings and 3 segments");
    }
    Mesh mesh;
    for (int i = 0; i < rings; ++i) {
        const double phi = 2.0 * kPi * i / rings;
        for (int j = 0; j < segments; ++j) {
            const double theta = 2.0 * kPi * j / segments;
            const double r = major_radius + minor_radius * std::cos(theta);
            mesh.vertices.emplace_back(r * std::cos(phi), r * std::sin(phi), minor_radius * std::sin(theta));
        }
    }
    auto at = [&](int i, int j) { return (i % rings) * segments + (j % segments); };
    for (int i = 0; i < rings; ++i) {
        for (int j = 0; j < segments; ++j) {
            const int a = at(i, j);
            const int b = at(i + 1, j);
            const int c = at(i, j + 1);
            const int d = at(i + 1, j + 1);
            mesh.faces.push_back({a, b, c});
            mesh.faces.push_back({b, d, c});
        }
    }
    return mesh;
}

void deform_mesh(Mesh& mesh, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    const Vec3 scale(uniform(rng, 0.8, 1.2), uniform(rng, 0.8, 1.2), uniform(rng, 0.8, 1.2));
    const double diag = bounding_box_diagonal(mesh);
    const auto center = mesh.vertices[static_cast<std::size_t>(rng() % mesh.vertices.size())];
    const double amplitude = uniform(rng, 0.02, 0.05) * diag;
    const double sigma = 0.12 * diag;

    const auto normals = compute_vertex_normals(mesh).normals;
    for (std::size_t i = 0; i < mesh.vertices.size(); ++i) {
        const double d2 = (mesh.vertices[i] - center).squaredNorm();
        mesh.vertices[i] += amplitude * std::exp(-d2 / (2.0 * sigma * sigma)) * normals[i];
    }
    for (auto& v : mesh.vertices) {
        v = v.cwiseProduct(scale);
    }
}

SyntheticMesh generate_synthetic(const SyntheticSpec& spec)
{
    const int target = spec.target_vertices.value_or(target_for_resolution(spec.resolution));
    if (target < 8) {
        throw ArgumentError("target vertex count must be at least 8");
    }
    if (spec.labels != LabelRule::None && spec.family != ShapeFamily::Dumbbell) {
        throw ArgumentError("part labels are only defined for the dumbbell family");
    }

    SyntheticMesh out;
    switch (spec.family) {
    case ShapeFamily::Sphere:
        out.mesh = spec.target_vertices ? revolve(sphere_profile(), target) : make_icosphere(spec.resolution);
        break;
    case ShapeFamily::Torus: {
        constexpr double ratio = 2.5;
        const int segments = std::max(3, static_cast<int>(std::lround(std::sqrt(target / ratio))));
        const int rings = std::max(3, static_cast<int>(std::lround(static_cast<double>(target) / segments)));
        out.mesh = make_torus(rings, segments);
        break;
    }
    case ShapeFamily::Cylinder:
        out.mesh = revolve(cylinder_profile(), target);
        break;
    case ShapeFamily::Dumbbell:
        out.mesh = revolve(dumbbell_profile(), target);
        break;
    }

    if (spec.labels == LabelRule::None) {
        out.labels.assign(out.mesh.vertices.size(), 0);
    } else {
        out.labels = dumbbell_labels(out.mesh, spec.labels);
    }
    if (spec.deformation_seed != 0) {
        deform_mesh(out.mesh, spec.deformation_seed);
    }
    validate_mesh(out.mesh);
    return out;
}

Mesh midpoint_subdivide(const Mesh& mesh)
{
    Mesh out;
    out.vertices = mesh.vertices;
    std::map<std::pair<int, int>, int> midpoints;
    auto midpoint = [&](int a, int b) {
        const auto key = std::minmax(a, b);
        const auto [it, inserted] = midpoints.emplace(key, static_cast<int>(out.vertices.size()));
        if (inserted) {
            out.vertices.push_back(0.5 * (mesh.vertices[a] + mesh.vertices[b]));
        }
        return it->second;
    };
    out.faces.reserve(mesh.faces.size() * 4);
    for (const auto& f : mesh.faces) {
        const int ab = midpoint(f[0], f[1]);
        const int bc = midpoint(f[1], f[2]);
        const int ca = midpoint(f[2], f[0]);
        out.faces.push_back({f[0], ab, ca});
        out.faces.push_back({f[1], bc, ab});
        out.faces.push_back({f[2], ca, bc});
        out.faces.push_back({ab, bc, ca});
    }
    return out;
}

int euler_characteristic(const Mesh& mesh)
{
    std::map<std::pair<int, int>, int> edges;
    for (const auto& f : mesh.faces) {
        for (int k = 0; k < 3; ++k) {
            ++edges[std::minmax(f[k], f[(k + 1) % 3])];
        }
    }
    return mesh.num_vertices() - static_cast<int>(edges.size()) + mesh.num_faces();
}

bool is_closed_manifold(const Mesh& mesh)
{
    std::map<std::pair<int, int>, int> directed;
    for (const auto& f : mesh.faces) {
        for (int k = 0; k < 3; ++k) {
            ++directed[{f[k], f[(k + 1) % 3]}];
        }
    }
    for (const auto& [edge, count] : directed) {
        const auto reverse = directed.find({edge.second, edge.first});
        if (count != 1 || reverse == directed.end() || reverse->second != 1) {
            return false;
        }
    }
    return true;
}

std::vector<int> nearest_vertices(const std::vector<Vec3>& from, const std::vector<Vec3>& to)
{
    if (to.empty()) {
        throw ArgumentError("nearest_vertices: target point set is empty");
    }
    std::vector<int> nearest(from.size(), 0);
    for (std::size_t i = 0; i < from.size(); ++i) {
        double best = (from[i] - to[0]).squaredNorm();
        for (std::size_t j = 1; j < to.size(); ++j) {
            const double d = (from[i] - to[j]).squaredNorm();
            if (d < best) {
                best = d;
                nearest[i] = static_cast<int>(j);
            }
        }
    }
    return nearest;
}

} // namespace lapnet
