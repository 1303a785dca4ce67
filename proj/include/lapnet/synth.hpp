#pragma once

#include <lapnet/mesh.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace lapnet {

enum class ShapeFamily { Sphere, Torus, Cylinder, Dumbbell };

std::string family_name(ShapeFamily family);
/// Throws ArgumentError for unknown names.
ShapeFamily parse_family(const std::string& name);

enum class LabelRule {
    /// Every vertex gets label 0.
    None,
    /// Dumbbell: left ball 0, right ball 1, neck 2.
    DumbbellThreePart,
    /// Dumbbell: split at the symmetry plane z = 0 (left 0, right 1).
    DumbbellTwoPart,
};

struct SyntheticSpec {
    ShapeFamily family = ShapeFamily::Sphere;
    /// Subdivision level of the icosphere; the other families aim for the
    /// same vertex count, 10 * 4^r + 2.
    int resolution = 2;
    /// Overrides the vertex-count target. The sphere then switches from the
    /// icosphere to a sphere of revolution.
    std::optional<int> target_vertices;
    /// 0 disables deformation.
    std::uint64_t deformation_seed = 0;
    LabelRule labels = LabelRule::None;
};

struct SyntheticMesh {
    Mesh mesh;
    std::vector<int> labels;
};

/// Closed, consistently oriented 2-manifold with deterministic labels.
SyntheticMesh generate_synthetic(const SyntheticSpec& spec);

/// Unit-radius icosphere with 10 * 4^n + 2 vertices.
Mesh make_icosphere(int subdivisions);

/// Torus around the z axis, `rings` x `segments` vertices.
Mesh make_torus(int rings, int segments, double major_radius = 1.0, double minor_radius = 0.4);

/// Seeded anisotropic scaling plus a smooth normal-direction bump.
void deform_mesh(Mesh& mesh, std::uint64_t seed);

/// Splits every triangle into four through edge midpoints.
Mesh midpoint_subdivide(const Mesh& mesh);

/// Edge collapses (to the edge midpoint), shortest edges first with seeded
/// tie-breaking, until the mesh has `target_vertices` vertices. Collapses that
/// break the link condition or flip a face are skipped. Throws MeshError when the target cannot be reached.
Mesh decimate(const Mesh& mesh, int target_vertices, std::uint64_t seed);

/// One midpoint subdivision followed by decimation back to `target_vertices`
/// (the input vertex count when not given).
Mesh remesh(const Mesh& mesh, std::uint64_t seed, std::optional<int> target_vertices = std::nullopt);

/// For each point of `from`, the index of the nearest point of `to` (lowest
/// index on ties).
std::vector<int> nearest_vertices(const std::vector<Vec3>& from, const std::vector<Vec3>& to);

/// V - E + F.
int euler_characteristic(const Mesh& mesh);

/// True when every edge is shared by exactly two faces with opposite
/// orientation.
bool is_closed_manifold(const Mesh& mesh);

} // namespace lapnet
