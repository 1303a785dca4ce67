#pragma once

#include <lapnet/common.hpp>

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <array>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace lapnet {

using Vec3 = Eigen::Vector3d;
using Face = std::array<int, 3>;

/// Triangle mesh: positions plus counter-clockwise vertex-index triples.
struct Mesh {
    std::vector<Vec3> vertices;
    std::vector<Face> faces;

    int num_vertices() const { return static_cast<int>(vertices.size()); }
    int num_faces() const { return static_cast<int>(faces.size()); }
};

/// Faces whose area falls below this fraction of the squared bounding-box
/// diagonal are rejected as degenerate.
inline constexpr double kDegenerateAreaFraction = 1e-12;

double bounding_box_diagonal(const Mesh& mesh);
double face_area(const Mesh& mesh, const Face& face);
double surface_area(const Mesh& mesh);

/// Throws MeshError on out-of-range indices, repeated vertices in a face, or
/// degenerate faces.
void validate_mesh(const Mesh& mesh);

/// ASCII OBJ reader. Only `v` and `f` records are used; `f` accepts the
/// `i`, `i/t`, `i//n` and `i/t/n` forms and negative (relative) indices.
Mesh load_obj(const std::filesystem::path& path);
Mesh parse_obj(std::istream& in);

void save_obj(const Mesh& mesh, const std::filesystem::path& path);
void write_obj(const Mesh& mesh, std::ostream& out);

struct VertexNormals {
    std::vector<Vec3> normals;
    /// Vertices without incident faces; their normal is the zero vector.
    std::vector<int> isolated;
    std::vector<std::string> warnings;
};

/// Area-weighted average of incident face normals, normalized per vertex.
VertexNormals compute_vertex_normals(const Mesh& mesh);

/// Barycentric vertex areas: one third of the summed area of incident faces.
struct VertexAreas {
    Eigen::VectorXd values;
};

VertexAreas compute_vertex_areas(const Mesh& mesh);

/// Content hash over vertex coordinates and face indices.
std::uint64_t mesh_hash(const Mesh& mesh);

} // namespace lapnet
