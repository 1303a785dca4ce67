#include <lapnet/ply.hpp>

#include <fstream>
#include <iomanip>
#include <ostream>

namespace lapnet {

Rgb label_color(int label)
{
    if (label < 0) {
        throw ArgumentError("negative label " + std::to_string(label));
    }
    return kLabelPalette[static_cast<std::size_t>(label) % kLabelPalette.size()];
}

void write_ply(std::ostream& out, const Mesh& mesh, const std::vector<int>& labels)
{
    if (static_cast<int>(labels.size()) != mesh.num_vertices()) {
        throw ArgumentError("one label per vertex is required");
    }
    out << "ply\nformat ascii 1.0\n"
        << "element vertex " << mesh.num_vertices() << '\n'
        << "property float x\nproperty float y\nproperty float z\n"
        << "property uchar red\nproperty uchar green\nproperty uchar blue\n"
        << "element face " << mesh.num_faces() << '\n'
        << "property list uchar int vertex_indices\n"
        << "end_header\n";
    out << std::setprecision(9);
    for (std::size_t i = 0; i < mesh.vertices.size(); ++i) {
        const auto& p = mesh.vertices[i];
        const Rgb c = label_color(labels[i]);
        out << p.x() << ' ' << p.y() << ' ' << p.z() << ' ' << int{c[0]} << ' ' << int{c[1]} << ' ' << int{c[2]} << '\n';
    }
    for (const auto& f : mesh.faces) {
        out << "3 " << f[0] << ' ' << f[1] << ' ' << f[2] << '\n';
    }
}

void save_ply(const std::filesystem::path& path, const Mesh& mesh, const std::vector<int>& labels)
{
    std::ofstream out(path);
    if (!out) {
        throw Error("cannot write " + path.string());
    }
    write_ply(out, mesh, labels);
    if (!out) {
        throw Error("write failed for " + path.string());
    }
}

} // namespace lapnet
