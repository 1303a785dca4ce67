#include <lapnet/pipeline.hpp>

#include <fstream>
#include <set>
#include <sstream>

namespace lapnet {

namespace {

std::ifstream open_text(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) {
        throw Error("cannot open " + path.string());
    }
    return in;
}

std::string strip_comment(const std::string& line)
{
    const auto hash = line.find('#');
    return hash == std::string::npos ? line : line.substr(0, hash);
}

} // namespace

std::vector<ManifestEntry> load_manifest(const std::filesystem::path& path)
{
    auto in = open_text(path);
    std::vector<ManifestEntry> entries;
    std::set<std::string> seen;
    std::string line;
    std::size_t number = 0;
    while (std::getline(in, line)) {
        ++number;
        std::istringstream fields(strip_comment(line));
        ManifestEntry entry;
        if (!(fields >> entry.mesh_id)) {
            continue;
        }
        std::string extra;
        if (!(fields >> entry.category) || (fields >> extra) || entry.category < 0) {
            throw ParseError("expected `mesh_id category`", number, path.string());
        }
        if (!seen.insert(entry.mesh_id).second) {
            throw ParseError("duplicate mesh id '" + entry.mesh_id + "'", number, path.string());
        }
        entries.push_back(std::move(entry));
    }
    return entries;
}

void save_manifest(const std::filesystem::path& path, const std::vector<ManifestEntry>& entries)
{
    std::ofstream out(path);
    if (!out) {
        throw Error("cannot write " + path.string());
    }
    out << "# mesh_id category\n";
    for (const auto& e : entries) {
        out << e.mesh_id << ' ' << e.category << '\n';
    }
}

std::vector<int> load_vertex_labels(const std::filesystem::path& path)
{
    auto in = open_text(path);
    std::vector<int> labels;
    std::string line;
    std::size_t number = 0;
    while (std::getline(in, line)) {
        ++number;
        std::istringstream fields(strip_comment(line));
        std::string token;
        if (!(fields >> token)) {
            continue;
        }
        std::size_t used = 0;
        int label = -1;
        try {
            label = std::stoi(token, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        std::string extra;
        if (used != token.size() || (fields >> extra) || label < 0) {
            throw ParseError("expected one non-negative integer", number, path.string());
        }
        labels.push_back(label);
    }
    return labels;
}

void save_vertex_labels(const std::filesystem::path& path, const std::vector<int>& labels)
{
    std::ofstream out(path);
    if (!out) {
        throw Error("cannot write " + path.string());
    }
    for (int label : labels) {
        out << label << '\n';
    }
}

} // namespace lapnet
