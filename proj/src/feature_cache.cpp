#include <lapnet/pipeline.hpp>

#include "binary_io.hpp"

#include <array>

namespace lapnet {

namespace {

constexpr std::array<char, 8> kMagic{'L', 'A', 'P', 'N', 'F', 'E', 'A', 'T'};

enum Tag : std::uint32_t {
    kHeader = 1,
    kPositions = 2,
    kNormals = 3,
    kEigenColumns = 4,
    kEigenvalues = 5,
    kHierarchy = 6,
};

void put_section(detail::ByteWriter& out, Tag tag, detail::ByteWriter& body)
{
    out.put<std::uint32_t>(tag);
    out.put<std::uint64_t>(body.bytes().size());
    out.put_bytes(body.bytes().data(), body.bytes().size());
}

void put_points(detail::ByteWriter& w, const std::vector<Vec3>& points)
{
    for (const auto& p : points) {
        w.put_bytes(p.data(), 3 * sizeof(double));
    }
}

std::vector<Vec3> get_points(detail::ByteReader& r, std::size_t n)
{
    std::vector<Vec3> points(n);
    for (auto& p : points) {
        r.get_bytes(p.data(), 3 * sizeof(double));
    }
    return points;
}

/// Reads the next section header and returns a reader over its body.
detail::ByteReader open_section(detail::ByteReader& r, const std::uint8_t* base, Tag expected)
{
    const auto tag = r.get<std::uint32_t>();
    if (tag != expected) {
        throw CacheError("expected section " + std::to_string(expected) + ", found " + std::to_string(tag));
    }
    const auto length = r.get<std::uint64_t>();
    if (length > r.remaining()) {
        throw CacheError("section " + std::to_string(tag) + " overruns the file");
    }
    detail::ByteReader body(base + r.position(), length);
    r.skip(length);
    return body;
}

void expect_consumed(const detail::ByteReader& body, Tag tag)
{
    if (body.remaining() != 0) {
        throw CacheError("section " + std::to_string(tag) + " has a bad length");
    }
}

} // namespace

void save_feature_cache(const std::filesystem::path& path, const FeatureCache& cache)
{
    const auto n = static_cast<std::size_t>(cache.num_vertices());
    if (cache.normals.size() != n || static_cast<std::size_t>(cache.eigen_columns.rows()) != n) {
        throw ArgumentError("feature cache arrays disagree on vertex count");
    }
    validate_hierarchy(cache.hierarchy, cache.num_vertices());

    detail::ByteWriter file;
    file.put_bytes(kMagic.data(), kMagic.size());
    file.put<std::uint32_t>(kFeatureCacheVersion);

    detail::ByteWriter header;
    header.put<std::uint64_t>(cache.mesh_hash);
    header.put<std::uint64_t>(cache.fingerprint);
    header.put<std::uint64_t>(n);
    header.put<std::uint32_t>(static_cast<std::uint32_t>(cache.eigen_columns.cols()));
    header.put<std::uint32_t>(static_cast<std::uint32_t>(cache.eigenvalues.size()));
    header.put<std::uint32_t>(static_cast<std::uint32_t>(cache.hierarchy.num_levels()));
    put_section(file, kHeader, header);

    detail::ByteWriter positions;
    put_points(positions, cache.positions);
    put_section(file, kPositions, positions);

    detail::ByteWriter normals;
    put_points(normals, cache.normals);
    put_section(file, kNormals, normals);

    // Column-major, as stored by Eigen::MatrixXd.
    detail::ByteWriter columns;
    columns.put_bytes(cache.eigen_columns.data(), static_cast<std::size_t>(cache.eigen_columns.size()) * sizeof(double));
    put_section(file, kEigenColumns, columns);

    detail::ByteWriter values;
    values.put_bytes(cache.eigenvalues.data(), static_cast<std::size_t>(cache.eigenvalues.size()) * sizeof(double));
    put_section(file, kEigenvalues, values);

    detail::ByteWriter hierarchy;
    for (const auto& level : cache.hierarchy.levels) {
        hierarchy.put<std::int32_t>(level.clusters);
        for (int id : level.mask) {
            hierarchy.put<std::int32_t>(id);
        }
    }
    put_section(file, kHierarchy, hierarchy);

    file.put<std::uint64_t>(fnv1a(file.bytes()));
    detail::write_file_atomic(path, file.bytes());
}

FeatureCache load_feature_cache(const std::filesystem::path& path)
{
    std::vector<std::uint8_t> bytes;
    try {
        bytes = detail::read_file(path);
    } catch (const Error& e) {
        throw CacheError(e.what());
    }
    const std::string where = path.string() + ": ";
    if (bytes.size() < kMagic.size() + sizeof(std::uint32_t) + sizeof(std::uint64_t)) {
        throw CacheError(where + "file too short");
    }
    const std::size_t body_size = bytes.size() - sizeof(std::uint64_t);
    std::uint64_t checksum = 0;
    std::memcpy(&checksum, bytes.data() + body_size, sizeof(checksum));
    if (checksum != fnv1a({bytes.data(), body_size})) {
        throw CacheError(where + "checksum mismatch");
    }

    FeatureCache cache;
    try {
        detail::ByteReader r(bytes.data(), body_size);
        std::array<char, 8> magic{};
        r.get_bytes(magic.data(), magic.size());
        if (magic != kMagic) {
            throw CacheError("not a feature cache");
        }
        const auto version = r.get<std::uint32_t>();
        if (version != kFeatureCacheVersion) {
            throw CacheError("unsupported cache version " + std::to_string(version));
        }

        auto header = open_section(r, bytes.data(), kHeader);
        cache.mesh_hash = header.get<std::uint64_t>();
        cache.fingerprint = header.get<std::uint64_t>();
        const auto n = header.get<std::uint64_t>();
        const auto cols = header.get<std::uint32_t>();
        const auto num_values = header.get<std::uint32_t>();
        const auto levels = header.get<std::uint32_t>();
        expect_consumed(header, kHeader);
        if (n == 0 || n > (std::uint64_t{1} << 31)) {
            throw CacheError("implausible vertex count");
        }

        auto positions = open_section(r, bytes.data(), kPositions);
        cache.positions = get_points(positions, n);
        expect_consumed(positions, kPositions);

        auto normals = open_section(r, bytes.data(), kNormals);
        cache.normals = get_points(normals, n);
        expect_consumed(normals, kNormals);

        auto columns = open_section(r, bytes.data(), kEigenColumns);
        cache.eigen_columns.resize(static_cast<Eigen::Index>(n), cols);
        columns.get_bytes(cache.eigen_columns.data(), static_cast<std::size_t>(cache.eigen_columns.size()) * sizeof(double));
        expect_consumed(columns, kEigenColumns);

        auto values = open_section(r, bytes.data(), kEigenvalues);
        cache.eigenvalues.resize(num_values);
        values.get_bytes(cache.eigenvalues.data(), num_values * sizeof(double));
        expect_consumed(values, kEigenvalues);

        auto hierarchy = open_section(r, bytes.data(), kHierarchy);
        for (std::uint32_t l = 0; l < levels; ++l) {
            PoolingLevel level;
            level.clusters = hierarchy.get<std::int32_t>();
            level.mask.resize(n);
            for (auto& id : level.mask) {
                id = hierarchy.get<std::int32_t>();
            }
            cache.hierarchy.levels.push_back(std::move(level));
        }
        expect_consumed(hierarchy, kHierarchy);
        if (r.remaining() != 0) {
            throw CacheError("trailing data");
        }
        validate_hierarchy(cache.hierarchy, static_cast<int>(n));
    } catch (const Error& e) {
        throw CacheError(where + e.what());
    }
    return cache;
}

bool cache_is_current(const std::filesystem::path& path, std::uint64_t mesh_hash, std::uint64_t fingerprint)
{
    if (!std::filesystem::exists(path)) {
        return false;
    }
    try {
        const FeatureCache cache = load_feature_cache(path);
        return cache.mesh_hash == mesh_hash && cache.fingerprint == fingerprint;
    } catch (const CacheError&) {
        return false;
    }
}

} // namespace lapnet
