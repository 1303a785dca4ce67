#pragma once

#include <lapnet/spectral.hpp>

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace lapnet {

/// Parameters of the per-mesh preprocessing. Everything here feeds the
/// cache fingerprint.
struct PreprocessParams {
    int eigen_count = kDefaultEigenFeatures;
    std::vector<int> cluster_counts{16, 8};
    bool include_constant = false;
    bool cluster_on_signed = false;
    std::uint64_t seed = 1;
    EigenOptions eigen;
    KMeansOptions kmeans;

    int feature_dim() const { return 6 + eigen_count; }
};

std::uint64_t params_fingerprint(const PreprocessParams& params);

/// Precomputed per-mesh inputs: raw positions and normals, absolute
/// eigenvector feature columns, eigenvalues and the pooling hierarchy.
struct FeatureCache {
    std::uint64_t mesh_hash = 0;
    std::uint64_t fingerprint = 0;
    std::vector<Vec3> positions;
    std::vector<Vec3> normals;
    Eigen::MatrixXd eigen_columns;
    Eigen::VectorXd eigenvalues;
    PoolingHierarchy hierarchy;

    int num_vertices() const { return static_cast<int>(positions.size()); }
    /// N x (6 + eigen columns) network input.
    Matrix features() const;
};

/// normals -> Laplacian -> eigenpairs -> |phi| columns -> k-means hierarchy.
FeatureCache preprocess_mesh(const Mesh& mesh, const PreprocessParams& params);

class CacheError : public Error {
public:
    using Error::Error;
};

inline constexpr std::uint32_t kFeatureCacheVersion = 1;

/// Little-endian binary file written atomically. Layout: 8-byte magic,
/// u32 version, then tagged sections (u32 tag, u64 byte length, payload),
/// then a u64 FNV-1a checksum of everything before it.
void save_feature_cache(const std::filesystem::path& path, const FeatureCache& cache);

/// Throws CacheError on any structural problem or checksum mismatch.
FeatureCache load_feature_cache(const std::filesystem::path& path);

/// True when `path` holds a valid cache for this mesh hash and fingerprint.
bool cache_is_current(const std::filesystem::path& path, std::uint64_t mesh_hash, std::uint64_t fingerprint);

// ---------------------------------------------------------------------------
// Labels

/// One `mesh_id category` pair per manifest line; `#` starts a comment.
struct ManifestEntry {
    std::string mesh_id;
    int category = 0;
};

std::vector<ManifestEntry> load_manifest(const std::filesystem::path& path);
void save_manifest(const std::filesystem::path& path, const std::vector<ManifestEntry>& entries);

/// One integer label per line, one line per vertex.
std::vector<int> load_vertex_labels(const std::filesystem::path& path);
void save_vertex_labels(const std::filesystem::path& path, const std::vector<int>& labels);

} // namespace lapnet
