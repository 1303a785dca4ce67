#pragma once

#include <lapnet/laplacian.hpp>
#include <lapnet/mesh.hpp>

#include <Eigen/Core>

#include <cstdint>
#include <vector>

namespace lapnet {

/// Lowest eigenpairs of (D - W) phi = lambda A phi, ascending, with
/// A-orthonormal eigenvector columns.
struct SpectralBasis {
    Eigen::VectorXd eigenvalues;
    Eigen::MatrixXd eigenvectors;

    int num_modes() const { return static_cast<int>(eigenvalues.size()); }
};

enum class EigenMethod {
    /// Shift-invert subspace iteration; falls back to dense for small meshes
    /// when the iteration does not converge.
    Automatic,
    Iterative,
    Dense,
};

struct EigenOptions {
    EigenMethod method = EigenMethod::Automatic;
    /// Convergence target on ||(D-W)phi - lambda A phi|| / ||A phi||, relative to
    /// the largest requested eigenvalue.
    double tolerance = 1e-11;
    int max_iterations = 500;
    /// Largest N for which the dense fallback is attempted.
    int dense_fallback_limit = 3000;
    std::uint64_t seed = 0x5eedf00dULL;
};

/// Solves for `k + 1` modes: the constant mode plus `k` nonconstant ones.
/// Each eigenvector is sign-normalized so that its largest-magnitude entry
/// (lowest index on ties) is positive.
SpectralBasis solve_eigs(const LaplacianOperator& op, int k, const EigenOptions& options = {});

/// Largest residual ||(D-W)phi - lambda A phi||_2 / ||A phi||_2 over all modes.
double max_residual(const LaplacianOperator& op, const SpectralBasis& basis);

/// Largest |phi_i^T A phi_j - delta_ij|.
double orthonormality_error(const LaplacianOperator& op, const SpectralBasis& basis);

// ---------------------------------------------------------------------------
// Features and clustering

inline constexpr int kDefaultEigenFeatures = 16;
inline constexpr int kInputFeatureDim = 6 + kDefaultEigenFeatures;

struct FeatureOptions {
    int eigen_features = kDefaultEigenFeatures;
    /// Use phi_0..phi_{k-1} instead of phi_1..phi_k.
    bool include_constant = false;
};

/// Absolute values of the selected eigenvector columns, N x eigen_features.
Eigen::MatrixXd eigen_feature_columns(const SpectralBasis& basis, const FeatureOptions& options = {});

/// Signed eigenvector columns (same selection as eigen_feature_columns).
Eigen::MatrixXd signed_eigen_columns(const SpectralBasis& basis, const FeatureOptions& options = {});

/// Positions centered on the centroid and scaled to unit bounding-box diagonal.
Eigen::MatrixXd normalized_positions(const std::vector<Vec3>& positions);

/// Row layout: [xyz (3), normal (3), |phi| columns].
Matrix assemble_features(const std::vector<Vec3>& positions,
                         const std::vector<Vec3>& normals,
                         const Eigen::MatrixXd& abs_eigen_columns);

Matrix build_input_features(const Mesh& mesh,
                            const std::vector<Vec3>& normals,
                            const SpectralBasis& basis,
                            const FeatureOptions& options = {});

struct KMeansOptions {
    int max_iterations = 300;
    /// Independent k-means++ initializations; the lowest-inertia result wins.
    int restarts = 10;
};

/// Lloyd k-means with k-means++ seeding. Points are processed in
/// lexicographic row order so the result is equivariant under row
/// permutations; cluster ids are numbered in seeding order.
std::vector<int> kmeans(const Eigen::MatrixXd& points, int k, std::uint64_t seed, const KMeansOptions& options = {});

/// Sum of squared distances of each point to its cluster mean.
double kmeans_inertia(const Eigen::MatrixXd& points, const std::vector<int>& mask, int k);

struct PoolingLevel {
    int clusters = 0;
    std::vector<int> mask;
};

struct PoolingHierarchy {
    std::vector<PoolingLevel> levels;

    int num_levels() const { return static_cast<int>(levels.size()); }
};

/// Throws ArgumentError unless every level has ids in [0, clusters), no empty
/// clusters, and strictly decreasing cluster counts.
void validate_hierarchy(const PoolingHierarchy& hierarchy, int num_vertices);

struct HierarchyOptions {
    FeatureOptions features;
    /// Cluster on signed eigenvectors instead of their absolute values.
    bool cluster_on_signed = false;
    KMeansOptions kmeans;
};

/// One k-means run per level on the eigenvector feature rows.
PoolingHierarchy build_hierarchy(const SpectralBasis& basis,
                                 const std::vector<int>& cluster_counts,
                                 std::uint64_t seed,
                                 const HierarchyOptions& options = {});

} // namespace lapnet
