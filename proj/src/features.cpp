#include <lapnet/spectral.hpp>

#include <limits>

namespace lapnet {

namespace {

Eigen::Index first_column(const SpectralBasis& basis, const FeatureOptions& options)
{
    const Eigen::Index start = options.include_constant ? 0 : 1;
    if (options.eigen_features < 1 || basis.eigenvectors.cols() < start + options.eigen_features) {
        throw ArgumentError("spectral basis has " + std::to_string(basis.eigenvectors.cols())
                            + " modes; need " + std::to_string(start + options.eigen_features));
    }
    return start;
}

} // namespace

Eigen::MatrixXd signed_eigen_columns(const SpectralBasis& basis, const FeatureOptions& options)
{
    return basis.eigenvectors.middleCols(first_column(basis, options), options.eigen_features);
}

Eigen::MatrixXd eigen_feature_columns(const SpectralBasis& basis, const FeatureOptions& options)
{
    return signed_eigen_columns(basis, options).cwiseAbs();
}

Eigen::MatrixXd normalized_positions(const std::vector<Vec3>& positions)
{
    const auto n = static_cast<Eigen::Index>(positions.size());
    if (n == 0) {
        throw ArgumentError("cannot normalize an empty point set");
    }
    Vec3 centroid = Vec3::Zero();
    Vec3 lo = positions.front();
    Vec3 hi = lo;
    for (const auto& p : positions) {
        centroid += p;
        lo = lo.cwiseMin(p);
        hi = hi.cwiseMax(p);
    }
    centroid /= static_cast<double>(n);
    const double diag = (hi - lo).norm();
    if (!(diag > 0.0)) {
        throw ArgumentError("point set has zero extent");
    }
    Eigen::MatrixXd out(n, 3);
    for (Eigen::Index i = 0; i < n; ++i) {
        out.row(i) = ((positions[i] - centroid) / diag).transpose();
    }
    return out;
}

Matrix assemble_features(const std::vector<Vec3>& positions,
                         const std::vector<Vec3>& normals,
                         const Eigen::MatrixXd& abs_eigen_columns)
{
    const auto n = static_cast<Eigen::Index>(positions.size());
    if (static_cast<Eigen::Index>(normals.size()) != n || abs_eigen_columns.rows() != n) {
        throw ArgumentError("feature blocks disagree on vertex count");
    }
    Matrix features(n, 6 + abs_eigen_columns.cols());
    features.leftCols(3) = normalized_positions(positions);
    for (Eigen::Index i = 0; i < n; ++i) {
        features.block(i, 3, 1, 3) = normals[i].transpose();
    }
    features.rightCols(abs_eigen_columns.cols()) = abs_eigen_columns;
    return features;
}

Matrix build_input_features(const Mesh& mesh,
                            const std::vector<Vec3>& normals,
                            const SpectralBasis& basis,
                            const FeatureOptions& options)
{
    return assemble_features(mesh.vertices, normals, eigen_feature_columns(basis, options));
}

void validate_hierarchy(const PoolingHierarchy& hierarchy, int num_vertices)
{
    int previous = std::numeric_limits<int>::max();
    for (int l = 0; l < hierarchy.num_levels(); ++l) {
        const auto& level = hierarchy.levels[l];
        const std::string where = "hierarchy level " + std::to_string(l);
        if (level.clusters < 1 || level.clusters >= previous) {
            throw ArgumentError(where + ": cluster counts must be positive and strictly decreasing");
        }
        if (static_cast<int>(level.mask.size()) != num_vertices) {
            throw ArgumentError(where + ": mask length " + std::to_string(level.mask.size())
                                + " != vertex count " + std::to_string(num_vertices));
        }
        std::vector<int> counts(level.clusters, 0);
        for (int id : level.mask) {
            if (id < 0 || id >= level.clusters) {
                throw ArgumentError(where + ": cluster id " + std::to_string(id) + " out of range");
            }
            ++counts[id];
        }
        for (int c = 0; c < level.clusters; ++c) {
            if (counts[c] == 0) {
                throw ArgumentError(where + ": cluster " + std::to_string(c) + " is empty");
            }
        }
        previous = level.clusters;
    }
}

PoolingHierarchy build_hierarchy(const SpectralBasis& basis,
                                 const std::vector<int>& cluster_counts,
                                 std::uint64_t seed,
                                 const HierarchyOptions& options)
{
    for (std::size_t l = 0; l < cluster_counts.size(); ++l) {
        if (cluster_counts[l] < 1 || (l > 0 && cluster_counts[l] >= cluster_counts[l - 1])) {
            throw ArgumentError("cluster counts must be positive and strictly decreasing");
        }
    }
    const Eigen::MatrixXd points = options.cluster_on_signed ? signed_eigen_columns(basis, options.features)
                                                             : eigen_feature_columns(basis, options.features);
    PoolingHierarchy hierarchy;
    for (std::size_t l = 0; l < cluster_counts.size(); ++l) {
        const std::uint64_t level_seed = seed ^ (0xd1b54a32d192ed03ULL * (l + 1));
        hierarchy.levels.push_back({cluster_counts[l], kmeans(points, cluster_counts[l], level_seed, options.kmeans)});
    }
    return hierarchy;
}

} // namespace lapnet
