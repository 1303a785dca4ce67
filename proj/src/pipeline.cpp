#include <lapnet/pipeline.hpp>

namespace lapnet {

std::uint64_t params_fingerprint(const PreprocessParams& params)
{
    Fnv1a h;
    h.update("lapnet-preprocess");
    h.update_value(kFeatureCacheVersion);
    h.update_value(params.eigen_count);
    h.update_value(params.cluster_counts.size());
    for (int c : params.cluster_counts) {
        h.update_value(c);
    }
    h.update_value(static_cast<std::uint8_t>(params.include_constant));
    h.update_value(static_cast<std::uint8_t>(params.cluster_on_signed));
    h.update_value(params.seed);
    h.update_value(static_cast<int>(params.eigen.method));
    h.update_value(params.eigen.tolerance);
    h.update_value(params.eigen.max_iterations);
    h.update_value(params.eigen.dense_fallback_limit);
    h.update_value(params.eigen.seed);
    h.update_value(params.kmeans.max_iterations);
    h.update_value(params.kmeans.restarts);
    return h.digest();
}

Matrix FeatureCache::features() const
{
    return assemble_features(positions, normals, eigen_columns);
}

FeatureCache preprocess_mesh(const Mesh& mesh, const PreprocessParams& params)
{
    validate_mesh(mesh);
    const FeatureOptions feature_options{params.eigen_count, params.include_constant};
    const int modes = params.include_constant ? params.eigen_count - 1 : params.eigen_count;
    if (modes + 1 > mesh.num_vertices()) {
        throw ArgumentError("mesh has " + std::to_string(mesh.num_vertices()) + " vertices; "
                            + std::to_string(modes + 1) + " eigenpairs requested");
    }

    FeatureCache cache;
    cache.mesh_hash = mesh_hash(mesh);
    cache.fingerprint = params_fingerprint(params);
    cache.positions = mesh.vertices;
    cache.normals = compute_vertex_normals(mesh).normals;

    const LaplacianOperator op = assemble_laplacian(mesh);
    const SpectralBasis basis = solve_eigs(op, modes, params.eigen);
    cache.eigenvalues = basis.eigenvalues;
    cache.eigen_columns = eigen_feature_columns(basis, feature_options);

    HierarchyOptions hierarchy_options;
    hierarchy_options.features = feature_options;
    hierarchy_options.cluster_on_signed = params.cluster_on_signed;
    hierarchy_options.kmeans = params.kmeans;
    cache.hierarchy = build_hierarchy(basis, params.cluster_counts, params.seed, hierarchy_options);
    return cache;
}

} // namespace lapnet
