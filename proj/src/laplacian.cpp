#include <lapnet/laplacian.hpp>

#include <algorithm>
#include <cmath>
#include <map>
#include <utility>

namespace lapnet {

Eigen::SparseMatrix<double> LaplacianOperator::stiffness() const
{
    Eigen::SparseMatrix<double> k = -weights;
    for (int i = 0; i < size(); ++i) {
        k.coeffRef(i, i) += degree[i];
    }
    k.makeCompressed();
    return k;
}

LaplacianOperator assemble_laplacian(const Mesh& mesh, const VertexAreas& areas)
{
    const int n = mesh.num_vertices();
    if (areas.values.size() != n) {
        throw ArgumentError("vertex area count does not match mesh");
    }

    LaplacianOperator op;
    // Ordered map keeps assembly order independent of hashing.
    std::map<std::pair<int, int>, double> edge_weights;
    for (const auto& f : mesh.faces) {
        for (int corner = 0; corner < 3; ++corner) {
            const int i = f[(corner + 1) % 3];
            const int j = f[(corner + 2) % 3];
            const Vec3 e1 = mesh.vertices[i] - mesh.vertices[f[corner]];
            const Vec3 e2 = mesh.vertices[j] - mesh.vertices[f[corner]];
            double cot = e1.dot(e2) / e1.cross(e2).norm();
            if (!(std::abs(cot) <= kCotClamp)) {
                cot = std::clamp(std::isnan(cot) ? 0.0 : cot, -kCotClamp, kCotClamp);
                ++op.clamped;
            }
            edge_weights[{std::min(i, j), std::max(i, j)}] += 0.5 * cot;
        }
    }

    std::vector<Eigen::Triplet<double>> triplets;
    triplets.reserve(2 * edge_weights.size());
    for (const auto& [edge, w] : edge_weights) {
        triplets.emplace_back(edge.first, edge.second, w);
        triplets.emplace_back(edge.second, edge.first, w);
    }
    op.weights.resize(n, n);
    op.weights.setFromTriplets(triplets.begin(), triplets.end());
    op.weights.makeCompressed();

    op.degree = Eigen::VectorXd::Zero(n);
    for (int col = 0; col < op.weights.outerSize(); ++col) {
        for (Eigen::SparseMatrix<double>::InnerIterator it(op.weights, col); it; ++it) {
            op.degree[it.row()] += it.value();
        }
    }
    op.areas = areas.values;
    return op;
}

} // namespace lapnet
