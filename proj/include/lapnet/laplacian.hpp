#pragma once

#include <lapnet/mesh.hpp>

#include <Eigen/SparseCore>

namespace lapnet {

/// cot(1 degree). Individual cotangent terms are clamped to [-kCotClamp, kCotClamp].
inline constexpr double kCotClamp = 57.289961630759425;

/// Cotangent Laplacian L = A^-1 (D - W) kept in factored form.
///
/// `weights` holds w_ij = (cot a_ij + cot b_ij) / 2 with both (i,j) and (j,i)
/// written from the same value, so the matrix is exactly symmetric. `degree`
/// holds d_ii = sum_j w_ij and `areas` the barycentric vertex areas.
struct LaplacianOperator {
    Eigen::SparseMatrix<double> weights;
    Eigen::VectorXd degree;
    Eigen::VectorXd areas;
    /// Number of cotangent terms that hit the clamp during assembly.
    int clamped = 0;

    int size() const { return static_cast<int>(degree.size()); }

    /// The symmetric positive semidefinite stiffness matrix D - W.
    Eigen::SparseMatrix<double> stiffness() const;
};

LaplacianOperator assemble_laplacian(const Mesh& mesh, const VertexAreas& areas);

inline LaplacianOperator assemble_laplacian(const Mesh& mesh)
{
    return assemble_laplacian(mesh, compute_vertex_areas(mesh));
}

} // namespace lapnet
