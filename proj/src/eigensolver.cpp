#include <lapnet/spectral.hpp>

#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace lapnet {

namespace {

void normalize_signs(Eigen::MatrixXd& vectors)
{
    for (Eigen::Index c = 0; c < vectors.cols(); ++c) {
        Eigen::Index best = 0;
        double best_abs = -1.0;
        for (Eigen::Index r = 0; r < vectors.rows(); ++r) {
            const double a = std::abs(vectors(r, c));
            if (a > best_abs) {
                best_abs = a;
                best = r;
            }
        }
        if (vectors(best, c) < 0.0) {
            vectors.col(c) = -vectors.col(c);
        }
    }
}

// Relative residual of each column in the original (D-W, A) pencil.
Eigen::VectorXd residuals(const Eigen::SparseMatrix<double>& stiffness,
                          const Eigen::VectorXd& areas,
                          const Eigen::VectorXd& values,
                          const Eigen::MatrixXd& vectors)
{
    Eigen::VectorXd out(values.size());
    const Eigen::MatrixXd kv = stiffness * vectors;
    for (Eigen::Index c = 0; c < values.size(); ++c) {
        const Eigen::VectorXd av = areas.cwiseProduct(vectors.col(c));
        out[c] = (kv.col(c) - values[c] * av).norm() / av.norm();
    }
    return out;
}

SpectralBasis solve_dense(const LaplacianOperator& op, int modes)
{
    const Eigen::VectorXd inv_sqrt_area = op.areas.cwiseSqrt().cwiseInverse();
    Eigen::MatrixXd m = Eigen::MatrixXd(op.stiffness());
    m = inv_sqrt_area.asDiagonal() * m * inv_sqrt_area.asDiagonal();
    m = 0.5 * (m + m.transpose()).eval();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(m);
    if (eig.info() != Eigen::Success) {
        throw ConvergenceError("dense eigendecomposition failed", std::nan(""));
    }
    SpectralBasis basis;
    basis.eigenvalues = eig.eigenvalues().head(modes);
    basis.eigenvectors = inv_sqrt_area.asDiagonal() * eig.eigenvectors().leftCols(modes);
    return basis;
}

// Shift-invert subspace iteration with Rayleigh-Ritz on the symmetric form
// M = A^-1/2 (D-W) A^-1/2. The shifted inverse (M + sI)^-1 is applied as
// A^1/2 (D-W + sA)^-1 A^1/2 through one sparse LDL^T factorization.
SpectralBasis solve_iterative(const LaplacianOperator& op, int modes, const EigenOptions& options)
{
    const int n = op.size();
    const int block = std::min(n, std::max(2 * modes, modes + 16));
    const Eigen::SparseMatrix<double> stiffness = op.stiffness();
    const Eigen::VectorXd sqrt_area = op.areas.cwiseSqrt();
    const Eigen::VectorXd inv_sqrt_area = sqrt_area.cwiseInverse();

    const double scale = op.degree.cwiseQuotient(op.areas).mean();
    const double shift = 1e-6 * scale;
    Eigen::SparseMatrix<double> shifted = stiffness;
    for (int i = 0; i < n; ++i) {
        shifted.coeffRef(i, i) += shift * op.areas[i];
    }
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> factor(shifted);
    if (factor.info() != Eigen::Success) {
        throw ConvergenceError("factorization of shifted stiffness matrix failed", std::nan(""));
    }

    std::mt19937_64 rng(options.seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::MatrixXd z(n, block);
    for (Eigen::Index c = 0; c < z.cols(); ++c) {
        for (Eigen::Index r = 0; r < z.rows(); ++r) {
            z(r, c) = normal(rng);
        }
    }

    Eigen::VectorXd theta;
    Eigen::MatrixXd ritz;
    double worst = std::numeric_limits<double>::infinity();
    for (int iter = 0; iter < options.max_iterations; ++iter) {
        Eigen::MatrixXd y = factor.solve(sqrt_area.asDiagonal() * z);
        y = sqrt_area.asDiagonal() * y;

        Eigen::HouseholderQR<Eigen::MatrixXd> qr(y);
        const Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(n, block);
        const Eigen::MatrixXd mq = inv_sqrt_area.asDiagonal() * (stiffness * (inv_sqrt_area.asDiagonal() * q));
        Eigen::MatrixXd h = q.transpose() * mq;
        h = 0.5 * (h + h.transpose()).eval();
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> small(h);
        theta = small.eigenvalues();
        z = q * small.eigenvectors();

        ritz = inv_sqrt_area.asDiagonal() * z.leftCols(modes);
        const Eigen::VectorXd res = residuals(stiffness, op.areas, theta.head(modes), ritz);
        const double reference = std::max(std::abs(theta[modes - 1]), std::numeric_limits<double>::min());
        worst = res.maxCoeff();
        if (worst <= options.tolerance * reference) {
            SpectralBasis basis;
            basis.eigenvalues = theta.head(modes);
            basis.eigenvectors = ritz;
            return basis;
        }
    }
    throw ConvergenceError("eigensolver did not converge in " + std::to_string(options.max_iterations)
                               + " iterations",
                           worst);
}

} // namespace

SpectralBasis solve_eigs(const LaplacianOperator& op, int k, const EigenOptions& options)
{
    const int n = op.size();
    const int modes = k + 1;
    if (k < 0 || modes > n) {
        throw ArgumentError("requested " + std::to_string(modes) + " eigenpairs from a "
                            + std::to_string(n) + "-vertex operator");
    }
    if (!(op.areas.minCoeff() > 0.0)) {
        throw ArgumentError("vertex areas must be strictly positive (isolated vertex?)");
    }

    SpectralBasis basis;
    const bool small = 2 * modes + 16 >= n;
    if (options.method == EigenMethod::Dense || (options.method == EigenMethod::Automatic && small)) {
        basis = solve_dense(op, modes);
    } else {
        try {
            basis = solve_iterative(op, modes, options);
        } catch (const ConvergenceError&) {
            if (options.method == EigenMethod::Iterative || n > options.dense_fallback_limit) {
                throw;
            }
            basis = solve_dense(op, modes);
        }
    }
    normalize_signs(basis.eigenvectors);
    return basis;
}

double max_residual(const LaplacianOperator& op, const SpectralBasis& basis)
{
    return residuals(op.stiffness(), op.areas, basis.eigenvalues, basis.eigenvectors).maxCoeff();
}

double orthonormality_error(const LaplacianOperator& op, const SpectralBasis& basis)
{
    const Eigen::MatrixXd gram = basis.eigenvectors.transpose() * op.areas.asDiagonal() * basis.eigenvectors;
    return (gram - Eigen::MatrixXd::Identity(gram.rows(), gram.cols())).cwiseAbs().maxCoeff();
}

} // namespace lapnet
