#include "helpers.hpp"

#include <lapnet/laplacian.hpp>
#include <lapnet/spectral.hpp>
#include <lapnet/synth.hpp>

#include <doctest.h>

#include <Eigen/Dense>

#include <map>
#include <set>

using namespace lapnet;
using namespace testing;

namespace {

SpectralBasis dense_reference(const LaplacianOperator& op, int modes)
{
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> ges(Eigen::MatrixXd(op.stiffness()),
                                                                  Eigen::MatrixXd(op.areas.asDiagonal()));
    SpectralBasis b;
    b.eigenvalues = ges.eigenvalues().head(modes);
    b.eigenvectors = ges.eigenvectors().leftCols(modes);
    return b;
}

Mesh permute_mesh(const Mesh& m, const std::vector<int>& perm)
{
    // New vertex i is old vertex perm[i].
    std::vector<int> inverse(perm.size());
    for (std::size_t i = 0; i < perm.size(); ++i) {
        inverse[static_cast<std::size_t>(perm[i])] = static_cast<int>(i);
    }
    Mesh out;
    for (int p : perm) {
        out.vertices.push_back(m.vertices[static_cast<std::size_t>(p)]);
    }
    for (const auto& f : m.faces) {
        out.faces.push_back({inverse[f[0]], inverse[f[1]], inverse[f[2]]});
    }
    return out;
}

/// Partitions equal up to relabeling.
bool same_partition(const std::vector<int>& a, const std::vector<int>& b)
{
    if (a.size() != b.size()) {
        return false;
    }
    std::map<int, int> ab;
    std::map<int, int> ba;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (ab.emplace(a[i], b[i]).first->second != b[i]) {
            return false;
        }
        if (ba.emplace(b[i], a[i]).first->second != a[i]) {
            return false;
        }
    }
    return true;
}

} // namespace

TEST_SUITE("eigensolver")
{
    TEST_CASE("iterative agrees with the dense oracle")
    {
        const Mesh m = deformed_shape(ShapeFamily::Torus, 400, 8);
        const auto op = assemble_laplacian(m);
        EigenOptions opts;
        opts.method = EigenMethod::Iterative;
        const auto basis = solve_eigs(op, 16, opts);
        const auto ref = dense_reference(op, 17);
        REQUIRE(basis.num_modes() == 17);
        const double scale = ref.eigenvalues(16);
        for (int i = 0; i < 17; ++i) {
            CHECK(std::abs(basis.eigenvalues(i) - ref.eigenvalues(i)) <= 1e-8 * std::max(scale, 1.0) * 1.0);
        }
        CHECK(max_residual(op, basis) < 1e-9 * scale);
        CHECK(orthonormality_error(op, basis) < 1e-9);
    }

    TEST_CASE("constant mode comes first with eigenvalue near zero")
    {
        const auto op = assemble_laplacian(make_icosphere(2));
        const auto basis = solve_eigs(op, 8);
        CHECK(std::abs(basis.eigenvalues(0)) < 1e-8);
        const Eigen::VectorXd phi0 = basis.eigenvectors.col(0);
        CHECK((phi0.array() - phi0(0)).abs().maxCoeff() < 1e-6);
        for (int i = 1; i < basis.num_modes(); ++i) {
            CHECK(basis.eigenvalues(i) >= basis.eigenvalues(i - 1));
        }
    }

    TEST_CASE("unit sphere spectrum approaches l(l+1)")
    {
        const auto op = assemble_laplacian(make_icosphere(3));
        const auto basis = solve_eigs(op, 8);
        for (int i = 1; i <= 3; ++i) {
            CHECK(std::abs(basis.eigenvalues(i) - 2.0) < 0.2);
        }
        for (int i = 4; i <= 8; ++i) {
            CHECK(std::abs(basis.eigenvalues(i) - 6.0) < 0.6);
        }
    }

    TEST_CASE("eigenvalues scale as 1/s^2")
    {
        Mesh m = deformed_shape(ShapeFamily::Cylinder, 200, 6);
        const auto a = solve_eigs(assemble_laplacian(m), 6);
        for (auto& v : m.vertices) {
            v *= 2.0;
        }
        const auto b = solve_eigs(assemble_laplacian(m), 6);
        for (int i = 1; i < 7; ++i) {
            CHECK(std::abs(b.eigenvalues(i) * 4.0 - a.eigenvalues(i)) < 1e-7 * a.eigenvalues(i));
        }
    }

    TEST_CASE("sign normalization makes the largest entry positive")
    {
        const auto basis = solve_eigs(assemble_laplacian(deformed_shape(ShapeFamily::Dumbbell, 200, 2)), 10);
        for (int j = 0; j < basis.num_modes(); ++j) {
            Eigen::Index arg = 0;
            basis.eigenvectors.col(j).cwiseAbs().maxCoeff(&arg);
            CHECK(basis.eigenvectors(arg, j) > 0.0);
        }
    }

    TEST_CASE("dense and iterative paths agree on eigenvectors up to sign")
    {
        const auto op = assemble_laplacian(deformed_shape(ShapeFamily::Dumbbell, 300, 9));
        EigenOptions it;
        it.method = EigenMethod::Iterative;
        EigenOptions dn;
        dn.method = EigenMethod::Dense;
        const auto a = solve_eigs(op, 6, it);
        const auto b = solve_eigs(op, 6, dn);
        for (int j = 1; j < 7; ++j) {
            const double gap = std::min(a.eigenvalues(j) - a.eigenvalues(j - 1),
                                        j < 6 ? a.eigenvalues(j + 1) - a.eigenvalues(j) : 1.0);
            if (gap > 1e-3 * a.eigenvalues(j)) {
                CHECK((a.eigenvectors.col(j) - b.eigenvectors.col(j)).cwiseAbs().maxCoeff() < 1e-6);
            }
        }
    }

    TEST_CASE("argument errors")
    {
        const auto op = assemble_laplacian(make_icosphere(0));
        CHECK_THROWS_AS(solve_eigs(op, 12), ArgumentError);
        CHECK_THROWS_AS(solve_eigs(op, -1), ArgumentError);
        CHECK_NOTHROW(solve_eigs(op, 11));
    }

    TEST_CASE("spectrum is invariant under vertex relabeling")
    {
        const Mesh m = deformed_shape(ShapeFamily::Torus, 300, 12);
        std::mt19937_64 rng(3);
        const auto perm = random_permutation(m.num_vertices(), rng);
        const auto a = solve_eigs(assemble_laplacian(m), 10);
        const auto b = solve_eigs(assemble_laplacian(permute_mesh(m, perm)), 10);
        CHECK((a.eigenvalues - b.eigenvalues).cwiseAbs().maxCoeff() < 1e-8 * a.eigenvalues(10));
        for (int j = 1; j <= 10; ++j) {
            const double gap = std::min(a.eigenvalues(j) - a.eigenvalues(j - 1),
                                        j < 10 ? a.eigenvalues(j + 1) - a.eigenvalues(j) : 1.0);
            if (gap > 1e-3 * a.eigenvalues(j)) {
                const Eigen::VectorXd pa = permute_rows(Eigen::MatrixXd(a.eigenvectors.col(j).cwiseAbs()), perm);
                CHECK((pa - b.eigenvectors.col(j).cwiseAbs()).maxCoeff() < 1e-6);
            }
        }
    }
}

TEST_SUITE("features")
{
    TEST_CASE("feature layout and normalization")
    {
        const Mesh m = deformed_shape(ShapeFamily::Sphere, 200, 4);
        const auto normals = compute_vertex_normals(m).normals;
        const auto basis = solve_eigs(assemble_laplacian(m), 16);
        const Matrix x = build_input_features(m, normals, basis);
        REQUIRE(x.rows() == m.num_vertices());
        REQUIRE(x.cols() == kInputFeatureDim);
        const Eigen::MatrixXd xyz = x.leftCols(3);
        CHECK(xyz.colwise().mean().cwiseAbs().maxCoeff() < 1e-12);
        const Eigen::Vector3d extent = xyz.colwise().maxCoeff() - xyz.colwise().minCoeff();
        CHECK(std::abs(extent.norm() - 1.0) < 1e-12);
        CHECK(x.rightCols(16).minCoeff() >= 0.0);
        for (int j = 0; j < 16; ++j) {
            CHECK((x.col(6 + j) - basis.eigenvectors.col(j + 1).cwiseAbs()).cwiseAbs().maxCoeff() == 0.0);
        }
        for (int i = 0; i < m.num_vertices(); ++i) {
            CHECK(x.row(i).segment(3, 3).transpose() == normals[static_cast<std::size_t>(i)]);
        }
    }

    TEST_CASE("constant mode option selects phi_0..phi_15")
    {
        const auto basis = solve_eigs(assemble_laplacian(make_icosphere(2)), 16);
        FeatureOptions opts;
        opts.include_constant = true;
        const auto cols = eigen_feature_columns(basis, opts);
        CHECK(cols.cols() == 16);
        CHECK((cols.col(0) - basis.eigenvectors.col(0).cwiseAbs()).cwiseAbs().maxCoeff() == 0.0);
        opts.include_constant = false;
        opts.eigen_features = 17;
        CHECK_THROWS_AS(eigen_feature_columns(basis, opts), ArgumentError);
    }

    TEST_CASE("degenerate position sets are rejected")
    {
        CHECK_THROWS_AS(normalized_positions({}), ArgumentError);
        CHECK_THROWS_AS(normalized_positions({Vec3(1, 1, 1), Vec3(1, 1, 1)}), ArgumentError);
    }
}

TEST_SUITE("kmeans")
{
    TEST_CASE("separated blobs are recovered")
    {
        std::mt19937_64 rng(1);
        std::normal_distribution<double> noise(0.0, 0.05);
        Eigen::MatrixXd pts(90, 2);
        std::vector<int> truth(90);
        const double centers[3][2] = {{0, 0}, {5, 0}, {0, 5}};
        for (int i = 0; i < 90; ++i) {
            truth[i] = i % 3;
            pts(i, 0) = centers[i % 3][0] + noise(rng);
            pts(i, 1) = centers[i % 3][1] + noise(rng);
        }
        const auto mask = kmeans(pts, 3, 42);
        CHECK(same_partition(mask, truth));
    }

    TEST_CASE("k = 1 and k = N")
    {
        std::mt19937_64 rng(2);
        const Eigen::MatrixXd pts = random_tensor(20, 3, rng);
        const auto one = kmeans(pts, 1, 0);
        CHECK(std::set<int>(one.begin(), one.end()) == std::set<int>{0});
        const auto all = kmeans(pts, 20, 0);
        CHECK(std::set<int>(all.begin(), all.end()).size() == 20);
        CHECK(kmeans_inertia(pts, all, 20) == doctest::Approx(0.0));
        CHECK_THROWS_AS(kmeans(pts, 21, 0), ArgumentError);
        CHECK_THROWS_AS(kmeans(pts, 0, 0), ArgumentError);
    }

    TEST_CASE("duplicate points still give non-empty clusters")
    {
        Eigen::MatrixXd pts = Eigen::MatrixXd::Zero(10, 2);
        pts(9, 0) = 1.0;
        const auto mask = kmeans(pts, 3, 5);
        std::vector<int> counts(3, 0);
        for (int c : mask) {
            ++counts[static_cast<std::size_t>(c)];
        }
        for (int c : counts) {
            CHECK(c > 0);
        }
    }

    TEST_CASE("same seed gives the same labels; row permutation permutes them")
    {
        std::mt19937_64 rng(4);
        const Eigen::MatrixXd pts = random_tensor(150, 5, rng);
        const auto a = kmeans(pts, 8, 77);
        CHECK(a == kmeans(pts, 8, 77));
        const auto perm = random_permutation(150, rng);
        const auto b = kmeans(permute_rows(pts, perm), 8, 77);
        CHECK(b == permute(a, perm));
    }

    TEST_CASE("restarts never increase inertia")
    {
        std::mt19937_64 rng(6);
        const Eigen::MatrixXd pts = random_tensor(200, 4, rng);
        KMeansOptions one;
        one.restarts = 1;
        KMeansOptions many;
        many.restarts = 5;
        const double single = kmeans_inertia(pts, kmeans(pts, 10, 3, one), 10);
        const double best = kmeans_inertia(pts, kmeans(pts, 10, 3, many), 10);
        CHECK(best <= single + 1e-12);
    }
}

TEST_SUITE("hierarchy")
{
    TEST_CASE("levels are valid and permutation equivariant")
    {
        const Mesh m = deformed_shape(ShapeFamily::Dumbbell, 250, 14);
        const auto basis = solve_eigs(assemble_laplacian(m), 16);
        const auto h = build_hierarchy(basis, {16, 8}, 1);
        REQUIRE(h.num_levels() == 2);
        CHECK_NOTHROW(validate_hierarchy(h, m.num_vertices()));

        std::mt19937_64 rng(8);
        const auto perm = random_permutation(m.num_vertices(), rng);
        SpectralBasis permuted = basis;
        permuted.eigenvectors = permute_rows(basis.eigenvectors, perm);
        const auto hp = build_hierarchy(permuted, {16, 8}, 1);
        for (int l = 0; l < 2; ++l) {
            CHECK(hp.levels[l].mask == permute(h.levels[l].mask, perm));
        }
    }

    TEST_CASE("validation rejects malformed hierarchies")
    {
        PoolingHierarchy h;
        h.levels = {{2, {0, 1, 1}}, {2, {0, 0, 1}}};
        CHECK_THROWS_AS(validate_hierarchy(h, 3), ArgumentError);
        h.levels = {{3, {0, 1, 1}}};
        CHECK_THROWS_AS(validate_hierarchy(h, 3), ArgumentError);
        h.levels = {{2, {0, 1}}};
        CHECK_THROWS_AS(validate_hierarchy(h, 3), ArgumentError);
        h.levels = {{2, {0, 2, 1}}};
        CHECK_THROWS_AS(validate_hierarchy(h, 3), ArgumentError);
        h.levels = {{2, {0, 1, 1}}, {1, {0, 0, 0}}};
        CHECK_NOTHROW(validate_hierarchy(h, 3));
        const auto basis = solve_eigs(assemble_laplacian(make_icosphere(1)), 16);
        CHECK_THROWS_AS(build_hierarchy(basis, {8, 8}, 1), ArgumentError);
    }
}
