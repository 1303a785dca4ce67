#include "helpers.hpp"

#include <lapnet/nn.hpp>

#include <doctest.h>

#include <limits>

using namespace lapnet;
using namespace lapnet::nn;
using namespace testing;

namespace {

constexpr double kTol = 1e-6;

std::mt19937_64& rng()
{
    static std::mt19937_64 r(2024);
    return r;
}

} // namespace

TEST_SUITE("tape gradients")
{
    TEST_CASE("matmul")
    {
        CHECK(input_gradient_error({random_tensor(4, 3, rng()), random_tensor(3, 5, rng())},
                                   [](Tape& t, const std::vector<Var>& in) { return t.matmul(in[0], in[1]); })
              < kTol);
    }

    TEST_CASE("matmul_transposed")
    {
        CHECK(input_gradient_error(
                  {random_tensor(4, 3, rng()), random_tensor(6, 3, rng())},
                  [](Tape& t, const std::vector<Var>& in) { return t.matmul_transposed(in[0], in[1]); })
              < kTol);
        // Self product, as in C = Psi Psi^T.
        CHECK(input_gradient_error({random_tensor(5, 3, rng())},
                                   [](Tape& t, const std::vector<Var>& in) {
                                       return t.matmul_transposed(in[0], in[0]);
                                   })
              < kTol);
    }

    TEST_CASE("bias_add, add, scale, sum")
    {
        CHECK(input_gradient_error({random_tensor(5, 3, rng()), random_tensor(1, 3, rng())},
                                   [](Tape& t, const std::vector<Var>& in) { return t.bias_add(in[0], in[1]); })
              < kTol);
        CHECK(input_gradient_error({random_tensor(2, 3, rng()), random_tensor(2, 3, rng())},
                                   [](Tape& t, const std::vector<Var>& in) {
                                       return t.add(t.scale(in[0], -2.5), in[1]);
                                   })
              < kTol);
        CHECK(input_gradient_error(
                  {random_tensor(3, 4, rng())},
                  [](Tape& t, const std::vector<Var>& in) { return t.sum(t.matmul_transposed(in[0], in[0])); }, 1e-5,
                  true)
              < kTol);
    }

    TEST_CASE("relu")
    {
        CHECK(input_gradient_error({random_tensor(6, 4, rng())},
                                   [](Tape& t, const std::vector<Var>& in) { return t.relu(in[0]); })
              < kTol);
    }

    TEST_CASE("relu subgradient at zero is zero")
    {
        Tape t;
        Var x = t.input(Tensor::Zero(2, 2));
        t.backward(t.sum(t.relu(x)));
        CHECK(t.gradient(x).cwiseAbs().maxCoeff() == 0.0);
    }

    TEST_CASE("concat along both axes")
    {
        CHECK(input_gradient_error({random_tensor(3, 2, rng()), random_tensor(3, 4, rng())},
                                   [](Tape& t, const std::vector<Var>& in) { return t.concat(in[0], in[1], 1); })
              < kTol);
        CHECK(input_gradient_error({random_tensor(2, 3, rng()), random_tensor(4, 3, rng())},
                                   [](Tape& t, const std::vector<Var>& in) { return t.concat(in[0], in[1], 0); })
              < kTol);
        Tape t;
        CHECK_THROWS_AS(t.concat(t.input(Tensor::Zero(2, 2)), t.input(Tensor::Zero(3, 2)), 1), ArgumentError);
    }

    TEST_CASE("row_normalize")
    {
        Tensor x = random_tensor(4, 5, rng()).cwiseAbs();
        CHECK(input_gradient_error({x}, [](Tape& t, const std::vector<Var>& in) { return t.row_normalize(in[0]); })
              < kTol);
        Tape t;
        const Tensor& y = t.value(t.row_normalize(t.input(x)));
        CHECK((y.rowwise().sum().array() - 1.0).abs().maxCoeff() < 1e-12);
    }

    TEST_CASE("softmax cross-entropy")
    {
        Tensor target = Tensor::Zero(5, 4);
        for (int i = 0; i < 5; ++i) {
            target(i, (i * 3) % 4) = 1.0;
        }
        CHECK(input_gradient_error({random_tensor(5, 4, rng(), 3.0)},
                                   [&](Tape& t, const std::vector<Var>& in) {
                                       return t.softmax_cross_entropy(in[0], target);
                                   },
                                   1e-5, true)
              < kTol);
    }

    TEST_CASE("softmax cross-entropy is stable for large logits")
    {
        Tape t;
        Tensor logits(1, 3);
        logits << 1000.0, 0.0, -1000.0;
        Tensor target = Tensor::Zero(1, 3);
        target(0, 1) = 1.0;
        const double loss = t.value(t.softmax_cross_entropy(t.input(logits), target))(0, 0);
        CHECK(std::abs(loss - 1000.0) < 1e-9);
    }

    TEST_CASE("cluster pooling and scatter")
    {
        const std::vector<int> mask{0, 2, 1, 0, 2, 2, 1};
        for (PoolMode mode : {PoolMode::Max, PoolMode::Mean}) {
            CHECK(input_gradient_error({random_tensor(7, 3, rng())},
                                       [&](Tape& t, const std::vector<Var>& in) {
                                           return t.cluster_pool(in[0], mask, 3, mode);
                                       })
                  < kTol);
        }
        CHECK(input_gradient_error({random_tensor(3, 2, rng())},
                                   [&](Tape& t, const std::vector<Var>& in) { return t.cluster_scatter(in[0], mask); })
              < kTol);
        CHECK(input_gradient_error({random_tensor(7, 3, rng())},
                                   [](Tape& t, const std::vector<Var>& in) { return t.global_max_pool(in[0]); })
              < kTol);
    }

    TEST_CASE("max pooling routes ties to the lowest row")
    {
        Tape t;
        Tensor x(3, 1);
        x << 2.0, 2.0, 1.0;
        const std::vector<int> mask{0, 0, 0};
        Var in = t.input(x);
        t.backward(t.sum(t.cluster_pool(in, mask, 1)));
        CHECK(t.gradient(in)(0, 0) == 1.0);
        CHECK(t.gradient(in)(1, 0) == 0.0);
        CHECK(t.gradient(in)(2, 0) == 0.0);
    }

    TEST_CASE("pooling forward values")
    {
        Tape t;
        Tensor x(4, 2);
        x << 1, -1, 3, 5, 2, 0, -4, 7;
        const std::vector<int> mask{1, 0, 1, 0};
        const Tensor mx = t.value(t.cluster_pool(t.input(x), mask, 2, PoolMode::Max));
        const Tensor mean = t.value(t.cluster_pool(t.input(x), mask, 2, PoolMode::Mean));
        CHECK(mx(0, 0) == 3);
        CHECK(mx(0, 1) == 7);
        CHECK(mx(1, 0) == 2);
        CHECK(mx(1, 1) == 0);
        CHECK(mean(0, 0) == -0.5);
        CHECK(mean(1, 1) == -0.5);
        const Tensor back = t.value(t.cluster_scatter(t.input(mx), mask));
        CHECK(back.row(2) == mx.row(1));
        CHECK(back.row(3) == mx.row(0));
    }

    TEST_CASE("fan-out accumulates")
    {
        // d/dx sum(x + x + 3x) = 5
        Tape t;
        Var x = t.input(random_tensor(2, 2, rng()));
        t.backward(t.sum(t.add(t.add(x, x), t.scale(x, 3.0))));
        CHECK((t.gradient(x).array() - 5.0).abs().maxCoeff() == 0.0);
    }

    TEST_CASE("parameter gradients accumulate across backward passes")
    {
        Parameter w(random_tensor(3, 2, rng()));
        const Tensor x = random_tensor(4, 3, rng());
        auto run = [&] {
            Tape t;
            t.backward(t.sum(t.matmul(t.input(x), t.parameter(w))));
        };
        run();
        const Tensor once = w.grad;
        run();
        CHECK((w.grad - 2.0 * once).cwiseAbs().maxCoeff() < 1e-14);
        w.zero_grad();
        CHECK(w.grad.cwiseAbs().maxCoeff() == 0.0);
    }

    TEST_CASE("shape errors")
    {
        Tape t;
        Var a = t.input(Tensor::Zero(2, 3));
        Var b = t.input(Tensor::Zero(2, 3));
        CHECK_THROWS_AS(t.matmul(a, b), ArgumentError);
        CHECK_THROWS_AS(t.bias_add(a, b), ArgumentError);
        const std::vector<int> short_mask{0};
        CHECK_THROWS_AS(t.cluster_pool(a, short_mask, 1), ArgumentError);
    }
}

TEST_SUITE("adam")
{
    TEST_CASE("matches the closed form over several steps")
    {
        const AdamOptions opts{0.01, 0.9, 0.999, 1e-8};
        Parameter p(Tensor::Constant(1, 2, 1.0));
        const double grads[3][2] = {{0.5, -2.0}, {0.1, 3.0}, {-1.0, 0.0}};
        double m[2] = {0, 0};
        double v[2] = {0, 0};
        double x[2] = {1.0, 1.0};
        for (int step = 1; step <= 3; ++step) {
            for (int j = 0; j < 2; ++j) {
                p.grad(0, j) = grads[step - 1][j];
                m[j] = 0.9 * m[j] + 0.1 * grads[step - 1][j];
                v[j] = 0.999 * v[j] + 0.001 * grads[step - 1][j] * grads[step - 1][j];
                const double mh = m[j] / (1.0 - std::pow(0.9, step));
                const double vh = v[j] / (1.0 - std::pow(0.999, step));
                x[j] -= 0.01 * mh / (std::sqrt(vh) + 1e-8);
            }
            adam_step(p, opts);
            CHECK(p.step == step);
            CHECK(p.grad.cwiseAbs().maxCoeff() == 0.0);
            for (int j = 0; j < 2; ++j) {
                CHECK(std::abs(p.value(0, j) - x[j]) < 1e-14);
            }
        }
    }

    TEST_CASE("first step moves by about the learning rate")
    {
        Parameter p(Tensor::Zero(1, 3));
        p.grad << 1e-3, -5.0, 100.0;
        adam_step(p, {});
        CHECK(p.value(0, 0) == doctest::Approx(-7e-4).epsilon(1e-4));
        CHECK(p.value(0, 1) == doctest::Approx(7e-4).epsilon(1e-6));
        CHECK(p.value(0, 2) == doctest::Approx(-7e-4).epsilon(1e-6));
    }

    TEST_CASE("check_finite")
    {
        Tensor t = Tensor::Zero(2, 2);
        CHECK_NOTHROW(check_finite(t, "t"));
        t(1, 0) = std::numeric_limits<double>::quiet_NaN();
        CHECK_THROWS_AS(check_finite(t, "t"), ArgumentError);
        t(1, 0) = std::numeric_limits<double>::infinity();
        CHECK_THROWS_AS(check_finite(t, "t"), ArgumentError);
    }
}
