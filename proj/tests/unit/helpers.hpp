#pragma once

#include <lapnet/network.hpp>
#include <lapnet/synth.hpp>

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <random>
#include <vector>

namespace testing {

using lapnet::Mesh;
using lapnet::Vec3;
using lapnet::nn::Tape;
using lapnet::nn::Tensor;
using Var = Tape::Var;

inline Tensor random_tensor(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng, double scale = 1.0)
{
    std::normal_distribution<double> normal(0.0, scale);
    Tensor t(rows, cols);
    for (Eigen::Index i = 0; i < t.size(); ++i) {
        t.data()[i] = normal(rng);
    }
    return t;
}

inline Mesh equilateral_triangle()
{
    Mesh m;
    m.vertices = {Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0.5, std::sqrt(3.0) / 2.0, 0)};
    m.faces = {{0, 1, 2}};
    return m;
}

inline Mesh unit_square()
{
    Mesh m;
    m.vertices = {Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(1, 1, 0), Vec3(0, 1, 0)};
    m.faces = {{0, 1, 2}, {0, 2, 3}};
    return m;
}

inline Mesh deformed_shape(lapnet::ShapeFamily family, int vertices, std::uint64_t seed)
{
    lapnet::SyntheticSpec spec;
    spec.family = family;
    spec.target_vertices = vertices;
    spec.deformation_seed = seed;
    return lapnet::generate_synthetic(spec).mesh;
}

inline std::vector<int> random_permutation(int n, std::mt19937_64& rng)
{
    std::vector<int> p(static_cast<std::size_t>(n));
    std::iota(p.begin(), p.end(), 0);
    std::shuffle(p.begin(), p.end(), rng);
    return p;
}

/// Row i of the result is row perm[i] of `m`.
template <typename M>
M permute_rows(const M& m, const std::vector<int>& perm)
{
    M out(m.rows(), m.cols());
    for (std::size_t i = 0; i < perm.size(); ++i) {
        out.row(static_cast<Eigen::Index>(i)) = m.row(perm[i]);
    }
    return out;
}

inline std::vector<int> permute(const std::vector<int>& v, const std::vector<int>& perm)
{
    std::vector<int> out(perm.size());
    for (std::size_t i = 0; i < perm.size(); ++i) {
        out[i] = v[static_cast<std::size_t>(perm[i])];
    }
    return out;
}

/// Builds a network on a tape from leaf inputs and returns its output.
using Builder = std::function<Var(Tape&, const std::vector<Var>&)>;

/// Scalar probe q^T Y r with fixed random q, r, so every output entry gets a
/// distinct weight.
struct Probe {
    Tensor q;
    Tensor r;

    Var apply(Tape& tape, Var y)
    {
        const Tensor& yv = tape.value(y);
        if (q.size() == 0) {
            std::mt19937_64 rng(99);
            q = random_tensor(1, yv.rows(), rng);
            r = random_tensor(yv.cols(), 1, rng);
        }
        return tape.matmul(tape.matmul(tape.input(q), y), tape.input(r));
    }
};

/// Max-norm relative error between the tape gradient and central finite
/// differences, over every entry of every input.
inline double input_gradient_error(std::vector<Tensor> inputs, const Builder& build, double h = 1e-5,
                                   bool raw_scalar = false)
{
    Probe probe;
    auto evaluate = [&](const std::vector<Tensor>& values, Tape& tape, std::vector<Var>& leaves) {
        leaves.clear();
        for (const auto& v : values) {
            leaves.push_back(tape.input(v));
        }
        Var y = build(tape, leaves);
        return raw_scalar ? y : probe.apply(tape, y);
    };

    Tape tape;
    std::vector<Var> leaves;
    Var root = evaluate(inputs, tape, leaves);
    tape.backward(root);

    double max_diff = 0.0;
    double max_mag = 1e-8;
    for (std::size_t k = 0; k < inputs.size(); ++k) {
        const Tensor analytic = tape.gradient(leaves[k]).size() ? tape.gradient(leaves[k])
                                                                : Tensor::Zero(inputs[k].rows(), inputs[k].cols());
        for (Eigen::Index i = 0; i < inputs[k].size(); ++i) {
            const double saved = inputs[k].data()[i];
            double f[2];
            for (int s = 0; s < 2; ++s) {
                inputs[k].data()[i] = saved + (s == 0 ? h : -h);
                Tape t;
                std::vector<Var> l;
                f[s] = t.value(evaluate(inputs, t, l))(0, 0);
            }
            inputs[k].data()[i] = saved;
            const double numeric = (f[0] - f[1]) / (2.0 * h);
            max_diff = std::max(max_diff, std::abs(numeric - analytic.data()[i]));
            max_mag = std::max({max_mag, std::abs(numeric), std::abs(analytic.data()[i])});
        }
    }
    return max_diff / max_mag;
}

/// Same check for Parameters: `loss` must build a 1x1 loss on the tape.
/// At most `per_param` entries of each parameter are probed (chosen by a
/// seeded shuffle).
inline double parameter_gradient_error(std::vector<lapnet::nn::Parameter*> params,
                                       const std::function<Var(Tape&)>& loss, int per_param = 1 << 30,
                                       double h = 1e-5)
{
    for (auto* p : params) {
        p->zero_grad();
    }
    {
        Tape tape;
        tape.backward(loss(tape));
    }
    std::mt19937_64 rng(7);
    double max_diff = 0.0;
    double max_mag = 1e-8;
    for (auto* p : params) {
        std::vector<Eigen::Index> idx(static_cast<std::size_t>(p->value.size()));
        std::iota(idx.begin(), idx.end(), Eigen::Index{0});
        std::shuffle(idx.begin(), idx.end(), rng);
        if (static_cast<int>(idx.size()) > per_param) {
            idx.resize(static_cast<std::size_t>(per_param));
        }
        for (Eigen::Index i : idx) {
            const double saved = p->value.data()[i];
            double f[2];
            for (int s = 0; s < 2; ++s) {
                p->value.data()[i] = saved + (s == 0 ? h : -h);
                Tape t;
                f[s] = t.value(loss(t))(0, 0);
            }
            p->value.data()[i] = saved;
            const double numeric = (f[0] - f[1]) / (2.0 * h);
            const double analytic = p->grad.data()[i];
            max_diff = std::max(max_diff, std::abs(numeric - analytic));
            max_mag = std::max({max_mag, std::abs(numeric), std::abs(analytic)});
        }
    }
    return max_diff / max_mag;
}

} // namespace testing
