#pragma once

#include <lapnet/common.hpp>

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace lapnet::nn {

/// 2-D tensor of doubles, row-major.
using Tensor = Matrix;

/// Trainable tensor with its gradient accumulator and Adam moments.
struct Parameter {
    Tensor value;
    Tensor grad;
    Tensor m;
    Tensor v;
    std::int64_t step = 0;

    Parameter() = default;
    explicit Parameter(Tensor initial);

    void zero_grad() { grad.setZero(); }
};

enum class PoolMode { Max, Mean };

/// Reverse-mode tape. Every operation appends a node holding its output and
/// the closure that propagates the output gradient to its inputs; backward()
/// walks the nodes in exact reverse order, accumulating additively where a
/// value fans out. Parameter leaves add their gradient into Parameter::grad,
/// so several backward passes accumulate.
class Tape {
public:
    struct Var {
        std::size_t index = 0;
    };

    /// Leaf without a parameter. Its gradient is still available after
    /// backward() through gradient().
    Var input(Tensor value);
    Var parameter(Parameter& param);

    /// a[m x k] * b[k x n]
    Var matmul(Var a, Var b);
    /// a[m x k] * b[n x k]^T
    Var matmul_transposed(Var a, Var b);
    /// x[m x n] + bias[1 x n] broadcast over rows.
    Var bias_add(Var x, Var bias);
    /// Subgradient at 0 is 0.
    Var relu(Var x);
    /// axis 0 stacks rows, axis 1 stacks columns.
    Var concat(Var a, Var b, int axis);
    Var add(Var a, Var b);
    Var scale(Var a, double factor);
    /// Sum of all entries, 1 x 1.
    Var sum(Var a);
    /// Divides each row by (its sum + eps). Intended for non-negative inputs.
    Var row_normalize(Var x, double eps = 1e-12);

    /// Mean over rows of -sum_c target_rc * log softmax(logits)_rc. `target`
    /// rows are one-hot. Returns 1 x 1.
    Var softmax_cross_entropy(Var logits, const Tensor& target);

    /// Per-cluster reduction of rows: [N x c] -> [p x c]. Max pooling routes
    /// gradient to the arg-max row, lowest row index on ties.
    Var cluster_pool(Var x, std::span<const int> mask, int clusters, PoolMode mode = PoolMode::Max);
    /// Broadcast cluster rows back to vertices: [p x c] -> [N x c].
    Var cluster_scatter(Var x, std::span<const int> mask);
    /// Column-wise max over all rows: [N x c] -> [1 x c].
    Var global_max_pool(Var x);

    const Tensor& value(Var v) const { return nodes_[v.index].value; }
    /// Gradient of the last backward() root with respect to `v`; empty when
    /// `v` did not influence the root.
    const Tensor& gradient(Var v) const { return nodes_[v.index].grad; }

    void backward(Var root, double seed = 1.0);

    std::size_t size() const { return nodes_.size(); }

private:
    struct Node {
        Tensor value;
        Tensor grad;
        Parameter* param = nullptr;
        std::function<void(Tape&, const Tensor&)> propagate;
    };

    Var push(Tensor value, std::function<void(Tape&, const Tensor&)> propagate);
    void accumulate(Var v, const Tensor& g);

    std::vector<Node> nodes_;
};

struct AdamOptions {
    double learning_rate = 7e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

/// Bias-corrected Adam update; zeroes the gradient afterwards.
void adam_step(Parameter& param, const AdamOptions& options = {});

/// Throws ArgumentError when the tensor holds NaN or Inf.
void check_finite(const Tensor& t, const char* what);

} // namespace lapnet::nn
