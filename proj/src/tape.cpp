#include <lapnet/nn.hpp>

#include <cmath>
#include <limits>
#include <string>

namespace lapnet::nn {

namespace {

std::string shape_str(const Tensor& t)
{
    return "[" + std::to_string(t.rows()) + "x" + std::to_string(t.cols()) + "]";
}

void check_mask(std::span<const int> mask, Eigen::Index rows, int clusters, bool require_all)
{
    if (static_cast<Eigen::Index>(mask.size()) != rows) {
        throw ArgumentError("mask length " + std::to_string(mask.size()) + " does not match "
                            + std::to_string(rows) + " rows");
    }
    std::vector<char> seen(clusters, 0);
    for (int id : mask) {
        if (id < 0 || id >= clusters) {
            throw ArgumentError("cluster id " + std::to_string(id) + " outside [0, " + std::to_string(clusters) + ")");
        }
        seen[id] = 1;
    }
    if (require_all) {
        for (int c = 0; c < clusters; ++c) {
            if (!seen[c]) {
                throw ArgumentError("cluster " + std::to_string(c) + " has no members");
            }
        }
    }
}

} // namespace

Parameter::Parameter(Tensor initial)
    : value(std::move(initial))
    , grad(Tensor::Zero(value.rows(), value.cols()))
    , m(Tensor::Zero(value.rows(), value.cols()))
    , v(Tensor::Zero(value.rows(), value.cols()))
{}

void check_finite(const Tensor& t, const char* what)
{
    if (!t.allFinite()) {
        throw ArgumentError(std::string("non-finite values in ") + what);
    }
}

Tape::Var Tape::push(Tensor value, std::function<void(Tape&, const Tensor&)> propagate)
{
#ifndef NDEBUG
    check_finite(value, "tape node output");
#endif
    nodes_.push_back(Node{std::move(value), Tensor(), nullptr, std::move(propagate)});
    return Var{nodes_.size() - 1};
}

void Tape::accumulate(Var v, const Tensor& g)
{
    Tensor& grad = nodes_[v.index].grad;
    if (grad.size() == 0) {
        grad = g;
    } else {
        grad += g;
    }
}

Tape::Var Tape::input(Tensor value)
{
    return push(std::move(value), nullptr);
}

Tape::Var Tape::parameter(Parameter& param)
{
    Var v = push(param.value, nullptr);
    nodes_[v.index].param = &param;
    return v;
}

Tape::Var Tape::matmul(Var a, Var b)
{
    const Tensor& av = value(a);
    const Tensor& bv = value(b);
    if (av.cols() != bv.rows()) {
        throw ArgumentError("matmul shape mismatch " + shape_str(av) + " * " + shape_str(bv));
    }
    return push(av * bv, [a, b](Tape& t, const Tensor& g) {
        t.accumulate(a, g * t.value(b).transpose());
        t.accumulate(b, t.value(a).transpose() * g);
    });
}

Tape::Var Tape::matmul_transposed(Var a, Var b)
{
    const Tensor& av = value(a);
    const Tensor& bv = value(b);
    if (av.cols() != bv.cols()) {
        throw ArgumentError("matmul_transposed shape mismatch " + shape_str(av) + " * " + shape_str(bv) + "^T");
    }
    return push(av * bv.transpose(), [a, b](Tape& t, const Tensor& g) {
        t.accumulate(a, g * t.value(b));
        t.accumulate(b, g.transpose() * t.value(a));
    });
}

Tape::Var Tape::bias_add(Var x, Var bias)
{
    const Tensor& xv = value(x);
    const Tensor& bv = value(bias);
    if (bv.rows() != 1 || bv.cols() != xv.cols()) {
        throw ArgumentError("bias " + shape_str(bv) + " does not match " + shape_str(xv));
    }
    Tensor out = xv.rowwise() + bv.row(0);
    return push(std::move(out), [x, bias](Tape& t, const Tensor& g) {
        t.accumulate(x, g);
        t.accumulate(bias, g.colwise().sum());
    });
}

Tape::Var Tape::relu(Var x)
{
    Tensor out = value(x).cwiseMax(0.0);
    return push(std::move(out), [x](Tape& t, const Tensor& g) {
        const Tensor& xv = t.value(x);
        t.accumulate(x, (xv.array() > 0.0).select(g, 0.0));
    });
}

Tape::Var Tape::concat(Var a, Var b, int axis)
{
    const Tensor& av = value(a);
    const Tensor& bv = value(b);
    Tensor out;
    if (axis == 1) {
        if (av.rows() != bv.rows()) {
            throw ArgumentError("concat(axis=1) row mismatch " + shape_str(av) + " | " + shape_str(bv));
        }
        out.resize(av.rows(), av.cols() + bv.cols());
        out << av, bv;
    } else if (axis == 0) {
        if (av.cols() != bv.cols()) {
            throw ArgumentError("concat(axis=0) column mismatch " + shape_str(av) + " / " + shape_str(bv));
        }
        out.resize(av.rows() + bv.rows(), av.cols());
        out << av, bv;
    } else {
        throw ArgumentError("concat axis must be 0 or 1");
    }
    const Eigen::Index split = axis == 1 ? av.cols() : av.rows();
    return push(std::move(out), [a, b, axis, split](Tape& t, const Tensor& g) {
        if (axis == 1) {
            t.accumulate(a, g.leftCols(split));
            t.accumulate(b, g.rightCols(g.cols() - split));
        } else {
            t.accumulate(a, g.topRows(split));
            t.accumulate(b, g.bottomRows(g.rows() - split));
        }
    });
}

Tape::Var Tape::add(Var a, Var b)
{
    const Tensor& av = value(a);
    const Tensor& bv = value(b);
    if (av.rows() != bv.rows() || av.cols() != bv.cols()) {
        throw ArgumentError("add shape mismatch " + shape_str(av) + " + " + shape_str(bv));
    }
    return push(av + bv, [a, b](Tape& t, const Tensor& g) {
        t.accumulate(a, g);
        t.accumulate(b, g);
    });
}

Tape::Var Tape::scale(Var a, double factor)
{
    return push(value(a) * factor, [a, factor](Tape& t, const Tensor& g) { t.accumulate(a, g * factor); });
}

Tape::Var Tape::sum(Var a)
{
    Tensor out(1, 1);
    out(0, 0) = value(a).sum();
    return push(std::move(out), [a](Tape& t, const Tensor& g) {
        const Tensor& av = t.value(a);
        t.accumulate(a, Tensor::Constant(av.rows(), av.cols(), g(0, 0)));
    });
}

Tape::Var Tape::row_normalize(Var x, double eps)
{
    const Tensor& xv = value(x);
    Eigen::VectorXd denom = xv.rowwise().sum().array() + eps;
    Tensor out = denom.cwiseInverse().asDiagonal() * xv;
    return push(std::move(out), [x, denom = std::move(denom), out_index = nodes_.size()](Tape& t, const Tensor& g) {
        const Tensor& y = t.nodes_[out_index].value;
        const Eigen::VectorXd dot = (g.array() * y.array()).rowwise().sum();
        Tensor gx = g.colwise() - dot;
        t.accumulate(x, denom.cwiseInverse().asDiagonal() * gx);
    });
}

Tape::Var Tape::softmax_cross_entropy(Var logits, const Tensor& target)
{
    const Tensor& x = value(logits);
    if (target.rows() != x.rows() || target.cols() != x.cols()) {
        throw ArgumentError("target " + shape_str(target) + " does not match logits " + shape_str(x));
    }
    if (x.rows() == 0) {
        throw ArgumentError("cross-entropy over zero rows");
    }
    Tensor probs(x.rows(), x.cols());
    double total = 0.0;
    for (Eigen::Index r = 0; r < x.rows(); ++r) {
        const double peak = x.row(r).maxCoeff();
        const auto shifted = (x.row(r).array() - peak).eval();
        const double norm = shifted.exp().sum();
        const double lse = std::log(norm);
        probs.row(r) = shifted.exp() / norm;
        total += (target.row(r).array() * (lse - shifted)).sum();
    }
    const double rows = static_cast<double>(x.rows());
    Tensor out(1, 1);
    out(0, 0) = total / rows;
    return push(std::move(out), [logits, probs = std::move(probs), target, rows](Tape& t, const Tensor& g) {
        Tensor grad = probs.array().colwise() * target.rowwise().sum().array();
        grad -= target;
        t.accumulate(logits, grad * (g(0, 0) / rows));
    });
}

Tape::Var Tape::cluster_pool(Var x, std::span<const int> mask, int clusters, PoolMode mode)
{
    const Tensor& xv = value(x);
    check_mask(mask, xv.rows(), clusters, true);
    const Eigen::Index cols = xv.cols();
    std::vector<int> ids(mask.begin(), mask.end());

    if (mode == PoolMode::Mean) {
        Tensor out = Tensor::Zero(clusters, cols);
        std::vector<double> counts(clusters, 0.0);
        for (Eigen::Index i = 0; i < xv.rows(); ++i) {
            out.row(ids[i]) += xv.row(i);
            counts[ids[i]] += 1.0;
        }
        for (int c = 0; c < clusters; ++c) {
            out.row(c) /= counts[c];
        }
        return push(std::move(out), [x, ids = std::move(ids), counts = std::move(counts)](Tape& t, const Tensor& g) {
            Tensor gx(ids.size(), g.cols());
            for (std::size_t i = 0; i < ids.size(); ++i) {
                gx.row(i) = g.row(ids[i]) / counts[ids[i]];
            }
            t.accumulate(x, gx);
        });
    }

    Tensor out = Tensor::Constant(clusters, cols, -std::numeric_limits<double>::infinity());
    std::vector<Eigen::Index> argmax(static_cast<std::size_t>(clusters) * cols, -1);
    for (Eigen::Index i = 0; i < xv.rows(); ++i) {
        const int c = ids[i];
        for (Eigen::Index k = 0; k < cols; ++k) {
            auto& slot = argmax[c * cols + k];
            if (slot < 0 || xv(i, k) > out(c, k)) {
                out(c, k) = xv(i, k);
                slot = i;
            }
        }
    }
    const Eigen::Index rows = xv.rows();
    return push(std::move(out), [x, argmax = std::move(argmax), rows, cols](Tape& t, const Tensor& g) {
        Tensor gx = Tensor::Zero(rows, cols);
        for (Eigen::Index c = 0; c < g.rows(); ++c) {
            for (Eigen::Index k = 0; k < cols; ++k) {
                gx(argmax[c * cols + k], k) += g(c, k);
            }
        }
        t.accumulate(x, gx);
    });
}

Tape::Var Tape::cluster_scatter(Var x, std::span<const int> mask)
{
    const Tensor& xv = value(x);
    const auto rows = static_cast<Eigen::Index>(mask.size());
    check_mask(mask, rows, static_cast<int>(xv.rows()), false);
    std::vector<int> ids(mask.begin(), mask.end());
    Tensor out(rows, xv.cols());
    for (Eigen::Index i = 0; i < rows; ++i) {
        out.row(i) = xv.row(ids[i]);
    }
    const Eigen::Index clusters = xv.rows();
    return push(std::move(out), [x, ids = std::move(ids), clusters](Tape& t, const Tensor& g) {
        Tensor gx = Tensor::Zero(clusters, g.cols());
        for (std::size_t i = 0; i < ids.size(); ++i) {
            gx.row(ids[i]) += g.row(i);
        }
        t.accumulate(x, gx);
    });
}

Tape::Var Tape::global_max_pool(Var x)
{
    const std::vector<int> zeros(value(x).rows(), 0);
    return cluster_pool(x, zeros, 1, PoolMode::Max);
}

void Tape::backward(Var root, double seed)
{
    for (auto& node : nodes_) {
        node.grad.resize(0, 0);
    }
    const Tensor& rv = nodes_[root.index].value;
    nodes_[root.index].grad = Tensor::Constant(rv.rows(), rv.cols(), seed);
    for (std::size_t i = root.index + 1; i-- > 0;) {
        Node& node = nodes_[i];
        if (node.grad.size() == 0) {
            continue;
        }
        if (node.param != nullptr) {
            if (node.param->grad.size() == 0) {
                node.param->grad = Tensor::Zero(node.value.rows(), node.value.cols());
            }
            node.param->grad += node.grad;
        }
        if (node.propagate) {
            node.propagate(*this, node.grad);
        }
    }
}

} // namespace lapnet::nn
