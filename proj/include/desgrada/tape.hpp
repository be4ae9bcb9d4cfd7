#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "desgrada/tensor.hpp"

namespace desgrada {

// Symmetric aggregation operator with self-loops in CSR form; shared by the
// plain and differentiable forward paths. Both supported normalizations are
// symmetric, so backward reuse of multiply() is exact.
struct SymAdj {
    int n = 0;
    std::vector<int> row_ptr;
    std::vector<int> col;
    std::vector<double> w;

    std::size_t nnz() const { return col.size(); }
    // out = A * x  (x is n x d)
    void multiply(const Tensor& x, Tensor& out) const;
};

// Forward mode for the spike nonlinearity. `exact` keeps the binary Heaviside
// forward with a rectangular surrogate backward; `relaxed` replaces the
// forward with the surrogate's ramp antiderivative so finite differences have
// something meaningful to probe.
enum class HeavisideMode { exact, relaxed };

// Rectangular surrogate dH/dx = (1/width) * 1[|x| < width/2].
double surrogate_grad(double x, double width);

// Reverse-mode tape over dense tensors. One tape per training step; nodes are
// appended during the forward pass and visited in exact reverse order by
// backward(). Gradients are only materialized for nodes that need them.
class Tape {
public:
    using Ref = int;

    explicit Tape(HeavisideMode mode = HeavisideMode::exact) : hmode_(mode) {}

    Ref leaf(Tensor value, bool requires_grad = false);
    Ref constant(Tensor value) { return leaf(std::move(value), false); }

    Ref matmul(Ref a, Ref b);
    // matmul specialized for binary left operands (spike matrices): skips
    // zero entries in the forward product and the weight gradient.
    Ref spike_matmul(Ref spikes, Ref weight);
    Ref spmm(const SymAdj& adj, Ref x);
    Ref add(Ref a, Ref b);
    Ref sub(Ref a, Ref b);
    Ref mul(Ref a, Ref b);
    Ref scale(Ref a, double s);
    Ref add_scalar(Ref a, double s);
    Ref add_rowvec(Ref a, Ref r);
    // Row-wise scale / shift by a non-differentiable per-row constant.
    Ref mul_colvec_const(Ref a, const std::vector<double>& c);
    Ref sub_colvec_const(Ref a, const std::vector<double>& c);
    Ref mean(Ref a);      // scalar mean over all entries
    Ref mean_rows(Ref a); // column means -> 1 x d
    Ref softmax_vec(Ref a);
    Ref tanh(Ref a);
    Ref sigmoid(Ref a);
    Ref transpose(Ref a);
    Ref concat_rows(Ref a, Ref b);
    Ref stack_rows(const std::vector<Ref>& rows); // each 1 x d
    // Exact Heaviside forward (H(0)=1) with surrogate backward; in relaxed
    // mode the forward becomes the clamped ramp with the same derivative.
    Ref heaviside_sg(Ref a, double width);
    // Identity forward; backward multiplies by -lambda_coeff.
    Ref grad_reverse(Ref a, double lambda_coeff);
    // log(clamp(x, lo, hi)); gradient is zero where the clamp is active.
    Ref log_clamped(Ref a, double lo, double hi);
    // Mean cross-entropy over rows of logits with integer labels. Numerically
    // stable fused forward/backward.
    Ref cross_entropy_mean(Ref logits, const std::vector<int>& labels);

    void backward(Ref root);

    const Tensor& value(Ref r) const { return nodes_[static_cast<std::size_t>(r)].value; }
    const Tensor& grad(Ref r) const;
    bool requires_grad(Ref r) const {
        return nodes_[static_cast<std::size_t>(r)].needs_grad;
    }
    std::size_t size() const { return nodes_.size(); }
    HeavisideMode heaviside_mode() const { return hmode_; }

private:
    enum class Op : std::uint8_t {
        leaf,
        matmul,
        spike_matmul,
        spmm,
        add,
        sub,
        mul,
        scale,
        add_scalar,
        add_rowvec,
        mul_colvec,
        sub_colvec,
        mean,
        mean_rows,
        softmax_vec,
        tanh_fn,
        sigmoid_fn,
        transpose_fn,
        concat_rows,
        stack_rows,
        heaviside,
        grad_reverse,
        log_clamped,
        cross_entropy,
    };

    struct Node {
        Tensor value;
        Tensor grad;
        Op op = Op::leaf;
        bool needs_grad = false;
        Ref a = -1;
        Ref b = -1;
        double s0 = 0.0;
        double s1 = 0.0;
        int aux = -1;
    };

    Ref push(Node n);
    Tensor& grad_buffer(Ref r);
    void backward_node(Ref i);

    std::vector<Node> nodes_;
    std::vector<std::vector<int>> int_aux_;
    std::vector<std::vector<double>> vec_aux_;
    std::vector<const SymAdj*> adj_aux_;
    HeavisideMode hmode_;
};

// Central finite-difference check of a scalar function against its tape
// gradient on a random coordinate subsample (at least min_coords, or all).
// The callable must fill `grads_out` (shaped like params) when it is
// non-null, and must be deterministic given params.
struct GradCheckResult {
    double max_rel_err = 0.0;
    std::size_t coords_checked = 0;
};

GradCheckResult check_gradients(
    const std::function<double(const std::vector<Tensor>&, std::vector<Tensor>*)>& f,
    std::vector<Tensor> params, double eps, std::uint64_t seed, std::size_t min_coords = 64);

} // namespace desgrada
