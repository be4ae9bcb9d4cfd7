#include "desgrada/tape.hpp"

#include <algorithm>
#include <cmath>

#include "desgrada/errors.hpp"
#include "desgrada/rng.hpp"

namespace desgrada {

void SymAdj::multiply(const Tensor& x, Tensor& out) const {
    const std::size_t d = x.cols();
    if (static_cast<int>(x.rows()) != n) throw ShapeError("SymAdj::multiply: row mismatch");
    if (static_cast<int>(out.rows()) != n || out.cols() != d) out = Tensor(static_cast<std::size_t>(n), d);
    for (int i = 0; i < n; ++i) {
        double* orow = out.data() + static_cast<std::size_t>(i) * d;
        for (std::size_t j = 0; j < d; ++j) orow[j] = 0.0;
        for (int e = row_ptr[static_cast<std::size_t>(i)]; e < row_ptr[static_cast<std::size_t>(i) + 1]; ++e) {
            const double wv = w[static_cast<std::size_t>(e)];
            const double* xrow = x.data() + static_cast<std::size_t>(col[static_cast<std::size_t>(e)]) * d;
            for (std::size_t j = 0; j < d; ++j) orow[j] += wv * xrow[j];
        }
    }
}

double surrogate_grad(double x, double width) {
    if (width <= 0.0) throw ArgumentError("surrogate_grad: width must be positive");
    return std::abs(x) < width / 2.0 ? 1.0 / width : 0.0;
}

Tape::Ref Tape::push(Node n) {
    nodes_.push_back(std::move(n));
    return static_cast<Ref>(nodes_.size() - 1);
}

Tensor& Tape::grad_buffer(Ref r) {
    Node& n = nodes_[static_cast<std::size_t>(r)];
    if (n.grad.size() != n.value.size() || n.grad.rows() != n.value.rows())
        n.grad = Tensor(n.value.rows(), n.value.cols(), 0.0);
    return n.grad;
}

const Tensor& Tape::grad(Ref r) const {
    const Node& n = nodes_[static_cast<std::size_t>(r)];
    if (n.grad.rows() != n.value.rows() || n.grad.cols() != n.value.cols()) {
        static const Tensor empty;
        return empty;
    }
    return n.grad;
}

Tape::Ref Tape::leaf(Tensor value, bool requires_grad) {
    Node n;
    n.value = std::move(value);
    n.op = Op::leaf;
    n.needs_grad = requires_grad;
    return push(std::move(n));
}

Tape::Ref Tape::matmul(Ref a, Ref b) {
    const Tensor& A = value(a);
    const Tensor& B = value(b);
    Node n;
    n.value = desgrada::matmul(A, B);
    n.op = Op::matmul;
    n.a = a;
    n.b = b;
    n.needs_grad = requires_grad(a) || requires_grad(b);
    return push(std::move(n));
}

Tape::Ref Tape::spike_matmul(Ref spikes, Ref weight) {
    const Tensor& S = value(spikes);
    const Tensor& W = value(weight);
    if (S.cols() != W.rows()) throw ShapeError("spike_matmul: inner dimensions disagree");
    Node n;
    n.value = Tensor(S.rows(), W.cols(), 0.0);
    const std::size_t k = S.cols(), m = W.cols();
    for (std::size_t i = 0; i < S.rows(); ++i) {
        const double* srow = S.data() + i * k;
        double* crow = n.value.data() + i * m;
        for (std::size_t p = 0; p < k; ++p) {
            const double sv = srow[p];
            if (sv == 0.0) continue;
            const double* wrow = W.data() + p * m;
            if (sv == 1.0) {
                for (std::size_t j = 0; j < m; ++j) crow[j] += wrow[j];
            } else {
                for (std::size_t j = 0; j < m; ++j) crow[j] += sv * wrow[j];
            }
        }
    }
    n.op = Op::spike_matmul;
    n.a = spikes;
    n.b = weight;
    n.needs_grad = requires_grad(spikes) || requires_grad(weight);
    return push(std::move(n));
}

Tape::Ref Tape::spmm(const SymAdj& adj, Ref x) {
    Node n;
    n.value = Tensor(static_cast<std::size_t>(adj.n), value(x).cols());
    adj.multiply(value(x), n.value);
    n.op = Op::spmm;
    n.a = x;
    n.needs_grad = requires_grad(x);
    n.aux = static_cast<int>(adj_aux_.size());
    adj_aux_.push_back(&adj);
    return push(std::move(n));
}

Tape::Ref Tape::add(Ref a, Ref b) {
    Node n;
    n.value = desgrada::add(value(a), value(b));
    n.op = Op::add;
    n.a = a;
    n.b = b;
    n.needs_grad = requires_grad(a) || requires_grad(b);
    return push(std::move(n));
}

Tape::Ref Tape::sub(Ref a, Ref b) {
    Node n;
    n.value = desgrada::sub(value(a), value(b));
    n.op = Op::sub;
    n.a = a;
    n.b = b;
    n.needs_grad = requires_grad(a) || requires_grad(b);
    return push(std::move(n));
}

Tape::Ref Tape::mul(Ref a, Ref b) {
    Node n;
    n.value = desgrada::hadamard(value(a), value(b));
    n.op = Op::mul;
    n.a = a;
    n.b = b;
    n.needs_grad = requires_grad(a) || requires_grad(b);
    return push(std::move(n));
}

Tape::Ref Tape::scale(Ref a, double s) {
    Node n;
    n.value = desgrada::scale(value(a), s);
    n.op = Op::scale;
    n.a = a;
    n.s0 = s;
    n.needs_grad = requires_grad(a);
    return push(std::move(n));
}

Tape::Ref Tape::add_scalar(Ref a, double s) {
    Node n;
    n.value = value(a);
    for (std::size_t i = 0; i < n.value.size(); ++i) n.value[i] += s;
    n.op = Op::add_scalar;
    n.a = a;
    n.s0 = s;
    n.needs_grad = requires_grad(a);
    return push(std::move(n));
}

Tape::Ref Tape::add_rowvec(Ref a, Ref r) {
    Node n;
    n.value = desgrada::add_rowvec(value(a), value(r));
    n.op = Op::add_rowvec;
    n.a = a;
    n.b = r;
    n.needs_grad = requires_grad(a) || requires_grad(r);
    return push(std::move(n));
}

Tape::Ref Tape::mul_colvec_const(Ref a, const std::vector<double>& c) {
    const Tensor& A = value(a);
    if (c.size() != A.rows()) throw ShapeError("mul_colvec_const: row-count mismatch");
    Node n;
    n.value = A;
    for (std::size_t i = 0; i < A.rows(); ++i)
        for (std::size_t j = 0; j < A.cols(); ++j) n.value(i, j) *= c[i];
    n.op = Op::mul_colvec;
    n.a = a;
    n.needs_grad = requires_grad(a);
    n.aux = static_cast<int>(vec_aux_.size());
    vec_aux_.push_back(c);
    return push(std::move(n));
}

Tape::Ref Tape::sub_colvec_const(Ref a, const std::vector<double>& c) {
    const Tensor& A = value(a);
    if (c.size() != A.rows()) throw ShapeError("sub_colvec_const: row-count mismatch");
    Node n;
    n.value = A;
    for (std::size_t i = 0; i < A.rows(); ++i)
        for (std::size_t j = 0; j < A.cols(); ++j) n.value(i, j) -= c[i];
    n.op = Op::sub_colvec;
    n.a = a;
    n.needs_grad = requires_grad(a);
    return push(std::move(n));
}

Tape::Ref Tape::mean(Ref a) {
    Node n;
    n.value = Tensor(1, 1, mean_all(value(a)));
    n.op = Op::mean;
    n.a = a;
    n.needs_grad = requires_grad(a);
    return push(std::move(n));
}

Tape::Ref Tape::mean_rows(Ref a) {
    Node n;
    n.value = desgrada::mean_rows(value(a));
    n.op = Op::mean_rows;
    n.a = a;
    n.needs_grad = requires_grad(a);
    return push(std::move(n));
}

Tape::Ref Tape::softmax_vec(Ref a) {
    const Tensor& A = value(a);
    Node n;
    n.value = A;
    double mx = A[0];
    for (std::size_t i = 1; i < A.size(); ++i) mx = std::max(mx, A[i]);
    double z = 0.0;
    for (std::size_t i = 0; i < A.size(); ++i) {
        n.value[i] = std::exp(A[i] - mx);
        z += n.value[i];
    }
    for (std::size_t i = 0; i < A.size(); ++i) n.value[i] /= z;
    n.op = Op::softmax_vec;
    n.a = a;
    n.needs_grad = requires_grad(a);
    return push(std::move(n));
}

Tape::Ref Tape::tanh(Ref a) {
    Node n;
    n.value = value(a);
    for (std::size_t i = 0; i < n.value.size(); ++i) n.value[i] = std::tanh(n.value[i]);
    n.op = Op::tanh_fn;
    n.a = a;
    n.needs_grad = requires_grad(a);
    return push(std::move(n));
}

Tape::Ref Tape::sigmoid(Ref a) {
    Node n;
    n.value = value(a);
    for (std::size_t i = 0; i < n.value.size(); ++i)
        n.value[i] = 1.0 / (1.0 + std::exp(-n.value[i]));
    n.op = Op::sigmoid_fn;
    n.a = a;
    n.needs_grad = requires_grad(a);
    return push(std::move(n));
}

Tape::Ref Tape::transpose(Ref a) {
    Node n;
    n.value = desgrada::transpose(value(a));
    n.op = Op::transpose_fn;
    n.a = a;
    n.needs_grad = requires_grad(a);
    return push(std::move(n));
}

Tape::Ref Tape::concat_rows(Ref a, Ref b) {
    const Tensor& A = value(a);
    const Tensor& B = value(b);
    if (A.cols() != B.cols()) throw ShapeError("concat_rows: column mismatch");
    Node n;
    n.value = Tensor(A.rows() + B.rows(), A.cols());
    std::copy(A.data(), A.data() + A.size(), n.value.data());
    std::copy(B.data(), B.data() + B.size(), n.value.data() + A.size());
    n.op = Op::concat_rows;
    n.a = a;
    n.b = b;
    n.needs_grad = requires_grad(a) || requires_grad(b);
    return push(std::move(n));
}

Tape::Ref Tape::stack_rows(const std::vector<Ref>& rows) {
    if (rows.empty()) throw ArgumentError("stack_rows: no rows");
    const std::size_t d = value(rows[0]).cols();
    Node n;
    n.value = Tensor(rows.size(), d);
    bool needs = false;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const Tensor& r = value(rows[i]);
        if (r.rows() != 1 || r.cols() != d) throw ShapeError("stack_rows: expected 1xd rows");
        std::copy(r.data(), r.data() + d, n.value.data() + i * d);
        needs = needs || requires_grad(rows[i]);
    }
    n.op = Op::stack_rows;
    n.needs_grad = needs;
    n.aux = static_cast<int>(int_aux_.size());
    int_aux_.push_back(rows);
    return push(std::move(n));
}

Tape::Ref Tape::heaviside_sg(Ref a, double width) {
    if (width <= 0.0) throw ArgumentError("heaviside_sg: width must be positive");
    const Tensor& A = value(a);
    Node n;
    n.value = A;
    if (hmode_ == HeavisideMode::exact) {
        for (std::size_t i = 0; i < A.size(); ++i) n.value[i] = A[i] >= 0.0 ? 1.0 : 0.0;
    } else {
        for (std::size_t i = 0; i < A.size(); ++i) {
            const double r = A[i] / width + 0.5;
            n.value[i] = r < 0.0 ? 0.0 : (r > 1.0 ? 1.0 : r);
        }
    }
    n.op = Op::heaviside;
    n.a = a;
    n.s0 = width;
    n.needs_grad = requires_grad(a);
    return push(std::move(n));
}

Tape::Ref Tape::grad_reverse(Ref a, double lambda_coeff) {
    Node n;
    n.value = value(a);
    n.op = Op::grad_reverse;
    n.a = a;
    n.s0 = lambda_coeff;
    n.needs_grad = requires_grad(a);
    return push(std::move(n));
}

Tape::Ref Tape::log_clamped(Ref a, double lo, double hi) {
    if (!(lo > 0.0 && hi > lo)) throw ArgumentError("log_clamped: need 0 < lo < hi");
    const Tensor& A = value(a);
    Node n;
    n.value = A;
    for (std::size_t i = 0; i < A.size(); ++i) {
        const double c = A[i] < lo ? lo : (A[i] > hi ? hi : A[i]);
        n.value[i] = std::log(c);
    }
    n.op = Op::log_clamped;
    n.a = a;
    n.s0 = lo;
    n.s1 = hi;
    n.needs_grad = requires_grad(a);
    return push(std::move(n));
}

Tape::Ref Tape::cross_entropy_mean(Ref logits, const std::vector<int>& labels) {
    const Tensor& Z = value(logits);
    if (labels.size() != Z.rows()) throw ShapeError("cross_entropy_mean: label count mismatch");
    for (int y : labels)
        if (y < 0 || y >= static_cast<int>(Z.cols()))
            throw ArgumentError("cross_entropy_mean: label out of range");
    double loss = 0.0;
    for (std::size_t i = 0; i < Z.rows(); ++i) {
        double mx = Z(i, 0);
        for (std::size_t j = 1; j < Z.cols(); ++j) mx = std::max(mx, Z(i, j));
        double lse = 0.0;
        for (std::size_t j = 0; j < Z.cols(); ++j) lse += std::exp(Z(i, j) - mx);
        lse = std::log(lse) + mx;
        loss += lse - Z(i, static_cast<std::size_t>(labels[i]));
    }
    Node n;
    n.value = Tensor(1, 1, loss / static_cast<double>(Z.rows()));
    n.op = Op::cross_entropy;
    n.a = logits;
    n.needs_grad = requires_grad(logits);
    n.aux = static_cast<int>(int_aux_.size());
    int_aux_.push_back(labels);
    return push(std::move(n));
}

void Tape::backward(Ref root) {
    Node& r = nodes_[static_cast<std::size_t>(root)];
    if (r.value.size() != 1) throw ShapeError("backward: root must be scalar");
    grad_buffer(root)[0] = 1.0;
    for (Ref i = root; i >= 0; --i) {
        const Node& n = nodes_[static_cast<std::size_t>(i)];
        if (!n.needs_grad || n.op == Op::leaf) continue;
        if (n.grad.size() != n.value.size()) continue; // never touched by downstream
        backward_node(i);
    }
}

void Tape::backward_node(Ref i) {
    Node& n = nodes_[static_cast<std::size_t>(i)];
    const Tensor& g = n.grad;
    auto parent_needs = [&](Ref p) { return p >= 0 && nodes_[static_cast<std::size_t>(p)].needs_grad; };

    switch (n.op) {
    case Op::leaf:
        break;
    case Op::matmul:
    case Op::spike_matmul: {
        const Tensor& A = value(n.a);
        const Tensor& B = value(n.b);
        const std::size_t rows = A.rows(), inner = A.cols(), cols = B.cols();
        if (parent_needs(n.a)) {
            // gA += g * B^T
            Tensor& ga = grad_buffer(n.a);
            for (std::size_t i2 = 0; i2 < rows; ++i2) {
                const double* grow = g.data() + i2 * cols;
                double* garow = ga.data() + i2 * inner;
                for (std::size_t p = 0; p < inner; ++p) {
                    const double* brow = B.data() + p * cols;
                    double acc = 0.0;
                    for (std::size_t j = 0; j < cols; ++j) acc += grow[j] * brow[j];
                    garow[p] += acc;
                }
            }
        }
        if (parent_needs(n.b)) {
            // gB += A^T * g; skip zero entries of A (pays off for spikes)
            Tensor& gb = grad_buffer(n.b);
            for (std::size_t i2 = 0; i2 < rows; ++i2) {
                const double* arow = A.data() + i2 * inner;
                const double* grow = g.data() + i2 * cols;
                for (std::size_t p = 0; p < inner; ++p) {
                    const double av = arow[p];
                    if (av == 0.0) continue;
                    double* gbrow = gb.data() + p * cols;
                    if (av == 1.0) {
                        for (std::size_t j = 0; j < cols; ++j) gbrow[j] += grow[j];
                    } else {
                        for (std::size_t j = 0; j < cols; ++j) gbrow[j] += av * grow[j];
                    }
                }
            }
        }
        break;
    }
    case Op::spmm: {
        if (parent_needs(n.a)) {
            const SymAdj& adj = *adj_aux_[static_cast<std::size_t>(n.aux)];
            Tensor tmp(g.rows(), g.cols());
            adj.multiply(g, tmp); // symmetric operator
            Tensor& ga = grad_buffer(n.a);
            for (std::size_t k2 = 0; k2 < tmp.size(); ++k2) ga[k2] += tmp[k2];
        }
        break;
    }
    case Op::add: {
        if (parent_needs(n.a)) {
            Tensor& ga = grad_buffer(n.a);
            for (std::size_t k2 = 0; k2 < g.size(); ++k2) ga[k2] += g[k2];
        }
        if (parent_needs(n.b)) {
            Tensor& gb = grad_buffer(n.b);
            for (std::size_t k2 = 0; k2 < g.size(); ++k2) gb[k2] += g[k2];
        }
        break;
    }
    case Op::sub: {
        if (parent_needs(n.a)) {
            Tensor& ga = grad_buffer(n.a);
            for (std::size_t k2 = 0; k2 < g.size(); ++k2) ga[k2] += g[k2];
        }
        if (parent_needs(n.b)) {
            Tensor& gb = grad_buffer(n.b);
            for (std::size_t k2 = 0; k2 < g.size(); ++k2) gb[k2] -= g[k2];
        }
        break;
    }
    case Op::mul: {
        const Tensor& A = value(n.a);
        const Tensor& B = value(n.b);
        if (parent_needs(n.a)) {
            Tensor& ga = grad_buffer(n.a);
            for (std::size_t k2 = 0; k2 < g.size(); ++k2) ga[k2] += g[k2] * B[k2];
        }
        if (parent_needs(n.b)) {
            Tensor& gb = grad_buffer(n.b);
            for (std::size_t k2 = 0; k2 < g.size(); ++k2) gb[k2] += g[k2] * A[k2];
        }
        break;
    }
    case Op::scale: {
        if (parent_needs(n.a)) {
            Tensor& ga = grad_buffer(n.a);
            for (std::size_t k2 = 0; k2 < g.size(); ++k2) ga[k2] += n.s0 * g[k2];
        }
        break;
    }
    case Op::add_scalar: {
        if (parent_needs(n.a)) {
            Tensor& ga = grad_buffer(n.a);
            for (std::size_t k2 = 0; k2 < g.size(); ++k2) ga[k2] += g[k2];
        }
        break;
    }
    case Op::add_rowvec: {
        if (parent_needs(n.a)) {
            Tensor& ga = grad_buffer(n.a);
            for (std::size_t k2 = 0; k2 < g.size(); ++k2) ga[k2] += g[k2];
        }
        if (parent_needs(n.b)) {
            Tensor& gb = grad_buffer(n.b);
            for (std::size_t i2 = 0; i2 < g.rows(); ++i2)
                for (std::size_t j = 0; j < g.cols(); ++j) gb[j] += g(i2, j);
        }
        break;
    }
    case Op::mul_colvec: {
        if (parent_needs(n.a)) {
            const std::vector<double>& c = vec_aux_[static_cast<std::size_t>(n.aux)];
            Tensor& ga = grad_buffer(n.a);
            for (std::size_t i2 = 0; i2 < g.rows(); ++i2)
                for (std::size_t j = 0; j < g.cols(); ++j) ga(i2, j) += c[i2] * g(i2, j);
        }
        break;
    }
    case Op::sub_colvec: {
        if (parent_needs(n.a)) {
            Tensor& ga = grad_buffer(n.a);
            for (std::size_t k2 = 0; k2 < g.size(); ++k2) ga[k2] += g[k2];
        }
        break;
    }
    case Op::mean: {
        if (parent_needs(n.a)) {
            Tensor& ga = grad_buffer(n.a);
            const double s = g[0] / static_cast<double>(ga.size());
            for (std::size_t k2 = 0; k2 < ga.size(); ++k2) ga[k2] += s;
        }
        break;
    }
    case Op::mean_rows: {
        if (parent_needs(n.a)) {
            Tensor& ga = grad_buffer(n.a);
            const double inv = 1.0 / static_cast<double>(ga.rows());
            for (std::size_t i2 = 0; i2 < ga.rows(); ++i2)
                for (std::size_t j = 0; j < ga.cols(); ++j) ga(i2, j) += inv * g[j];
        }
        break;
    }
    case Op::softmax_vec: {
        if (parent_needs(n.a)) {
            const Tensor& p = n.value;
            double dot = 0.0;
            for (std::size_t k2 = 0; k2 < p.size(); ++k2) dot += p[k2] * g[k2];
            Tensor& ga = grad_buffer(n.a);
            for (std::size_t k2 = 0; k2 < p.size(); ++k2) ga[k2] += p[k2] * (g[k2] - dot);
        }
        break;
    }
    case Op::tanh_fn: {
        if (parent_needs(n.a)) {
            Tensor& ga = grad_buffer(n.a);
            for (std::size_t k2 = 0; k2 < g.size(); ++k2)
                ga[k2] += g[k2] * (1.0 - n.value[k2] * n.value[k2]);
        }
        break;
    }
    case Op::sigmoid_fn: {
        if (parent_needs(n.a)) {
            Tensor& ga = grad_buffer(n.a);
            for (std::size_t k2 = 0; k2 < g.size(); ++k2)
                ga[k2] += g[k2] * n.value[k2] * (1.0 - n.value[k2]);
        }
        break;
    }
    case Op::transpose_fn: {
        if (parent_needs(n.a)) {
            Tensor& ga = grad_buffer(n.a);
            for (std::size_t i2 = 0; i2 < g.rows(); ++i2)
                for (std::size_t j = 0; j < g.cols(); ++j) ga(j, i2) += g(i2, j);
        }
        break;
    }
    case Op::concat_rows: {
        const std::size_t arows = value(n.a).rows();
        const std::size_t cols = g.cols();
        if (parent_needs(n.a)) {
            Tensor& ga = grad_buffer(n.a);
            for (std::size_t k2 = 0; k2 < arows * cols; ++k2) ga[k2] += g[k2];
        }
        if (parent_needs(n.b)) {
            Tensor& gb = grad_buffer(n.b);
            for (std::size_t k2 = 0; k2 < gb.size(); ++k2) gb[k2] += g[arows * cols + k2];
        }
        break;
    }
    case Op::stack_rows: {
        const std::vector<int>& rows = int_aux_[static_cast<std::size_t>(n.aux)];
        const std::size_t d = g.cols();
        for (std::size_t r = 0; r < rows.size(); ++r) {
            if (!parent_needs(rows[r])) continue;
            Tensor& gr = grad_buffer(rows[r]);
            for (std::size_t j = 0; j < d; ++j) gr[j] += g(r, j);
        }
        break;
    }
    case Op::heaviside: {
        if (parent_needs(n.a)) {
            const Tensor& x = value(n.a);
            Tensor& ga = grad_buffer(n.a);
            for (std::size_t k2 = 0; k2 < g.size(); ++k2)
                ga[k2] += g[k2] * surrogate_grad(x[k2], n.s0);
        }
        break;
    }
    case Op::grad_reverse: {
        if (parent_needs(n.a)) {
            Tensor& ga = grad_buffer(n.a);
            for (std::size_t k2 = 0; k2 < g.size(); ++k2) ga[k2] -= n.s0 * g[k2];
        }
        break;
    }
    case Op::log_clamped: {
        if (parent_needs(n.a)) {
            const Tensor& x = value(n.a);
            Tensor& ga = grad_buffer(n.a);
            for (std::size_t k2 = 0; k2 < g.size(); ++k2) {
                if (x[k2] >= n.s0 && x[k2] <= n.s1) ga[k2] += g[k2] / x[k2];
            }
        }
        break;
    }
    case Op::cross_entropy: {
        if (parent_needs(n.a)) {
            const Tensor& Z = value(n.a);
            const std::vector<int>& labels = int_aux_[static_cast<std::size_t>(n.aux)];
            Tensor& ga = grad_buffer(n.a);
            const double gscale = g[0] / static_cast<double>(Z.rows());
            for (std::size_t i2 = 0; i2 < Z.rows(); ++i2) {
                double mx = Z(i2, 0);
                for (std::size_t j = 1; j < Z.cols(); ++j) mx = std::max(mx, Z(i2, j));
                double lse = 0.0;
                for (std::size_t j = 0; j < Z.cols(); ++j) lse += std::exp(Z(i2, j) - mx);
                for (std::size_t j = 0; j < Z.cols(); ++j) {
                    double p = std::exp(Z(i2, j) - mx) / lse;
                    double target = (static_cast<int>(j) == labels[i2]) ? 1.0 : 0.0;
                    ga(i2, j) += gscale * (p - target);
                }
            }
        }
        break;
    }
    }
}

GradCheckResult check_gradients(
    const std::function<double(const std::vector<Tensor>&, std::vector<Tensor>*)>& f,
    std::vector<Tensor> params, double eps, std::uint64_t seed, std::size_t min_coords) {
    if (eps <= 0.0) throw ArgumentError("check_gradients: eps must be positive");

    std::vector<Tensor> analytic;
    const double base = f(params, &analytic);
    if (!std::isfinite(base)) throw NumericError("check_gradients: non-finite function value");
    if (analytic.size() != params.size())
        throw ArgumentError("check_gradients: gradient count mismatch");

    std::vector<std::pair<std::size_t, std::size_t>> coords;
    for (std::size_t p = 0; p < params.size(); ++p)
        for (std::size_t i = 0; i < params[p].size(); ++i) coords.push_back({p, i});
    if (coords.empty()) return {0.0, 0};

    SplitMix64 rng(seed);
    if (coords.size() > min_coords) {
        shuffle_indices(coords, rng);
        coords.resize(min_coords);
    }

    double max_rel = 0.0;
    for (const auto& [p, i] : coords) {
        const double orig = params[p][i];
        params[p][i] = orig + eps;
        const double up = f(params, nullptr);
        params[p][i] = orig - eps;
        const double dn = f(params, nullptr);
        params[p][i] = orig;
        if (!std::isfinite(up) || !std::isfinite(dn))
            throw NumericError("check_gradients: non-finite function value");
        const double fd = (up - dn) / (2.0 * eps);
        const double an = analytic[p][i];
        const double denom = std::max({std::abs(fd), std::abs(an), 1e-8});
        max_rel = std::max(max_rel, std::abs(fd - an) / denom);
    }
    return {max_rel, coords.size()};
}

} // namespace desgrada
