#include "desgrada/adam.hpp"

#include <cmath>

#include "desgrada/errors.hpp"

namespace desgrada {

AdamState AdamState::init(const std::vector<Tensor*>& params) {
    AdamState s;
    s.m.reserve(params.size());
    s.v.reserve(params.size());
    for (const Tensor* p : params) {
        s.m.push_back(Tensor(p->rows(), p->cols()));
        s.v.push_back(Tensor(p->rows(), p->cols()));
    }
    return s;
}

void adam_step(const std::vector<Tensor*>& params, const std::vector<Tensor>& grads,
               AdamState& state, double lr, double weight_decay,
               const std::vector<std::string>& names) {
    constexpr double beta1 = 0.9;
    constexpr double beta2 = 0.999;
    constexpr double eps = 1e-8;
    if (params.size() != grads.size() || params.size() != state.m.size())
        throw ArgumentError("adam_step: parameter/gradient count mismatch");

    state.step += 1;
    const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(state.step));

    for (std::size_t p = 0; p < params.size(); ++p) {
        Tensor& theta = *params[p];
        const Tensor& g = grads[p];
        if (!theta.same_shape(g)) throw ShapeError("adam_step: gradient shape mismatch");
        if (!all_finite(g)) {
            const std::string name = p < names.size() ? names[p] : std::to_string(p);
            throw NumericError("adam_step: non-finite gradient for " + name);
        }
        Tensor& m = state.m[p];
        Tensor& v = state.v[p];
        for (std::size_t i = 0; i < theta.size(); ++i) {
            theta[i] -= lr * weight_decay * theta[i];
            m[i] = beta1 * m[i] + (1.0 - beta1) * g[i];
            v[i] = beta2 * v[i] + (1.0 - beta2) * g[i] * g[i];
            const double m_hat = m[i] / bc1;
            const double v_hat = v[i] / bc2;
            theta[i] -= lr * m_hat / (std::sqrt(v_hat) + eps);
        }
    }
}

} // namespace desgrada
