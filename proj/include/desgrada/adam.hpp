#pragma once

#include <string>
#include <vector>

#include "desgrada/tensor.hpp"

namespace desgrada {

// Adam with bias correction and decoupled weight decay (the decay shrinks
// parameters before the moment update). beta1=0.9, beta2=0.999, eps=1e-8.
struct AdamState {
    std::vector<Tensor> m;
    std::vector<Tensor> v;
    long long step = 0;

    static AdamState init(const std::vector<Tensor*>& params);
};

void adam_step(const std::vector<Tensor*>& params, const std::vector<Tensor>& grads,
               AdamState& state, double lr, double weight_decay,
               const std::vector<std::string>& names);

} // namespace desgrada
