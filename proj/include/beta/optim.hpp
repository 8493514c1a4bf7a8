#pragma once

#include <vector>

#include "beta/tensor.hpp"

namespace beta {

struct AdamConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

struct AdamState {
    std::vector<Tensor> m;
    std::vector<Tensor> v;
    long step = 0;
};

// One Adam update with bias correction. State is initialized lazily on the
// first call; afterwards every shape must stay fixed (dim_error otherwise).
void adam_step(const std::vector<Tensor*>& params,
               const std::vector<const Tensor*>& grads, AdamState& state,
               const AdamConfig& cfg);

}  // namespace beta
