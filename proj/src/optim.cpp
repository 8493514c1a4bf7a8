#include "beta/optim.hpp"

#include <cmath>

#include "beta/errors.hpp"
#include "beta/kernels.hpp"

namespace beta {

void adam_step(const std::vector<Tensor*>& params,
               const std::vector<const Tensor*>& grads, AdamState& state,
               const AdamConfig& cfg) {
    if (params.size() != grads.size())
        throw dim_error("adam_step: params/grads count mismatch");
    if (state.step == 0 && state.m.empty()) {
        for (const Tensor* p : params) {
            state.m.push_back(Tensor::zeros(p->shape()));
            state.v.push_back(Tensor::zeros(p->shape()));
        }
    }
    if (state.m.size() != params.size())
        throw dim_error("adam_step: state size mismatch");

    state.step += 1;
    const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));

    for (std::size_t i = 0; i < params.size(); ++i) {
        Tensor& p = *params[i];
        const Tensor& g = *grads[i];
        if (!p.same_shape(g) || !p.same_shape(state.m[i]))
            throw dim_error("adam_step: shape mismatch at parameter " +
                            std::to_string(i));
        kern::ops().adam(p.data(), g.data(), state.m[i].data(), state.v[i].data(),
                         p.size(), cfg.lr, cfg.beta1, cfg.beta2, cfg.eps, bc1, bc2);
    }
}

}  // namespace beta
