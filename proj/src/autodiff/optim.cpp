#include "embedhalluc/autodiff/optim.hpp"

#include <cmath>
#include <string>

#include "embedhalluc/errors.hpp"

namespace embedhalluc::ad {

AdamState::AdamState(std::span<const Tensor> params, AdamOptions opts) : options(opts) {
    for (const auto& p : params) {
        first_moment.emplace_back(p.numel(), 0.0);
        second_moment.emplace_back(p.numel(), 0.0);
    }
}

void adam_step(std::span<Tensor> params, std::span<const Tensor> grads, AdamState& state) {
    if (params.size() != grads.size() || params.size() != state.first_moment.size()) {
        throw DimensionError("adam_step: " + std::to_string(params.size()) + " params, " +
                             std::to_string(grads.size()) + " grads, " + std::to_string(state.first_moment.size()) +
                             " moment slots");
    }
    for (std::size_t i = 0; i < params.size(); ++i) {
        const bool grad_ok = !grads[i].defined() || grads[i].shape() == params[i].shape();
        if (!grad_ok || state.first_moment[i].size() != params[i].numel()) {
            throw DimensionError("adam_step: parameter " + std::to_string(i) + " has shape " +
                                 shape_str(params[i].shape()) + " but gradient/state disagree");
        }
    }
    state.step += 1;
    const auto& o = state.options;
    const double t = static_cast<double>(state.step);
    const double correction1 = 1.0 - std::pow(o.beta1, t);
    const double correction2 = 1.0 - std::pow(o.beta2, t);
    for (std::size_t i = 0; i < params.size(); ++i) {
        auto& theta = params[i].mutable_values();
        auto& m = state.first_moment[i];
        auto& v = state.second_moment[i];
        const double* g = grads[i].defined() ? grads[i].values().data() : nullptr;
        for (std::size_t j = 0; j < theta.size(); ++j) {
            const double gj = g ? g[j] : 0.0;
            m[j] = o.beta1 * m[j] + (1.0 - o.beta1) * gj;
            v[j] = o.beta2 * v[j] + (1.0 - o.beta2) * gj * gj;
            const double m_hat = m[j] / correction1;
            const double v_hat = v[j] / correction2;
            theta[j] -= o.lr * m_hat / (std::sqrt(v_hat) + o.eps);
        }
    }
}

Adam::Adam(std::vector<Tensor> params, AdamOptions options)
    : params_(std::move(params)), state_(params_, options) {}

void Adam::step() {
    std::vector<Tensor> grads;
    grads.reserve(params_.size());
    for (const auto& p : params_) grads.push_back(p.grad());
    adam_step(params_, grads, state_);
}

void Adam::zero_grad() {
    for (auto& p : params_) p.zero_grad();
}

}  // namespace embedhalluc::ad
