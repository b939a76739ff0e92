#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "embedhalluc/autodiff/tensor.hpp"

namespace embedhalluc::ad {

struct AdamOptions {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

// Moment accumulators for a fixed parameter list, in the same order.
struct AdamState {
    AdamOptions options;
    std::vector<std::vector<double>> first_moment;
    std::vector<std::vector<double>> second_moment;
    std::uint64_t step = 0;

    AdamState() = default;
    AdamState(std::span<const Tensor> params, AdamOptions opts);
};

// One bias-corrected Adam update in place. An undefined gradient counts as
// zero.
void adam_step(std::span<Tensor> params, std::span<const Tensor> grads, AdamState& state);

// Convenience owner: steps on the parameters' accumulated grad().
class Adam {
public:
    Adam() = default;
    Adam(std::vector<Tensor> params, AdamOptions options);

    void step();
    void zero_grad();
    void set_lr(double lr) { state_.options.lr = lr; }
    const AdamState& state() const { return state_; }

private:
    std::vector<Tensor> params_;
    AdamState state_;
};

}  // namespace embedhalluc::ad
