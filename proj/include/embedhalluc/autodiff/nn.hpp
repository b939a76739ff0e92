#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "embedhalluc/autodiff/tensor.hpp"
#include "embedhalluc/random.hpp"

namespace embedhalluc::ad {

enum class Mode { train, eval };

// Layers hold Tensor handles, so copying a layer shares its parameters;
// deep_copy() gives an independent set.

// A parameter or buffer exposed for optimizers and checkpoints.
struct NamedTensor {
    std::string name;
    Tensor tensor;
    bool trainable = true;
};

void append_prefixed(std::vector<NamedTensor>& out, const std::string& prefix, std::vector<NamedTensor> items);
std::vector<Tensor> trainable_tensors(const std::vector<NamedTensor>& named);

// Affine map x W + b over the last dimension; accepts [b x in] or [b x T x in].
class Linear {
public:
    Linear() = default;
    // Weights ~ U(-1/sqrt(in), 1/sqrt(in)), bias zero.
    Linear(std::size_t in_features, std::size_t out_features, Rng& rng);
    // Weights ~ N(0, stddev^2), bias zero.
    static Linear normal(std::size_t in_features, std::size_t out_features, double stddev, Rng& rng);

    Tensor forward(const Tensor& x) const;
    std::size_t in_features() const { return weight_.size(0); }
    std::size_t out_features() const { return weight_.size(1); }
    Tensor& weight() { return weight_; }
    Tensor& bias() { return bias_; }
    std::vector<NamedTensor> named_tensors() const;
    Linear deep_copy() const;

private:
    Tensor weight_;
    Tensor bias_;
};

struct BatchNormOptions {
    double eps = 1e-5;
    double momentum = 0.1;
};

// Batch normalization over the rows of a [b x d] input with a learnable
// per-feature scale and shift. Train mode uses the population statistics of
// the batch and updates the running estimates; eval mode uses the running
// estimates.
class BatchNorm {
public:
    BatchNorm() = default;
    explicit BatchNorm(std::size_t features, BatchNormOptions options = {});

    Tensor forward(const Tensor& x, Mode mode);

    Tensor& gamma() { return gamma_; }
    Tensor& beta() { return beta_; }
    Tensor& running_mean() { return running_mean_; }
    Tensor& running_var() { return running_var_; }
    std::vector<NamedTensor> named_tensors() const;
    BatchNorm deep_copy() const;

private:
    BatchNormOptions options_;
    Tensor gamma_;
    Tensor beta_;
    Tensor running_mean_;
    Tensor running_var_;
};

// Free-function form: normalize before scale/shift.
Tensor batch_norm_normalize(const Tensor& x, Tensor& running_mean, Tensor& running_var, Mode mode,
                            const BatchNormOptions& options = {});

// Normalizes the last dimension.
class LayerNorm {
public:
    LayerNorm() = default;
    explicit LayerNorm(std::size_t features, double eps = 1e-5);

    Tensor forward(const Tensor& x) const;
    std::vector<NamedTensor> named_tensors() const;
    LayerNorm deep_copy() const;

private:
    double eps_ = 1e-5;
    Tensor gamma_;
    Tensor beta_;
};

}  // namespace embedhalluc::ad
