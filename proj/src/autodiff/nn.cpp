#include "embedhalluc/autodiff/nn.hpp"

#include <cmath>
#include <random>

#include "embedhalluc/autodiff/ops.hpp"
#include "embedhalluc/errors.hpp"

namespace embedhalluc::ad {

void append_prefixed(std::vector<NamedTensor>& out, const std::string& prefix, std::vector<NamedTensor> items) {
    for (auto& item : items) {
        item.name = prefix + "." + item.name;
        out.push_back(std::move(item));
    }
}

std::vector<Tensor> trainable_tensors(const std::vector<NamedTensor>& named) {
    std::vector<Tensor> out;
    for (const auto& n : named)
        if (n.trainable) out.push_back(n.tensor);
    return out;
}

Linear::Linear(std::size_t in_features, std::size_t out_features, Rng& rng) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(in_features));
    weight_ = rand_uniform({in_features, out_features}, rng, -bound, bound);
    weight_.set_requires_grad(true);
    bias_ = Tensor::zeros({out_features}, true);
}

Linear Linear::normal(std::size_t in_features, std::size_t out_features, double stddev, Rng& rng) {
    Linear layer;
    layer.weight_ = randn({in_features, out_features}, rng, stddev);
    layer.weight_.set_requires_grad(true);
    layer.bias_ = Tensor::zeros({out_features}, true);
    return layer;
}

Tensor Linear::forward(const Tensor& x) const {
    const std::size_t in = in_features();
    if (x.rank() < 2 || x.shape().back() != in) {
        throw DimensionError("linear layer expects last dimension " + std::to_string(in) + ", got " +
                             shape_str(x.shape()));
    }
    if (x.rank() == 2) return add(matmul(x, weight_), bias_);
    Shape flat{x.numel() / in, in};
    Shape out_shape = x.shape();
    out_shape.back() = out_features();
    return reshape(add(matmul(reshape(x, flat), weight_), bias_), out_shape);
}

std::vector<NamedTensor> Linear::named_tensors() const { return {{"weight", weight_, true}, {"bias", bias_, true}}; }

Linear Linear::deep_copy() const {
    Linear copy;
    copy.weight_ = weight_.clone();
    copy.bias_ = bias_.clone();
    return copy;
}

BatchNorm::BatchNorm(std::size_t features, BatchNormOptions options)
    : options_(options),
      gamma_(Tensor::ones({features}, true)),
      beta_(Tensor::zeros({features}, true)),
      running_mean_(Tensor::zeros({features})),
      running_var_(Tensor::ones({features})) {}

Tensor batch_norm_normalize(const Tensor& x, Tensor& running_mean, Tensor& running_var, Mode mode,
                            const BatchNormOptions& options) {
    if (x.rank() != 2 || x.size(1) != running_mean.numel()) {
        throw DimensionError("batch_norm expects [b x " + std::to_string(running_mean.numel()) + "], got " +
                             shape_str(x.shape()));
    }
    if (mode == Mode::eval) {
        const Tensor denom = sqrt(add_scalar(running_var, options.eps));
        return div(sub(x, running_mean), denom);
    }
    const std::size_t rows = x.size(0);
    if (rows < 2) throw DegenerateBatchError("batch_norm in train mode needs at least 2 rows, got 1");
    const Tensor batch_mean = mean(x, 0, true);
    const Tensor centered = sub(x, batch_mean);
    const Tensor batch_var = mean(square(centered), 0, true);
    {
        // Running variance tracks the unbiased estimate.
        const double unbias = static_cast<double>(rows) / static_cast<double>(rows - 1);
        auto& rm = running_mean.mutable_values();
        auto& rv = running_var.mutable_values();
        const auto& bm = batch_mean.values();
        const auto& bv = batch_var.values();
        for (std::size_t j = 0; j < rm.size(); ++j) {
            rm[j] = (1.0 - options.momentum) * rm[j] + options.momentum * bm[j];
            rv[j] = (1.0 - options.momentum) * rv[j] + options.momentum * bv[j] * unbias;
        }
    }
    return div(centered, sqrt(add_scalar(batch_var, options.eps)));
}

Tensor BatchNorm::forward(const Tensor& x, Mode mode) {
    const Tensor normalized = batch_norm_normalize(x, running_mean_, running_var_, mode, options_);
    return add(mul(normalized, gamma_), beta_);
}

std::vector<NamedTensor> BatchNorm::named_tensors() const {
    return {{"gamma", gamma_, true},
            {"beta", beta_, true},
            {"running_mean", running_mean_, false},
            {"running_var", running_var_, false}};
}

BatchNorm BatchNorm::deep_copy() const {
    BatchNorm copy;
    copy.options_ = options_;
    copy.gamma_ = gamma_.clone();
    copy.beta_ = beta_.clone();
    copy.running_mean_ = running_mean_.clone();
    copy.running_var_ = running_var_.clone();
    return copy;
}

LayerNorm::LayerNorm(std::size_t features, double eps)
    : eps_(eps), gamma_(Tensor::ones({features}, true)), beta_(Tensor::zeros({features}, true)) {}

Tensor LayerNorm::forward(const Tensor& x) const {
    const std::size_t last = x.rank() - 1;
    const Tensor centered = sub(x, mean(x, last, true));
    const Tensor var = mean(square(centered), last, true);
    return add(mul(div(centered, sqrt(add_scalar(var, eps_))), gamma_), beta_);
}

std::vector<NamedTensor> LayerNorm::named_tensors() const {
    return {{"gamma", gamma_, true}, {"beta", beta_, true}};
}

LayerNorm LayerNorm::deep_copy() const {
    LayerNorm copy;
    copy.eps_ = eps_;
    copy.gamma_ = gamma_.clone();
    copy.beta_ = beta_.clone();
    return copy;
}

}  // namespace embedhalluc::ad
