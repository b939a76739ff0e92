#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "embedhalluc/autodiff/tensor.hpp"
#include "embedhalluc/random.hpp"

namespace embedhalluc::ad {

// Elementwise binary ops broadcast numpy-style (shapes right-aligned, size-1
// dims stretch).
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor div(const Tensor& a, const Tensor& b);

Tensor neg(const Tensor& x);
Tensor scale(const Tensor& x, double factor);
Tensor add_scalar(const Tensor& x, double value);
Tensor exp(const Tensor& x);
Tensor log(const Tensor& x);
Tensor sqrt(const Tensor& x);
Tensor square(const Tensor& x);

// max(x, slope * x). The VJP multiplies by a constant mask, so the second
// derivative is zero away from the kink.
Tensor leaky_relu(const Tensor& x, double slope = 0.2);
Tensor relu(const Tensor& x);

// [m x k] * [k x n], or batched [B x m x k] * [B x k x n].
Tensor matmul(const Tensor& a, const Tensor& b);
// Swaps the last two dimensions.
Tensor transpose(const Tensor& x);

Tensor sum(const Tensor& x);
Tensor sum(const Tensor& x, std::size_t axis, bool keepdim = true);
Tensor mean(const Tensor& x);
Tensor mean(const Tensor& x, std::size_t axis, bool keepdim = true);

Tensor broadcast_to(const Tensor& x, const Shape& shape);
// Sums broadcast dimensions away; inverse of broadcast_to.
Tensor sum_to(const Tensor& x, const Shape& shape);
Tensor reshape(const Tensor& x, const Shape& shape);

Tensor concat(const std::vector<Tensor>& parts, std::size_t axis);
Tensor slice(const Tensor& x, std::size_t axis, std::size_t begin, std::size_t end);
// Places x at [begin, begin + x.size(axis)) of a zero tensor with `total`
// entries along axis.
Tensor pad_axis(const Tensor& x, std::size_t axis, std::size_t begin, std::size_t total);

// Row lookup table[ids[i]] -> [n x E].
Tensor gather_rows(const Tensor& table, const std::vector<std::size_t>& ids);
// out[ids[i]] += src[i]; out has `rows` rows.
Tensor scatter_add_rows(const Tensor& src, const std::vector<std::size_t>& ids, std::size_t rows);

// Maximum along an axis, returned as a constant (no gradient).
Tensor max_values(const Tensor& x, std::size_t axis, bool keepdim = true);

// Softmax family over the last axis; max-subtracted for stability.
Tensor log_softmax(const Tensor& logits);
Tensor softmax(const Tensor& logits);

// Mean over the batch of -log softmax(logits)[label].
Tensor softmax_cross_entropy(const Tensor& logits, const std::vector<int>& labels);

// Mean over the batch of sum_c t_c (log t_c - log softmax(s)_c), 0 log 0 = 0.
// The teacher distribution is treated as a constant target.
Tensor kl_divergence(const Tensor& teacher_probs, const Tensor& student_logits);

Tensor one_hot(const std::vector<int>& labels, std::size_t num_classes);

// Applies f elementwise with derivative df evaluated numerically outside the
// graph. First-order only: differentiating its VJP raises CapabilityError.
Tensor elementwise_map(const Tensor& x, const std::function<double(double)>& f,
                       const std::function<double(double)>& df, const char* name = "elementwise_map");

Tensor randn(const Shape& shape, Rng& rng, double stddev = 1.0);
Tensor rand_uniform(const Shape& shape, Rng& rng, double low = 0.0, double high = 1.0);

inline Tensor operator+(const Tensor& a, const Tensor& b) { return add(a, b); }
inline Tensor operator-(const Tensor& a, const Tensor& b) { return sub(a, b); }
inline Tensor operator*(const Tensor& a, const Tensor& b) { return mul(a, b); }
inline Tensor operator/(const Tensor& a, const Tensor& b) { return div(a, b); }
inline Tensor operator-(const Tensor& x) { return neg(x); }
inline Tensor operator*(const Tensor& x, double s) { return scale(x, s); }
inline Tensor operator*(double s, const Tensor& x) { return scale(x, s); }
inline Tensor operator+(const Tensor& x, double v) { return add_scalar(x, v); }
inline Tensor operator-(const Tensor& x, double v) { return add_scalar(x, -v); }

}  // namespace embedhalluc::ad
