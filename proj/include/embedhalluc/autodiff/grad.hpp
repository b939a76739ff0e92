#pragma once

#include <functional>
#include <vector>

#include "embedhalluc/autodiff/tensor.hpp"

namespace embedhalluc::ad {

// Reverse pass from a scalar output. Returns d(output)/d(input) for each
// requested input (zeros when the input does not influence the output).
// With create_graph the VJPs are recorded, so the returned gradients can be
// differentiated again.
std::vector<Tensor> grad(const Tensor& output, const std::vector<Tensor>& inputs, bool create_graph = false);

// Accumulates d(loss)/d(leaf) into every reachable leaf's grad(). A loss that
// does not require grad is a no-op.
void backward(const Tensor& loss);

// Gradient of sum(net(x)) with respect to x, left attached to the graph so
// that penalties built from it remain differentiable w.r.t. net's parameters.
Tensor input_gradient(const std::function<Tensor(const Tensor&)>& net, const Tensor& x);

}  // namespace embedhalluc::ad
