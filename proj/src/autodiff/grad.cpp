#include "embedhalluc/autodiff/grad.hpp"

#include <string>
#include <unordered_map>
#include <unordered_set>
#include <utility>

#include "embedhalluc/autodiff/ops.hpp"
#include "embedhalluc/errors.hpp"

namespace embedhalluc::ad {

namespace {

// Post-order over the recorded subgraph: every node appears after its inputs.
std::vector<Node*> topo_order(Node* root) {
    std::vector<Node*> order;
    std::unordered_set<Node*> visited;
    std::vector<std::pair<Node*, std::size_t>> stack;
    stack.emplace_back(root, 0);
    visited.insert(root);
    while (!stack.empty()) {
        auto& [node, next] = stack.back();
        if (next < node->inputs.size()) {
            Node* child = node->inputs[next++].node();
            if (child && child->requires_grad && visited.insert(child).second) stack.emplace_back(child, 0);
        } else {
            order.push_back(node);
            stack.pop_back();
        }
    }
    return order;
}

// Runs the reverse sweep and returns the accumulated gradient of every node
// in `keep` plus every leaf.
std::unordered_map<Node*, Tensor> run_reverse(const Tensor& output, bool create_graph,
                                              const std::unordered_set<Node*>& keep) {
    std::unordered_map<Node*, Tensor> grads;
    std::unordered_map<Node*, Tensor> result;
    GradModeGuard mode(create_graph);
    const auto order = topo_order(output.node());
    grads[output.node()] = Tensor::ones(output.shape());
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        Node* node = *it;
        auto found = grads.find(node);
        if (found == grads.end()) continue;
        Tensor g = std::move(found->second);
        grads.erase(found);
        if (!node->vjp || keep.count(node)) result[node] = g;
        if (!node->vjp) continue;
        if (create_graph && !node->twice_differentiable) {
            throw CapabilityError(std::string("op '") + node->op +
                                  "' has no differentiable vector-Jacobian product");
        }
        auto input_grads = node->vjp(g);
        for (std::size_t i = 0; i < node->inputs.size() && i < input_grads.size(); ++i) {
            Node* in = node->inputs[i].node();
            if (!in || !in->requires_grad || !input_grads[i].defined()) continue;
            if (input_grads[i].shape() != in->shape) {
                throw DimensionError(std::string("gradient of op '") + node->op + "' has shape " +
                                     shape_str(input_grads[i].shape()) + ", expected " + shape_str(in->shape));
            }
            auto slot = grads.find(in);
            if (slot == grads.end())
                grads.emplace(in, std::move(input_grads[i]));
            else
                slot->second = add(slot->second, input_grads[i]);
        }
    }
    return result;
}

}  // namespace

std::vector<Tensor> grad(const Tensor& output, const std::vector<Tensor>& inputs, bool create_graph) {
    std::vector<Tensor> out;
    out.reserve(inputs.size());
    if (!output.requires_grad()) {
        for (const auto& in : inputs) out.push_back(Tensor::zeros(in.shape()));
        return out;
    }
    std::unordered_set<Node*> keep;
    for (const auto& in : inputs) keep.insert(in.node());
    auto result = run_reverse(output, create_graph, keep);
    for (const auto& in : inputs) {
        auto it = result.find(in.node());
        out.push_back(it != result.end() ? it->second : Tensor::zeros(in.shape()));
    }
    return out;
}

void backward(const Tensor& loss) {
    if (!loss.requires_grad()) return;
    auto result = run_reverse(loss, false, {});
    for (auto& [node, g] : result) {
        if (node->vjp) continue;
        if (!node->grad.defined()) {
            node->grad = g.detach();
        } else {
            auto& acc = node->grad.mutable_values();
            const auto& add_values = g.values();
            for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += add_values[i];
        }
    }
}

Tensor input_gradient(const std::function<Tensor(const Tensor&)>& net, const Tensor& x) {
    Tensor probe = x.detach();
    probe.set_requires_grad(true);
    GradModeGuard recording(true);
    Tensor y = net(probe);
    return grad(sum(y), {probe}, true)[0];
}

}  // namespace embedhalluc::ad
