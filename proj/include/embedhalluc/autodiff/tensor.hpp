#pragma once

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <memory>
#include <string>
#include <vector>

namespace embedhalluc::ad {

using Shape = std::vector<std::size_t>;

std::size_t shape_numel(const Shape& shape);
std::string shape_str(const Shape& shape);

class Tensor;
struct Node;

// Vector-Jacobian product of one recorded op: maps the gradient of the op's
// output to one gradient per input (an undefined Tensor means "no gradient").
// VJPs are written with differentiable ops, so running them with recording
// enabled yields a graph that can itself be differentiated.
using VjpFn = std::function<std::vector<Tensor>(const Tensor& grad_output)>;

// Handle to a node in the recorded computation graph. Copies share the node.
class Tensor {
public:
    Tensor() = default;

    static Tensor from_values(Shape shape, std::vector<double> values, bool requires_grad = false);
    static Tensor zeros(Shape shape, bool requires_grad = false);
    static Tensor ones(Shape shape, bool requires_grad = false);
    static Tensor full(Shape shape, double value, bool requires_grad = false);
    static Tensor scalar(double value, bool requires_grad = false);

    bool defined() const noexcept { return node_ != nullptr; }

    const Shape& shape() const;
    std::size_t rank() const { return shape().size(); }
    std::size_t size(std::size_t dim) const;
    std::size_t numel() const;

    const std::vector<double>& values() const;
    // In-place access for optimizers and initializers; never use on a tensor
    // whose graph is still going to be differentiated.
    std::vector<double>& mutable_values();

    double item() const;
    double at(std::initializer_list<std::size_t> index) const;

    bool requires_grad() const;
    Tensor& set_requires_grad(bool flag);
    bool is_leaf() const;
    const char* op_name() const;

    // Gradient accumulated by backward(); undefined until the first backward.
    const Tensor& grad() const;
    void zero_grad();

    // New leaf holding a copy of the values, disconnected from the graph.
    Tensor detach() const;
    // Deep copy as a leaf keeping the requires_grad flag.
    Tensor clone() const;

    bool same_node(const Tensor& other) const noexcept { return node_ == other.node_; }
    Node* node() const noexcept { return node_.get(); }

private:
    explicit Tensor(std::shared_ptr<Node> node) : node_(std::move(node)) {}
    friend Tensor make_result(Shape, std::vector<double>, const char*, std::vector<Tensor>, VjpFn,
                              bool);
    friend Tensor make_leaf(Shape, std::vector<double>, bool);

    std::shared_ptr<Node> node_;
};

struct Node {
    Shape shape;
    std::vector<double> data;
    bool requires_grad = false;
    const char* op = "leaf";
    std::vector<Tensor> inputs;
    VjpFn vjp;
    // False for ops whose VJP is computed numerically outside the graph;
    // such ops cannot sit on a path that is differentiated twice.
    bool twice_differentiable = true;
    Tensor grad;
};

Tensor make_leaf(Shape shape, std::vector<double> values, bool requires_grad);

// Builds an op output. The op is recorded (inputs + vjp kept) only when
// recording is enabled and at least one input requires a gradient.
Tensor make_result(Shape shape, std::vector<double> values, const char* op,
                   std::vector<Tensor> inputs, VjpFn vjp, bool twice_differentiable = true);

bool grad_enabled() noexcept;

// Training loops free and rebuild a graph every step. Keeps the C allocator
// from handing that memory back to the kernel in between (glibc only; a
// no-op elsewhere). Process-wide, applied once.
void keep_freed_memory() noexcept;

// RAII switch for graph recording on the current thread.
class GradModeGuard {
public:
    explicit GradModeGuard(bool enabled);
    ~GradModeGuard();
    GradModeGuard(const GradModeGuard&) = delete;
    GradModeGuard& operator=(const GradModeGuard&) = delete;

private:
    bool previous_;
};

class NoGradGuard : public GradModeGuard {
public:
    NoGradGuard() : GradModeGuard(false) {}
};

}  // namespace embedhalluc::ad
