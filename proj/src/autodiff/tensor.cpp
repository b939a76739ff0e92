#include "embedhalluc/autodiff/tensor.hpp"

#include <mutex>
#include <sstream>
#include <utility>

#if defined(__GLIBC__)
#include <malloc.h>
#endif

#include "embedhalluc/errors.hpp"

namespace embedhalluc::ad {

namespace {
thread_local bool g_grad_enabled = true;
}

void keep_freed_memory() noexcept {
#if defined(__GLIBC__)
    static std::once_flag once;
    std::call_once(once, [] {
        mallopt(M_TRIM_THRESHOLD, 256 << 20);
        mallopt(M_MMAP_THRESHOLD, 64 << 20);
    });
#endif
}

std::size_t shape_numel(const Shape& shape) {
    std::size_t n = 1;
    for (auto d : shape) n *= d;
    return n;
}

std::string shape_str(const Shape& shape) {
    std::ostringstream os;
    os << '[';
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) os << 'x';
        os << shape[i];
    }
    os << ']';
    return os.str();
}

bool grad_enabled() noexcept { return g_grad_enabled; }

GradModeGuard::GradModeGuard(bool enabled) : previous_(g_grad_enabled) { g_grad_enabled = enabled; }
GradModeGuard::~GradModeGuard() { g_grad_enabled = previous_; }

Tensor make_leaf(Shape shape, std::vector<double> values, bool requires_grad) {
    if (shape_numel(shape) != values.size()) {
        throw DimensionError("tensor shape " + shape_str(shape) + " needs " +
                             std::to_string(shape_numel(shape)) + " values, got " +
                             std::to_string(values.size()));
    }
    auto node = std::make_shared<Node>();
    node->shape = std::move(shape);
    node->data = std::move(values);
    node->requires_grad = requires_grad;
    return Tensor(std::move(node));
}

Tensor make_result(Shape shape, std::vector<double> values, const char* op,
                   std::vector<Tensor> inputs, VjpFn vjp, bool twice_differentiable) {
    Tensor out = make_leaf(std::move(shape), std::move(values), false);
    bool record = false;
    if (g_grad_enabled) {
        for (const auto& in : inputs) {
            if (in.defined() && in.requires_grad()) {
                record = true;
                break;
            }
        }
    }
    Node* node = out.node();
    node->op = op;
    if (record) {
        node->requires_grad = true;
        node->inputs = std::move(inputs);
        node->vjp = std::move(vjp);
        node->twice_differentiable = twice_differentiable;
    }
    return out;
}

Tensor Tensor::from_values(Shape shape, std::vector<double> values, bool requires_grad) {
    return make_leaf(std::move(shape), std::move(values), requires_grad);
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) { return full(std::move(shape), 0.0, requires_grad); }

Tensor Tensor::ones(Shape shape, bool requires_grad) { return full(std::move(shape), 1.0, requires_grad); }

Tensor Tensor::full(Shape shape, double value, bool requires_grad) {
    const auto n = shape_numel(shape);
    return make_leaf(std::move(shape), std::vector<double>(n, value), requires_grad);
}

Tensor Tensor::scalar(double value, bool requires_grad) { return make_leaf({}, {value}, requires_grad); }

namespace {
Node& checked(Node* node) {
    if (!node) throw Error("use of an undefined tensor");
    return *node;
}
}  // namespace

const Shape& Tensor::shape() const { return checked(node_.get()).shape; }

std::size_t Tensor::size(std::size_t dim) const {
    const auto& s = shape();
    if (dim >= s.size()) {
        throw IndexError("dimension " + std::to_string(dim) + " out of range for shape " + shape_str(s));
    }
    return s[dim];
}

std::size_t Tensor::numel() const { return checked(node_.get()).data.size(); }

const std::vector<double>& Tensor::values() const { return checked(node_.get()).data; }

std::vector<double>& Tensor::mutable_values() { return checked(node_.get()).data; }

double Tensor::item() const {
    if (numel() != 1) throw DimensionError("item() on tensor of shape " + shape_str(shape()));
    return values()[0];
}

double Tensor::at(std::initializer_list<std::size_t> index) const {
    const auto& s = shape();
    if (index.size() != s.size()) {
        throw IndexError("index rank " + std::to_string(index.size()) + " for shape " + shape_str(s));
    }
    std::size_t flat = 0;
    std::size_t d = 0;
    for (auto i : index) {
        if (i >= s[d]) throw IndexError("index out of range for shape " + shape_str(s));
        flat = flat * s[d] + i;
        ++d;
    }
    return values()[flat];
}

bool Tensor::requires_grad() const { return checked(node_.get()).requires_grad; }

Tensor& Tensor::set_requires_grad(bool flag) {
    auto& node = checked(node_.get());
    if (node.vjp) throw Error("requires_grad can only be changed on leaf tensors");
    node.requires_grad = flag;
    return *this;
}

bool Tensor::is_leaf() const { return !checked(node_.get()).vjp; }

const char* Tensor::op_name() const { return checked(node_.get()).op; }

const Tensor& Tensor::grad() const { return checked(node_.get()).grad; }

void Tensor::zero_grad() { checked(node_.get()).grad = Tensor(); }

Tensor Tensor::detach() const { return make_leaf(shape(), values(), false); }

Tensor Tensor::clone() const { return make_leaf(shape(), values(), requires_grad()); }

}  // namespace embedhalluc::ad
