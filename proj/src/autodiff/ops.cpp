#include "embedhalluc/autodiff/ops.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>

#include "embedhalluc/errors.hpp"

namespace embedhalluc::ad {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMat>;
using MutMap = Eigen::Map<RowMat>;

Shape broadcast_shape(const Shape& a, const Shape& b, const char* op) {
    const std::size_t rank = std::max(a.size(), b.size());
    Shape out(rank, 1);
    for (std::size_t i = 0; i < rank; ++i) {
        const std::size_t da = i < rank - a.size() ? 1 : a[i - (rank - a.size())];
        const std::size_t db = i < rank - b.size() ? 1 : b[i - (rank - b.size())];
        if (da != db && da != 1 && db != 1) {
            throw DimensionError(std::string(op) + ": shapes " + shape_str(a) + " and " + shape_str(b) +
                                 " are not broadcastable");
        }
        out[i] = std::max(da, db);
    }
    return out;
}

// Strides of `in` laid over the dims of `out` (0 on broadcast dims).
std::vector<std::size_t> aligned_strides(const Shape& in, const Shape& out) {
    const std::size_t rank = out.size();
    std::vector<std::size_t> strides(rank, 0);
    std::size_t stride = 1;
    for (std::size_t k = in.size(); k-- > 0;) {
        const std::size_t od = k + (rank - in.size());
        if (in[k] != 1) strides[od] = stride;
        stride *= in[k];
    }
    return strides;
}

bool broadcastable_to(const Shape& in, const Shape& out) {
    if (in.size() > out.size()) return false;
    for (std::size_t k = 0; k < in.size(); ++k) {
        const std::size_t od = k + (out.size() - in.size());
        if (in[k] != 1 && in[k] != out[od]) return false;
    }
    return true;
}

// Visits every index of `out` in row-major order, passing the matching offset
// into a tensor with the given aligned strides.
template <typename Fn>
void for_each_broadcast(const Shape& out, const std::vector<std::size_t>& strides, Fn&& fn) {
    const std::size_t total = shape_numel(out);
    if (total == 0) return;
    const std::size_t rank = out.size();
    std::vector<std::size_t> idx(rank, 0);
    std::size_t offset = 0;
    for (std::size_t flat = 0; flat < total; ++flat) {
        fn(flat, offset);
        for (std::size_t d = rank; d-- > 0;) {
            ++idx[d];
            offset += strides[d];
            if (idx[d] < out[d]) break;
            offset -= strides[d] * idx[d];
            idx[d] = 0;
        }
    }
}

struct AxisSplit {
    std::size_t outer = 1, extent = 1, inner = 1;
};

AxisSplit split_at(const Shape& shape, std::size_t axis) {
    AxisSplit s;
    for (std::size_t d = 0; d < axis; ++d) s.outer *= shape[d];
    s.extent = shape[axis];
    for (std::size_t d = axis + 1; d < shape.size(); ++d) s.inner *= shape[d];
    return s;
}

void check_axis(const Tensor& x, std::size_t axis, const char* op) {
    if (axis >= x.rank()) {
        throw DimensionError(std::string(op) + ": axis " + std::to_string(axis) + " out of range for shape " +
                             shape_str(x.shape()));
    }
}

template <typename Fn>
std::vector<double> map_values(const Tensor& x, Fn&& fn) {
    const auto& in = x.values();
    std::vector<double> out(in.size());
    for (std::size_t i = 0; i < in.size(); ++i) out[i] = fn(in[i]);
    return out;
}

// Same-shape elementwise kernels; broadcasting is resolved before these run.
Tensor add_same(const Tensor& a, const Tensor& b) {
    const auto& av = a.values();
    const auto& bv = b.values();
    std::vector<double> out(av.size());
    for (std::size_t i = 0; i < av.size(); ++i) out[i] = av[i] + bv[i];
    return make_result(a.shape(), std::move(out), "add", {a, b},
                       [](const Tensor& g) { return std::vector<Tensor>{g, g}; });
}

Tensor sub_same(const Tensor& a, const Tensor& b) {
    const auto& av = a.values();
    const auto& bv = b.values();
    std::vector<double> out(av.size());
    for (std::size_t i = 0; i < av.size(); ++i) out[i] = av[i] - bv[i];
    return make_result(a.shape(), std::move(out), "sub", {a, b},
                       [](const Tensor& g) { return std::vector<Tensor>{g, neg(g)}; });
}

Tensor mul_same(const Tensor& a, const Tensor& b) {
    const auto& av = a.values();
    const auto& bv = b.values();
    std::vector<double> out(av.size());
    for (std::size_t i = 0; i < av.size(); ++i) out[i] = av[i] * bv[i];
    return make_result(a.shape(), std::move(out), "mul", {a, b}, [a, b](const Tensor& g) {
        return std::vector<Tensor>{a.requires_grad() ? mul(g, b) : Tensor(),
                                   b.requires_grad() ? mul(g, a) : Tensor()};
    });
}

Tensor div_same(const Tensor& a, const Tensor& b) {
    const auto& av = a.values();
    const auto& bv = b.values();
    std::vector<double> out(av.size());
    for (std::size_t i = 0; i < av.size(); ++i) out[i] = av[i] / bv[i];
    return make_result(a.shape(), std::move(out), "div", {a, b}, [a, b](const Tensor& g) {
        Tensor ga = a.requires_grad() ? div(g, b) : Tensor();
        Tensor gb = b.requires_grad() ? neg(div(mul(g, a), mul(b, b))) : Tensor();
        return std::vector<Tensor>{ga, gb};
    });
}

template <typename SameFn>
Tensor binary(const Tensor& a, const Tensor& b, const char* op, SameFn&& same) {
    if (a.shape() == b.shape()) return same(a, b);
    const Shape out = broadcast_shape(a.shape(), b.shape(), op);
    return same(broadcast_to(a, out), broadcast_to(b, out));
}

void matmul_kernel(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t n) {
    MutMap(c, static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(n)).noalias() =
        ConstMap(a, static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(k)) *
        ConstMap(b, static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(n));
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) { return binary(a, b, "add", add_same); }
Tensor sub(const Tensor& a, const Tensor& b) { return binary(a, b, "sub", sub_same); }
Tensor mul(const Tensor& a, const Tensor& b) { return binary(a, b, "mul", mul_same); }
Tensor div(const Tensor& a, const Tensor& b) { return binary(a, b, "div", div_same); }

Tensor neg(const Tensor& x) {
    return make_result(x.shape(), map_values(x, [](double v) { return -v; }), "neg", {x},
                       [](const Tensor& g) { return std::vector<Tensor>{neg(g)}; });
}

Tensor scale(const Tensor& x, double factor) {
    return make_result(x.shape(), map_values(x, [factor](double v) { return v * factor; }), "scale", {x},
                       [factor](const Tensor& g) { return std::vector<Tensor>{scale(g, factor)}; });
}

Tensor add_scalar(const Tensor& x, double value) {
    return make_result(x.shape(), map_values(x, [value](double v) { return v + value; }), "add_scalar", {x},
                       [](const Tensor& g) { return std::vector<Tensor>{g}; });
}

Tensor exp(const Tensor& x) {
    return make_result(x.shape(), map_values(x, [](double v) { return std::exp(v); }), "exp", {x},
                       [x](const Tensor& g) { return std::vector<Tensor>{mul(g, exp(x))}; });
}

Tensor log(const Tensor& x) {
    return make_result(x.shape(), map_values(x, [](double v) { return std::log(v); }), "log", {x},
                       [x](const Tensor& g) { return std::vector<Tensor>{div(g, x)}; });
}

Tensor sqrt(const Tensor& x) {
    return make_result(x.shape(), map_values(x, [](double v) { return std::sqrt(v); }), "sqrt", {x},
                       [x](const Tensor& g) { return std::vector<Tensor>{div(g, scale(sqrt(x), 2.0))}; });
}

Tensor square(const Tensor& x) { return mul(x, x); }

Tensor leaky_relu(const Tensor& x, double slope) {
    auto mask = Tensor::from_values(x.shape(), map_values(x, [slope](double v) { return v > 0.0 ? 1.0 : slope; }));
    std::vector<double> out(x.numel());
    const auto& in = x.values();
    const auto& m = mask.values();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = in[i] * m[i];
    return make_result(x.shape(), std::move(out), "leaky_relu", {x},
                       [mask](const Tensor& g) { return std::vector<Tensor>{mul(g, mask)}; });
}

Tensor relu(const Tensor& x) { return leaky_relu(x, 0.0); }

Tensor matmul(const Tensor& a, const Tensor& b) {
    const auto& sa = a.shape();
    const auto& sb = b.shape();
    const bool plain = sa.size() == 2 && sb.size() == 2;
    const bool batched = sa.size() == 3 && sb.size() == 3 && sa[0] == sb[0];
    if ((!plain && !batched) || sa[sa.size() - 1] != sb[sb.size() - 2]) {
        throw DimensionError("matmul: incompatible shapes " + shape_str(sa) + " and " + shape_str(sb));
    }
    const std::size_t batch = plain ? 1 : sa[0];
    const std::size_t m = sa[sa.size() - 2];
    const std::size_t k = sa[sa.size() - 1];
    const std::size_t n = sb[sb.size() - 1];
    std::vector<double> out(batch * m * n);
    for (std::size_t i = 0; i < batch; ++i) {
        matmul_kernel(a.values().data() + i * m * k, b.values().data() + i * k * n, out.data() + i * m * n, m, k,
                      n);
    }
    Shape shape = plain ? Shape{m, n} : Shape{batch, m, n};
    return make_result(std::move(shape), std::move(out), "matmul", {a, b}, [a, b](const Tensor& g) {
        Tensor ga = a.requires_grad() ? matmul(g, transpose(b)) : Tensor();
        Tensor gb = b.requires_grad() ? matmul(transpose(a), g) : Tensor();
        return std::vector<Tensor>{ga, gb};
    });
}

Tensor transpose(const Tensor& x) {
    const auto& s = x.shape();
    if (s.size() < 2) throw DimensionError("transpose needs rank >= 2, got " + shape_str(s));
    const std::size_t rows = s[s.size() - 2];
    const std::size_t cols = s[s.size() - 1];
    const std::size_t batch = x.numel() / std::max<std::size_t>(rows * cols, 1);
    std::vector<double> out(x.numel());
    const auto& in = x.values();
    for (std::size_t bi = 0; bi < batch; ++bi) {
        const double* src = in.data() + bi * rows * cols;
        double* dst = out.data() + bi * rows * cols;
        for (std::size_t r = 0; r < rows; ++r)
            for (std::size_t c = 0; c < cols; ++c) dst[c * rows + r] = src[r * cols + c];
    }
    Shape shape = s;
    std::swap(shape[shape.size() - 2], shape[shape.size() - 1]);
    return make_result(std::move(shape), std::move(out), "transpose", {x},
                       [](const Tensor& g) { return std::vector<Tensor>{transpose(g)}; });
}

Tensor sum(const Tensor& x) {
    double total = 0.0;
    for (double v : x.values()) total += v;
    const Shape in_shape = x.shape();
    return make_result({}, {total}, "sum", {x},
                       [in_shape](const Tensor& g) { return std::vector<Tensor>{broadcast_to(g, in_shape)}; });
}

Tensor sum(const Tensor& x, std::size_t axis, bool keepdim) {
    check_axis(x, axis, "sum");
    const auto split = split_at(x.shape(), axis);
    std::vector<double> out(split.outer * split.inner, 0.0);
    const auto& in = x.values();
    for (std::size_t o = 0; o < split.outer; ++o)
        for (std::size_t a = 0; a < split.extent; ++a) {
            const double* src = in.data() + (o * split.extent + a) * split.inner;
            double* dst = out.data() + o * split.inner;
            for (std::size_t i = 0; i < split.inner; ++i) dst[i] += src[i];
        }
    Shape kept = x.shape();
    kept[axis] = 1;
    Shape shape = kept;
    if (!keepdim) shape.erase(shape.begin() + static_cast<std::ptrdiff_t>(axis));
    const Shape in_shape = x.shape();
    return make_result(std::move(shape), std::move(out), "sum_axis", {x}, [in_shape, kept](const Tensor& g) {
        return std::vector<Tensor>{broadcast_to(reshape(g, kept), in_shape)};
    });
}

Tensor mean(const Tensor& x) { return scale(sum(x), 1.0 / static_cast<double>(std::max<std::size_t>(x.numel(), 1))); }

Tensor mean(const Tensor& x, std::size_t axis, bool keepdim) {
    check_axis(x, axis, "mean");
    return scale(sum(x, axis, keepdim), 1.0 / static_cast<double>(std::max<std::size_t>(x.size(axis), 1)));
}

Tensor broadcast_to(const Tensor& x, const Shape& shape) {
    if (x.shape() == shape) return x;
    if (!broadcastable_to(x.shape(), shape)) {
        throw DimensionError("cannot broadcast " + shape_str(x.shape()) + " to " + shape_str(shape));
    }
    std::vector<double> out(shape_numel(shape));
    const auto& in = x.values();
    for_each_broadcast(shape, aligned_strides(x.shape(), shape),
                       [&](std::size_t flat, std::size_t offset) { out[flat] = in[offset]; });
    const Shape in_shape = x.shape();
    return make_result(shape, std::move(out), "broadcast_to", {x},
                       [in_shape](const Tensor& g) { return std::vector<Tensor>{sum_to(g, in_shape)}; });
}

Tensor sum_to(const Tensor& x, const Shape& shape) {
    if (x.shape() == shape) return x;
    if (!broadcastable_to(shape, x.shape())) {
        throw DimensionError("cannot sum " + shape_str(x.shape()) + " down to " + shape_str(shape));
    }
    std::vector<double> out(shape_numel(shape), 0.0);
    const auto& in = x.values();
    for_each_broadcast(x.shape(), aligned_strides(shape, x.shape()),
                       [&](std::size_t flat, std::size_t offset) { out[offset] += in[flat]; });
    const Shape in_shape = x.shape();
    return make_result(shape, std::move(out), "sum_to", {x},
                       [in_shape](const Tensor& g) { return std::vector<Tensor>{broadcast_to(g, in_shape)}; });
}

Tensor reshape(const Tensor& x, const Shape& shape) {
    if (shape_numel(shape) != x.numel()) {
        throw DimensionError("cannot reshape " + shape_str(x.shape()) + " to " + shape_str(shape));
    }
    if (shape == x.shape()) return x;
    const Shape in_shape = x.shape();
    return make_result(shape, x.values(), "reshape", {x},
                       [in_shape](const Tensor& g) { return std::vector<Tensor>{reshape(g, in_shape)}; });
}

Tensor concat(const std::vector<Tensor>& parts, std::size_t axis) {
    if (parts.empty()) throw DimensionError("concat of zero tensors");
    const Shape& first = parts.front().shape();
    check_axis(parts.front(), axis, "concat");
    Shape shape = first;
    shape[axis] = 0;
    for (const auto& p : parts) {
        const Shape& s = p.shape();
        bool ok = s.size() == first.size();
        for (std::size_t d = 0; ok && d < s.size(); ++d) ok = d == axis || s[d] == first[d];
        if (!ok) {
            throw DimensionError("concat: shape " + shape_str(s) + " does not match " + shape_str(first) +
                                 " off axis " + std::to_string(axis));
        }
        shape[axis] += s[axis];
    }
    const auto split = split_at(shape, axis);
    std::vector<double> out(shape_numel(shape));
    std::size_t offset = 0;
    std::vector<std::size_t> begins;
    for (const auto& p : parts) {
        begins.push_back(offset);
        const std::size_t extent = p.size(axis);
        const auto& in = p.values();
        for (std::size_t o = 0; o < split.outer; ++o) {
            std::copy_n(in.data() + o * extent * split.inner, extent * split.inner,
                        out.data() + (o * split.extent + offset) * split.inner);
        }
        offset += extent;
    }
    std::vector<std::size_t> extents;
    for (const auto& p : parts) extents.push_back(p.size(axis));
    return make_result(std::move(shape), std::move(out), "concat", parts,
                       [axis, begins, extents](const Tensor& g) {
                           std::vector<Tensor> grads;
                           for (std::size_t i = 0; i < begins.size(); ++i)
                               grads.push_back(slice(g, axis, begins[i], begins[i] + extents[i]));
                           return grads;
                       });
}

Tensor slice(const Tensor& x, std::size_t axis, std::size_t begin, std::size_t end) {
    check_axis(x, axis, "slice");
    if (begin > end || end > x.size(axis)) {
        throw IndexError("slice [" + std::to_string(begin) + ", " + std::to_string(end) + ") out of range for axis " +
                         std::to_string(axis) + " of " + shape_str(x.shape()));
    }
    const auto split = split_at(x.shape(), axis);
    const std::size_t extent = end - begin;
    std::vector<double> out(split.outer * extent * split.inner);
    const auto& in = x.values();
    for (std::size_t o = 0; o < split.outer; ++o) {
        std::copy_n(in.data() + (o * split.extent + begin) * split.inner, extent * split.inner,
                    out.data() + o * extent * split.inner);
    }
    Shape shape = x.shape();
    shape[axis] = extent;
    const std::size_t total = x.size(axis);
    return make_result(std::move(shape), std::move(out), "slice", {x}, [axis, begin, total](const Tensor& g) {
        return std::vector<Tensor>{pad_axis(g, axis, begin, total)};
    });
}

Tensor pad_axis(const Tensor& x, std::size_t axis, std::size_t begin, std::size_t total) {
    check_axis(x, axis, "pad_axis");
    const std::size_t extent = x.size(axis);
    if (begin + extent > total) throw DimensionError("pad_axis: block does not fit");
    Shape shape = x.shape();
    shape[axis] = total;
    const auto split = split_at(shape, axis);
    std::vector<double> out(shape_numel(shape), 0.0);
    const auto& in = x.values();
    for (std::size_t o = 0; o < split.outer; ++o) {
        std::copy_n(in.data() + o * extent * split.inner, extent * split.inner,
                    out.data() + (o * total + begin) * split.inner);
    }
    return make_result(std::move(shape), std::move(out), "pad_axis", {x}, [axis, begin, extent](const Tensor& g) {
        return std::vector<Tensor>{slice(g, axis, begin, begin + extent)};
    });
}

Tensor gather_rows(const Tensor& table, const std::vector<std::size_t>& ids) {
    if (table.rank() != 2) throw DimensionError("gather_rows expects a 2-d table, got " + shape_str(table.shape()));
    const std::size_t rows = table.size(0);
    const std::size_t width = table.size(1);
    std::vector<double> out(ids.size() * width);
    const auto& in = table.values();
    for (std::size_t i = 0; i < ids.size(); ++i) {
        if (ids[i] >= rows) {
            throw IndexError("row id " + std::to_string(ids[i]) + " out of range for table with " +
                             std::to_string(rows) + " rows");
        }
        std::copy_n(in.data() + ids[i] * width, width, out.data() + i * width);
    }
    return make_result({ids.size(), width}, std::move(out), "gather_rows", {table}, [ids, rows](const Tensor& g) {
        return std::vector<Tensor>{scatter_add_rows(g, ids, rows)};
    });
}

Tensor scatter_add_rows(const Tensor& src, const std::vector<std::size_t>& ids, std::size_t rows) {
    if (src.rank() != 2 || src.size(0) != ids.size()) {
        throw DimensionError("scatter_add_rows: source " + shape_str(src.shape()) + " vs " +
                             std::to_string(ids.size()) + " ids");
    }
    const std::size_t width = src.size(1);
    std::vector<double> out(rows * width, 0.0);
    const auto& in = src.values();
    for (std::size_t i = 0; i < ids.size(); ++i) {
        if (ids[i] >= rows) throw IndexError("scatter row id out of range");
        for (std::size_t j = 0; j < width; ++j) out[ids[i] * width + j] += in[i * width + j];
    }
    return make_result({rows, width}, std::move(out), "scatter_add_rows", {src},
                       [ids](const Tensor& g) { return std::vector<Tensor>{gather_rows(g, ids)}; });
}

Tensor max_values(const Tensor& x, std::size_t axis, bool keepdim) {
    check_axis(x, axis, "max_values");
    const auto split = split_at(x.shape(), axis);
    std::vector<double> out(split.outer * split.inner, -std::numeric_limits<double>::infinity());
    const auto& in = x.values();
    for (std::size_t o = 0; o < split.outer; ++o)
        for (std::size_t a = 0; a < split.extent; ++a)
            for (std::size_t i = 0; i < split.inner; ++i) {
                double& m = out[o * split.inner + i];
                m = std::max(m, in[(o * split.extent + a) * split.inner + i]);
            }
    Shape shape = x.shape();
    if (keepdim)
        shape[axis] = 1;
    else
        shape.erase(shape.begin() + static_cast<std::ptrdiff_t>(axis));
    return Tensor::from_values(std::move(shape), std::move(out));
}

Tensor log_softmax(const Tensor& logits) {
    if (logits.rank() == 0) throw DimensionError("log_softmax of a scalar");
    const std::size_t last = logits.rank() - 1;
    Tensor shifted = sub(logits, max_values(logits, last));
    return sub(shifted, log(sum(exp(shifted), last, true)));
}

Tensor softmax(const Tensor& logits) { return exp(log_softmax(logits)); }

Tensor one_hot(const std::vector<int>& labels, std::size_t num_classes) {
    std::vector<double> out(labels.size() * num_classes, 0.0);
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= num_classes) {
            throw IndexError("label " + std::to_string(labels[i]) + " out of range [0, " +
                             std::to_string(num_classes) + ")");
        }
        out[i * num_classes + static_cast<std::size_t>(labels[i])] = 1.0;
    }
    return Tensor::from_values({labels.size(), num_classes}, std::move(out));
}

Tensor softmax_cross_entropy(const Tensor& logits, const std::vector<int>& labels) {
    if (logits.rank() != 2 || logits.size(0) != labels.size() || labels.empty()) {
        throw DimensionError("softmax_cross_entropy: logits " + shape_str(logits.shape()) + " with " +
                             std::to_string(labels.size()) + " labels");
    }
    const Tensor targets = one_hot(labels, logits.size(1));
    return scale(sum(mul(targets, log_softmax(logits))), -1.0 / static_cast<double>(labels.size()));
}

Tensor kl_divergence(const Tensor& teacher_probs, const Tensor& student_logits) {
    if (teacher_probs.rank() != 2 || teacher_probs.shape() != student_logits.shape() || teacher_probs.size(0) == 0) {
        throw DimensionError("kl_divergence: teacher " + shape_str(teacher_probs.shape()) + " vs student " +
                             shape_str(student_logits.shape()));
    }
    const std::size_t rows = teacher_probs.size(0);
    const std::size_t classes = teacher_probs.size(1);
    const auto& t = teacher_probs.values();
    std::vector<double> log_t(t.size(), 0.0);
    for (std::size_t r = 0; r < rows; ++r) {
        double total = 0.0;
        for (std::size_t c = 0; c < classes; ++c) {
            const double p = t[r * classes + c];
            if (!(p >= 0.0)) throw DistributionError("teacher row " + std::to_string(r) + " has a negative entry");
            total += p;
            if (p > 0.0) log_t[r * classes + c] = std::log(p);
        }
        if (std::abs(total - 1.0) > 1e-6) {
            throw DistributionError("teacher row " + std::to_string(r) + " sums to " + std::to_string(total));
        }
    }
    const Tensor target = teacher_probs.detach();
    const Tensor log_target = Tensor::from_values(teacher_probs.shape(), std::move(log_t));
    const Tensor raw =
        scale(sum(mul(target, sub(log_target, log_softmax(student_logits)))), 1.0 / static_cast<double>(rows));
    // Rounding can leave a matched pair a few ulps below zero; clamp the value
    // and pass the gradient straight through.
    const double value = std::max(0.0, raw.item());
    return make_result({}, {value}, "kl_divergence", {raw},
                       [](const Tensor& g) { return std::vector<Tensor>{g}; });
}

Tensor elementwise_map(const Tensor& x, const std::function<double(double)>& f,
                       const std::function<double(double)>& df, const char* name) {
    const Tensor slope = Tensor::from_values(x.shape(), map_values(x, df));
    return make_result(
        x.shape(), map_values(x, f), name, {x},
        [slope](const Tensor& g) { return std::vector<Tensor>{mul(g, slope)}; }, false);
}

Tensor randn(const Shape& shape, Rng& rng, double stddev) {
    std::normal_distribution<double> dist(0.0, stddev);
    std::vector<double> out(shape_numel(shape));
    for (auto& v : out) v = dist(rng);
    return Tensor::from_values(shape, std::move(out));
}

Tensor rand_uniform(const Shape& shape, Rng& rng, double low, double high) {
    std::uniform_real_distribution<double> dist(low, high);
    std::vector<double> out(shape_numel(shape));
    for (auto& v : out) v = dist(rng);
    return Tensor::from_values(shape, std::move(out));
}

}  // namespace embedhalluc::ad
