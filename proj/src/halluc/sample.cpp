#include "embedhalluc/halluc/sample.hpp"

#include <cmath>
#include <numeric>
#include <random>

#include "embedhalluc/errors.hpp"

namespace embedhalluc::halluc {

void HallucSample::validate() const {
    if (!soft_label) return;
    const auto& p = *soft_label;
    double total = 0.0;
    for (double v : p) {
        if (!(v >= 0.0)) throw DistributionError("soft label has a negative or NaN entry");
        total += v;
    }
    if (std::abs(total - 1.0) > 1e-6) throw DistributionError("soft label sums to " + std::to_string(total));
}

std::vector<HallucSample> generate(const HallucinationSource& source, int c, std::size_t n, Rng& rng) {
    if (c < 0 || static_cast<std::size_t>(c) >= source.num_classes()) {
        throw IndexError("class " + std::to_string(c) + " outside [0, " + std::to_string(source.num_classes()) + ")");
    }
    std::vector<HallucSample> out;
    if (n == 0) return out;
    const ad::Tensor batch = source.sample_batch(std::vector<int>(n, c), rng);
    const std::size_t len = source.output_len();
    const std::size_t dim = source.embed_dim();
    const auto& v = batch.values();
    for (std::size_t i = 0; i < n; ++i) {
        auto first = v.begin() + static_cast<std::ptrdiff_t>(i * len * dim);
        out.push_back({ad::Tensor::from_values({len, dim}, std::vector<double>(first, first + static_cast<std::ptrdiff_t>(len * dim))),
                       c,
                       std::nullopt});
    }
    return out;
}

CopyGenerator::CopyGenerator(std::vector<ad::Tensor> embeddings, std::vector<int> labels, std::size_t num_classes)
    : by_class_(num_classes) {
    if (embeddings.size() != labels.size()) throw DimensionError("one label per embedding is required");
    for (std::size_t i = 0; i < embeddings.size(); ++i) {
        const auto& e = embeddings[i];
        if (e.rank() != 2) throw DimensionError("copy generator expects [L x E] embeddings");
        if (i == 0) {
            len_ = e.size(0);
            dim_ = e.size(1);
        } else if (e.size(0) != len_ || e.size(1) != dim_) {
            throw DimensionError("copy generator embeddings differ in shape");
        }
        if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= num_classes)
            throw IndexError("label " + std::to_string(labels[i]) + " out of range");
        by_class_[static_cast<std::size_t>(labels[i])].push_back(e.detach());
    }
    for (std::size_t c = 0; c < num_classes; ++c)
        if (by_class_[c].empty()) throw CoverageError("copy generator has no embedding of class " + std::to_string(c));
}

ad::Tensor CopyGenerator::sample_batch(const std::vector<int>& labels, Rng& rng) const {
    std::vector<double> values;
    values.reserve(labels.size() * len_ * dim_);
    for (int c : labels) {
        if (c < 0 || static_cast<std::size_t>(c) >= by_class_.size()) throw IndexError("class out of range");
        const auto& pool = by_class_[static_cast<std::size_t>(c)];
        std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
        const auto& v = pool[pick(rng)].values();
        values.insert(values.end(), v.begin(), v.end());
    }
    return ad::Tensor::from_values({labels.size(), len_, dim_}, std::move(values));
}

}  // namespace embedhalluc::halluc
