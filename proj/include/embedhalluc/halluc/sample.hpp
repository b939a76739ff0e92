#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "embedhalluc/autodiff/tensor.hpp"
#include "embedhalluc/random.hpp"

namespace embedhalluc::halluc {

// One generated embedding with the class it was conditioned on and, after
// pseudo-labeling, a soft label over the classes.
struct HallucSample {
    ad::Tensor embedding;  // [L x E]
    int condition_label = 0;
    std::optional<std::vector<double>> soft_label;

    // Throws DistributionError if soft_label is not a probability vector.
    void validate() const;
};

// Anything that can emit class-conditioned [L x E] embeddings.
class HallucinationSource {
public:
    virtual ~HallucinationSource() = default;

    virtual std::size_t num_classes() const = 0;
    virtual std::size_t output_len() const = 0;
    virtual std::size_t embed_dim() const = 0;
    // False for a source that must not be sampled yet (e.g. an untrained
    // generator).
    virtual bool ready() const { return true; }
    // One sample per requested label, stacked to [n x L x E]; no gradient.
    virtual ad::Tensor sample_batch(const std::vector<int>& labels, Rng& rng) const = 0;
};

// n samples of class c. Throws IndexError for c outside [0, C).
std::vector<HallucSample> generate(const HallucinationSource& source, int c, std::size_t n, Rng& rng);

// Emits stored real embeddings of the requested class, chosen uniformly.
class CopyGenerator : public HallucinationSource {
public:
    // Embeddings are [L x E]; every class in [0, num_classes) needs one.
    CopyGenerator(std::vector<ad::Tensor> embeddings, std::vector<int> labels, std::size_t num_classes);

    std::size_t num_classes() const override { return by_class_.size(); }
    std::size_t output_len() const override { return len_; }
    std::size_t embed_dim() const override { return dim_; }
    ad::Tensor sample_batch(const std::vector<int>& labels, Rng& rng) const override;

private:
    std::vector<std::vector<ad::Tensor>> by_class_;
    std::size_t len_ = 0;
    std::size_t dim_ = 0;
};

}  // namespace embedhalluc::halluc
