#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "embedhalluc/autodiff/nn.hpp"
#include "embedhalluc/autodiff/tensor.hpp"
#include "embedhalluc/halluc/sample.hpp"
#include "embedhalluc/learner/model.hpp"
#include "embedhalluc/random.hpp"

namespace embedhalluc::halluc {

struct GeneratorConfig {
    std::size_t noise_dim = 100;
    std::size_t num_classes = 2;
    std::vector<std::size_t> hidden_dims{16, 32, 64, 128};
    std::size_t output_len = 16;
    std::size_t embed_dim = 32;
    double leaky_slope = 0.2;

    void validate() const;
    std::size_t output_width() const { return output_len * embed_dim; }
    // Widths 128,256,512,1024 producing 128 x 1024 embeddings.
    static GeneratorConfig full_scale(std::size_t num_classes);
};

enum class NormKind { batch_norm, none };

struct CriticConfig {
    std::vector<std::size_t> hidden_dims{64, 64, 64};
    std::size_t output_len = 16;
    std::size_t embed_dim = 32;
    std::size_t num_classes = 2;
    NormKind norm = NormKind::batch_norm;
    // Concatenate the one-hot class to the flattened embedding.
    bool conditioned = true;
    double leaky_slope = 0.2;

    void validate() const;
    std::size_t input_width() const { return output_len * embed_dim + (conditioned ? num_classes : 0); }
    static CriticConfig full_scale(std::size_t num_classes);
};

struct HallucTrainConfig {
    std::size_t epochs = 150;
    std::size_t batch_size = 64;
    double lr = 2e-4;
    double beta1 = 0.5;
    double beta2 = 0.999;
    double gp_weight = 100.0;
    std::size_t critic_steps = 5;

    void validate() const;
};

std::string to_string(NormKind kind);
NormKind parse_norm_kind(const std::string& text);

// Blocks of affine -> batch norm -> leaky ReLU, then an affine map to L*E
// reshaped to [L x E]. Input is noise concatenated with the one-hot class.
class Generator : public HallucinationSource {
public:
    Generator() = default;
    Generator(const GeneratorConfig& config, std::uint64_t seed);

    // [b x L x E] from noise [b x noise_dim].
    ad::Tensor forward(const ad::Tensor& noise, const std::vector<int>& labels, ad::Mode mode) const;

    std::size_t num_classes() const override { return config_.num_classes; }
    std::size_t output_len() const override { return config_.output_len; }
    std::size_t embed_dim() const override { return config_.embed_dim; }
    bool ready() const override { return trained_; }
    // Eval mode (running batch-norm statistics), fresh z ~ N(0, 1) per row.
    ad::Tensor sample_batch(const std::vector<int>& labels, Rng& rng) const override;

    void mark_trained() { trained_ = true; }
    const GeneratorConfig& config() const { return config_; }
    std::vector<ad::NamedTensor> named_tensors() const;
    std::vector<ad::Tensor> parameters() const;

private:
    GeneratorConfig config_;
    std::vector<ad::Linear> linears_;
    // Held by value; copies share tensors, so forward may run on a copy.
    std::vector<ad::BatchNorm> norms_;
    ad::Linear output_;
    bool trained_ = false;
};

// Blocks of affine -> (batch norm) -> leaky ReLU over the flattened
// embedding, then an affine map to one unbounded score.
class Critic {
public:
    Critic() = default;
    Critic(const CriticConfig& config, std::uint64_t seed);

    // [b x 1] scores; x is [b x L*E] or [b x L x E].
    ad::Tensor forward(const ad::Tensor& x, const std::vector<int>& labels, ad::Mode mode) const;

    const CriticConfig& config() const { return config_; }
    std::vector<ad::NamedTensor> named_tensors() const;
    std::vector<ad::Tensor> parameters() const;

private:
    CriticConfig config_;
    std::vector<ad::Linear> linears_;
    std::vector<ad::BatchNorm> norms_;
    ad::Linear output_;
};

using CriticFn = std::function<ad::Tensor(const ad::Tensor&)>;

// lambda * mean_i (||grad_x critic(x_i)|| - 1)^2 at x = e*real + (1-e)*fake,
// e ~ U(0,1) per row. Differentiable with respect to the critic parameters.
ad::Tensor gradient_penalty(const CriticFn& critic, const ad::Tensor& real, const ad::Tensor& fake, double lambda,
                            Rng& rng);

struct RealEmbedding {
    ad::Tensor embedding;  // [L x E]
    int label = 0;
};

struct EpochRecord {
    std::size_t epoch = 0;
    double critic_loss = 0.0;
    double gen_loss = 0.0;
    // Mean critic(real) - mean critic(fake) over the epoch's critic steps.
    double wasserstein_estimate = 0.0;
    // Same estimate on held-out real embeddings vs. fresh samples, with both
    // networks in eval mode; NaN when no held-out set is given.
    double heldout_wasserstein = 0.0;
};

struct HallucTrainResult {
    Generator generator;
    Critic critic;
    std::vector<EpochRecord> history;
};

// An epoch runs max(1, ceil(N / batch_size)) generator steps, each preceded
// by critic_steps critic steps on fresh minibatches of the real data.
using EpochCallback = std::function<void(const EpochRecord&, const Generator&)>;

HallucTrainResult train_hallucinator(const std::vector<RealEmbedding>& real, const GeneratorConfig& gcfg,
                                     const CriticConfig& ccfg, const HallucTrainConfig& tcfg, std::uint64_t seed,
                                     const std::vector<RealEmbedding>* heldout = nullptr,
                                     const EpochCallback& on_epoch = {});

void write_loss_history(const std::filesystem::path& path, const std::vector<EpochRecord>& history);

// Generator and critic in one checkpoint directory.
void save_hallucinator(const std::filesystem::path& dir, const Generator& generator, const Critic& critic);
// Throws DependencyError if the directory holds no checkpoint.
Generator load_generator(const std::filesystem::path& dir);

struct CollectedEmbeddings {
    std::vector<RealEmbedding> items;
    // Sentences with no tokens, emitted as all-zero embeddings.
    std::size_t empty_sentences = 0;
};

// Embedding-layer output only (no encoder blocks), truncated or zero-padded
// to exactly `length` positions.
CollectedEmbeddings collect_real_embeddings(const learner::LearnerModel& model, const learner::TokenBatch& tokens,
                                            const std::vector<int>& labels, std::size_t length);

}  // namespace embedhalluc::halluc
