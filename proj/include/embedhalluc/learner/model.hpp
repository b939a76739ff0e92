#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "embedhalluc/autodiff/nn.hpp"
#include "embedhalluc/autodiff/tensor.hpp"
#include "embedhalluc/data/dataset.hpp"

namespace embedhalluc::learner {

using TokenBatch = std::vector<std::vector<int>>;

enum class EncoderKind { attention, mean_pool };

std::string to_string(EncoderKind kind);
EncoderKind parse_encoder_kind(const std::string& text);

struct LearnerConfig {
    std::size_t vocab_size = 0;
    std::size_t num_classes = 2;
    std::size_t embed_dim = 32;
    // Token positions L; longer inputs are truncated, shorter ones zero-padded.
    std::size_t max_len = 16;
    std::size_t num_blocks = 2;
    std::size_t ffn_dim = 64;
    EncoderKind encoder = EncoderKind::attention;
    double embedding_stddev = 1.0;
    double head_stddev = 0.02;
    int pad_id = 0;
};

// Token embedding table + CLS vector + encoder blocks + classifier head.
// forward_tokens and forward_embeddings share every parameter above the
// embedding table; the PAD row always embeds to zeros.
class LearnerModel {
public:
    LearnerModel() = default;
    LearnerModel(const LearnerConfig& config, std::uint64_t seed);

    // [b x length x E] token embeddings, truncated / zero-padded to length.
    ad::Tensor embed_tokens(const TokenBatch& batch, std::size_t length) const;
    ad::Tensor embed_tokens(const TokenBatch& batch) const { return embed_tokens(batch, config_.max_len); }

    // Logits [b x C] from token ids (CLS prepended, classified at position 0).
    ad::Tensor forward_tokens(const TokenBatch& batch) const;
    // Logits [b x C] from precomputed [b x T x E] embeddings, bypassing the
    // token table.
    ad::Tensor forward_embeddings(const ad::Tensor& embeddings) const;

    std::vector<int> predict(const TokenBatch& batch) const;

    // Overwrites the token rows of words found in `vectors`; other rows keep
    // their random init. Returns the number of rows written. Throws
    // DimensionError when the vector width differs from embed_dim.
    std::size_t load_word_vectors(const data::Vocab& vocab, const data::WordVectors& vectors);

    ad::Mode mode() const { return mode_; }
    void set_mode(ad::Mode mode) { mode_ = mode; }

    const LearnerConfig& config() const { return config_; }
    std::vector<ad::NamedTensor> named_tensors() const;
    std::vector<ad::Tensor> parameters() const;
    // Independent copy of every parameter.
    LearnerModel clone() const;
    // FNV-1a over the bit patterns of every parameter.
    std::uint64_t checksum() const;

private:
    struct Block {
        ad::LayerNorm norm1;
        ad::Linear query, key, value, output;
        ad::LayerNorm norm2;
        ad::Linear ffn_in, ffn_out;
    };

    ad::Tensor encode(const ad::Tensor& embeddings) const;
    ad::Tensor block_forward(const Block& block, const ad::Tensor& h) const;

    LearnerConfig config_;
    ad::Mode mode_ = ad::Mode::train;
    ad::Tensor token_table_;
    ad::Tensor cls_;
    std::vector<Block> blocks_;
    ad::LayerNorm final_norm_;
    ad::Linear head_;
};

}  // namespace embedhalluc::learner
