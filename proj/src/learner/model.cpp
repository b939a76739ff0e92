#include "embedhalluc/learner/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <optional>

#include "embedhalluc/autodiff/ops.hpp"
#include "embedhalluc/errors.hpp"
#include "embedhalluc/random.hpp"

namespace embedhalluc::learner {

using ad::Tensor;

std::string to_string(EncoderKind kind) { return kind == EncoderKind::attention ? "attention" : "mean-pool"; }

EncoderKind parse_encoder_kind(const std::string& text) {
    if (text == "attention") return EncoderKind::attention;
    if (text == "mean-pool" || text == "mean_pool") return EncoderKind::mean_pool;
    throw ConfigError("unknown encoder kind '" + text + "'");
}

LearnerModel::LearnerModel(const LearnerConfig& config, std::uint64_t seed) : config_(config) {
    if (config.vocab_size == 0 || config.num_classes == 0 || config.embed_dim == 0 || config.max_len == 0) {
        throw ConfigError("learner config needs positive vocab_size, num_classes, embed_dim and max_len");
    }
    Rng rng(seed);
    const std::size_t e = config.embed_dim;
    token_table_ = ad::randn({config.vocab_size, e}, rng, config.embedding_stddev);
    if (config.pad_id >= 0 && static_cast<std::size_t>(config.pad_id) < config.vocab_size) {
        auto& values = token_table_.mutable_values();
        std::fill_n(values.begin() + static_cast<std::ptrdiff_t>(config.pad_id * e), e, 0.0);
    }
    token_table_.set_requires_grad(true);
    cls_ = ad::randn({1, 1, e}, rng, config.embedding_stddev);
    cls_.set_requires_grad(true);
    for (std::size_t i = 0; i < config.num_blocks; ++i) {
        Block b;
        b.norm1 = ad::LayerNorm(e);
        b.query = ad::Linear(e, e, rng);
        b.key = ad::Linear(e, e, rng);
        b.value = ad::Linear(e, e, rng);
        b.output = ad::Linear(e, e, rng);
        b.norm2 = ad::LayerNorm(e);
        b.ffn_in = ad::Linear(e, config.ffn_dim, rng);
        b.ffn_out = ad::Linear(config.ffn_dim, e, rng);
        blocks_.push_back(std::move(b));
    }
    final_norm_ = ad::LayerNorm(e);
    head_ = ad::Linear::normal(e, config.num_classes, config.head_stddev, rng);
}

Tensor LearnerModel::embed_tokens(const TokenBatch& batch, std::size_t length) const {
    const std::size_t e = config_.embed_dim;
    std::vector<std::size_t> ids;
    std::vector<double> keep;
    ids.reserve(batch.size() * length);
    for (const auto& sentence : batch) {
        for (std::size_t t = 0; t < length; ++t) {
            int id = t < sentence.size() ? sentence[t] : config_.pad_id;
            if (id < 0 || static_cast<std::size_t>(id) >= config_.vocab_size) {
                throw IndexError("token id " + std::to_string(id) + " outside vocabulary of size " +
                                 std::to_string(config_.vocab_size));
            }
            ids.push_back(static_cast<std::size_t>(id));
            keep.push_back(id == config_.pad_id ? 0.0 : 1.0);
        }
    }
    const Tensor rows = ad::gather_rows(token_table_, ids);
    const Tensor mask = Tensor::from_values({ids.size(), 1}, std::move(keep));
    return ad::reshape(ad::mul(rows, mask), {batch.size(), length, e});
}

Tensor LearnerModel::block_forward(const Block& b, const Tensor& h) const {
    const Tensor a = b.norm1.forward(h);
    Tensor mixed;
    if (config_.encoder == EncoderKind::attention) {
        const Tensor q = b.query.forward(a);
        const Tensor k = b.key.forward(a);
        const Tensor v = b.value.forward(a);
        const double scale = 1.0 / std::sqrt(static_cast<double>(config_.embed_dim));
        const Tensor weights = ad::softmax(ad::scale(ad::matmul(q, ad::transpose(k)), scale));
        mixed = b.output.forward(ad::matmul(weights, v));
    } else {
        // Every position sees the sequence mean.
        mixed = b.output.forward(ad::mean(b.value.forward(a), 1, true));
    }
    const Tensor h1 = ad::add(h, mixed);
    const Tensor f = b.ffn_out.forward(ad::relu(b.ffn_in.forward(b.norm2.forward(h1))));
    return ad::add(h1, f);
}

Tensor LearnerModel::encode(const Tensor& embeddings) const {
    const std::size_t batch = embeddings.size(0);
    const std::size_t e = config_.embed_dim;
    Tensor h = ad::concat({ad::broadcast_to(cls_, {batch, 1, e}), embeddings}, 1);
    for (const auto& b : blocks_) h = block_forward(b, h);
    h = final_norm_.forward(h);
    const Tensor cls_state = ad::reshape(ad::slice(h, 1, 0, 1), {batch, e});
    return head_.forward(cls_state);
}

Tensor LearnerModel::forward_tokens(const TokenBatch& batch) const {
    std::optional<ad::NoGradGuard> no_grad;
    if (mode_ == ad::Mode::eval) no_grad.emplace();
    return encode(embed_tokens(batch));
}

Tensor LearnerModel::forward_embeddings(const Tensor& embeddings) const {
    if (embeddings.rank() != 3 || embeddings.size(2) != config_.embed_dim) {
        throw DimensionError("forward_embeddings expects [b x T x " + std::to_string(config_.embed_dim) + "], got " +
                             ad::shape_str(embeddings.shape()));
    }
    std::optional<ad::NoGradGuard> no_grad;
    if (mode_ == ad::Mode::eval) no_grad.emplace();
    return encode(embeddings);
}

std::vector<int> LearnerModel::predict(const TokenBatch& batch) const {
    ad::NoGradGuard no_grad;
    std::vector<int> out;
    constexpr std::size_t chunk = 64;
    for (std::size_t start = 0; start < batch.size(); start += chunk) {
        const TokenBatch part(batch.begin() + static_cast<std::ptrdiff_t>(start),
                              batch.begin() + static_cast<std::ptrdiff_t>(std::min(batch.size(), start + chunk)));
        const Tensor logits = forward_tokens(part);
        const std::size_t classes = logits.size(1);
        const auto& v = logits.values();
        for (std::size_t r = 0; r < part.size(); ++r) {
            std::size_t best = 0;
            for (std::size_t c = 1; c < classes; ++c)
                if (v[r * classes + c] > v[r * classes + best]) best = c;
            out.push_back(static_cast<int>(best));
        }
    }
    return out;
}

std::size_t LearnerModel::load_word_vectors(const data::Vocab& vocab, const data::WordVectors& vectors) {
    if (vocab.size() != config_.vocab_size)
        throw DimensionError("vocabulary has " + std::to_string(vocab.size()) + " words but the model expects " +
                             std::to_string(config_.vocab_size));
    const std::size_t e = config_.embed_dim;
    auto& table = token_table_.mutable_values();
    std::size_t written = 0;
    for (const auto& [word, v] : vectors) {
        if (v.size() != e)
            throw DimensionError("word vector width " + std::to_string(v.size()) + " differs from embed_dim " +
                                 std::to_string(e));
        const int id = vocab.id(word);
        if (id == data::Vocab::unk || id == config_.pad_id) continue;
        std::copy(v.begin(), v.end(), table.begin() + static_cast<std::ptrdiff_t>(static_cast<std::size_t>(id) * e));
        ++written;
    }
    return written;
}

std::vector<ad::NamedTensor> LearnerModel::named_tensors() const {
    std::vector<ad::NamedTensor> out{{"token_table", token_table_, true}, {"cls", cls_, true}};
    for (std::size_t i = 0; i < blocks_.size(); ++i) {
        const auto& b = blocks_[i];
        const std::string p = "blocks." + std::to_string(i);
        ad::append_prefixed(out, p + ".norm1", b.norm1.named_tensors());
        ad::append_prefixed(out, p + ".query", b.query.named_tensors());
        ad::append_prefixed(out, p + ".key", b.key.named_tensors());
        ad::append_prefixed(out, p + ".value", b.value.named_tensors());
        ad::append_prefixed(out, p + ".output", b.output.named_tensors());
        ad::append_prefixed(out, p + ".norm2", b.norm2.named_tensors());
        ad::append_prefixed(out, p + ".ffn_in", b.ffn_in.named_tensors());
        ad::append_prefixed(out, p + ".ffn_out", b.ffn_out.named_tensors());
    }
    ad::append_prefixed(out, "final_norm", final_norm_.named_tensors());
    ad::append_prefixed(out, "head", head_.named_tensors());
    return out;
}

std::vector<Tensor> LearnerModel::parameters() const { return ad::trainable_tensors(named_tensors()); }

LearnerModel LearnerModel::clone() const {
    LearnerModel copy;
    copy.config_ = config_;
    copy.mode_ = mode_;
    copy.token_table_ = token_table_.clone();
    copy.cls_ = cls_.clone();
    for (const auto& b : blocks_) {
        copy.blocks_.push_back({b.norm1.deep_copy(), b.query.deep_copy(), b.key.deep_copy(), b.value.deep_copy(),
                                b.output.deep_copy(), b.norm2.deep_copy(), b.ffn_in.deep_copy(),
                                b.ffn_out.deep_copy()});
    }
    copy.final_norm_ = final_norm_.deep_copy();
    copy.head_ = head_.deep_copy();
    return copy;
}

std::uint64_t LearnerModel::checksum() const {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const auto& nt : named_tensors()) {
        for (double v : nt.tensor.values()) {
            std::uint64_t bits = 0;
            std::memcpy(&bits, &v, sizeof bits);
            for (int byte = 0; byte < 8; ++byte) {
                h ^= (bits >> (8 * byte)) & 0xffU;
                h *= 0x100000001b3ULL;
            }
        }
    }
    return h;
}

}  // namespace embedhalluc::learner
