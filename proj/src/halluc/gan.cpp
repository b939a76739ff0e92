#include "embedhalluc/halluc/gan.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include "embedhalluc/autodiff/grad.hpp"
#include "embedhalluc/autodiff/ops.hpp"
#include "embedhalluc/autodiff/optim.hpp"
#include "embedhalluc/data/sampler.hpp"
#include "embedhalluc/errors.hpp"
#include "embedhalluc/io/checkpoint.hpp"

namespace embedhalluc::halluc {

using ad::Tensor;
namespace fs = std::filesystem;

namespace {

std::string format_double(double v) {
    std::ostringstream out;
    out.precision(17);
    out << v;
    return out.str();
}

std::vector<int> doubled(const std::vector<int>& labels) {
    std::vector<int> out(labels);
    out.insert(out.end(), labels.begin(), labels.end());
    return out;
}

}  // namespace

void GeneratorConfig::validate() const {
    if (noise_dim == 0) throw ConfigError("generator noise_dim must be positive");
    if (num_classes == 0) throw ConfigError("generator needs at least one class");
    if (hidden_dims.empty()) throw ConfigError("generator hidden_dims must be nonempty");
    if (std::any_of(hidden_dims.begin(), hidden_dims.end(), [](std::size_t d) { return d == 0; }))
        throw ConfigError("generator hidden widths must be positive");
    if (output_len == 0 || embed_dim == 0) throw ConfigError("generator output shape must be positive");
}

GeneratorConfig GeneratorConfig::full_scale(std::size_t num_classes) {
    GeneratorConfig cfg;
    cfg.num_classes = num_classes;
    cfg.hidden_dims = {128, 256, 512, 1024};
    cfg.output_len = 128;
    cfg.embed_dim = 1024;
    return cfg;
}

void CriticConfig::validate() const {
    if (hidden_dims.empty()) throw ConfigError("critic hidden_dims must be nonempty");
    if (std::any_of(hidden_dims.begin(), hidden_dims.end(), [](std::size_t d) { return d == 0; }))
        throw ConfigError("critic hidden widths must be positive");
    if (output_len == 0 || embed_dim == 0) throw ConfigError("critic input shape must be positive");
    if (conditioned && num_classes == 0) throw ConfigError("conditioned critic needs at least one class");
}

CriticConfig CriticConfig::full_scale(std::size_t num_classes) {
    CriticConfig cfg;
    cfg.num_classes = num_classes;
    cfg.hidden_dims = {512, 512, 512};
    cfg.output_len = 128;
    cfg.embed_dim = 1024;
    return cfg;
}

void HallucTrainConfig::validate() const {
    if (batch_size == 0) throw ConfigError("hallucinator batch_size must be positive");
    if (!(lr > 0.0)) throw ConfigError("hallucinator lr must be positive");
    if (beta1 < 0.0 || beta1 >= 1.0 || beta2 < 0.0 || beta2 >= 1.0) throw ConfigError("Adam betas must lie in [0, 1)");
    if (!(gp_weight >= 0.0)) throw ConfigError("gp_weight must be nonnegative");
    if (critic_steps == 0) throw ConfigError("critic_steps must be at least 1");
}

std::string to_string(NormKind kind) { return kind == NormKind::batch_norm ? "batch-norm" : "none"; }

NormKind parse_norm_kind(const std::string& text) {
    if (text == "batch-norm" || text == "batch_norm") return NormKind::batch_norm;
    if (text == "none") return NormKind::none;
    throw ConfigError("unknown norm kind '" + text + "'");
}

Generator::Generator(const GeneratorConfig& config, std::uint64_t seed) : config_(config) {
    config.validate();
    Rng rng(seed);
    std::size_t width = config.noise_dim + config.num_classes;
    for (std::size_t h : config.hidden_dims) {
        linears_.emplace_back(width, h, rng);
        norms_.emplace_back(h);
        width = h;
    }
    output_ = ad::Linear(width, config.output_width(), rng);
}

Tensor Generator::forward(const Tensor& noise, const std::vector<int>& labels, ad::Mode mode) const {
    if (noise.rank() != 2 || noise.size(1) != config_.noise_dim || noise.size(0) != labels.size()) {
        throw DimensionError("generator expects noise [" + std::to_string(labels.size()) + "x" +
                             std::to_string(config_.noise_dim) + "], got " + ad::shape_str(noise.shape()));
    }
    Tensor h = ad::concat({noise, ad::one_hot(labels, config_.num_classes)}, 1);
    for (std::size_t i = 0; i < linears_.size(); ++i) {
        ad::BatchNorm norm = norms_[i];
        h = ad::leaky_relu(norm.forward(linears_[i].forward(h), mode), config_.leaky_slope);
    }
    return ad::reshape(output_.forward(h), {labels.size(), config_.output_len, config_.embed_dim});
}

Tensor Generator::sample_batch(const std::vector<int>& labels, Rng& rng) const {
    if (labels.empty()) return Tensor::zeros({0, config_.output_len, config_.embed_dim});
    ad::NoGradGuard no_grad;
    const Tensor z = ad::randn({labels.size(), config_.noise_dim}, rng);
    return forward(z, labels, ad::Mode::eval);
}

std::vector<ad::NamedTensor> Generator::named_tensors() const {
    std::vector<ad::NamedTensor> out;
    for (std::size_t i = 0; i < linears_.size(); ++i) {
        const std::string p = "blocks." + std::to_string(i);
        ad::append_prefixed(out, p + ".linear", linears_[i].named_tensors());
        ad::append_prefixed(out, p + ".norm", norms_[i].named_tensors());
    }
    ad::append_prefixed(out, "output", output_.named_tensors());
    return out;
}

std::vector<Tensor> Generator::parameters() const { return ad::trainable_tensors(named_tensors()); }

Critic::Critic(const CriticConfig& config, std::uint64_t seed) : config_(config) {
    config.validate();
    Rng rng(seed);
    std::size_t width = config.input_width();
    for (std::size_t h : config.hidden_dims) {
        linears_.emplace_back(width, h, rng);
        if (config.norm == NormKind::batch_norm) norms_.emplace_back(h);
        width = h;
    }
    output_ = ad::Linear(width, 1, rng);
}

Tensor Critic::forward(const Tensor& x, const std::vector<int>& labels, ad::Mode mode) const {
    const std::size_t flat = config_.output_len * config_.embed_dim;
    const std::size_t rows = x.rank() > 0 ? x.size(0) : 0;
    if (x.rank() < 2 || x.numel() != rows * flat || rows != labels.size()) {
        throw DimensionError("critic expects " + std::to_string(labels.size()) + " rows of width " +
                             std::to_string(flat) + ", got " + ad::shape_str(x.shape()));
    }
    Tensor h = x.rank() == 2 ? x : ad::reshape(x, {rows, flat});
    if (config_.conditioned) h = ad::concat({h, ad::one_hot(labels, config_.num_classes)}, 1);
    for (std::size_t i = 0; i < linears_.size(); ++i) {
        h = linears_[i].forward(h);
        if (!norms_.empty()) {
            ad::BatchNorm norm = norms_[i];
            h = norm.forward(h, mode);
        }
        h = ad::leaky_relu(h, config_.leaky_slope);
    }
    return output_.forward(h);
}

std::vector<ad::NamedTensor> Critic::named_tensors() const {
    std::vector<ad::NamedTensor> out;
    for (std::size_t i = 0; i < linears_.size(); ++i) {
        const std::string p = "blocks." + std::to_string(i);
        ad::append_prefixed(out, p + ".linear", linears_[i].named_tensors());
        if (!norms_.empty()) ad::append_prefixed(out, p + ".norm", norms_[i].named_tensors());
    }
    ad::append_prefixed(out, "output", output_.named_tensors());
    return out;
}

std::vector<Tensor> Critic::parameters() const { return ad::trainable_tensors(named_tensors()); }

Tensor gradient_penalty(const CriticFn& critic, const Tensor& real, const Tensor& fake, double lambda, Rng& rng) {
    if (real.shape() != fake.shape()) {
        throw DimensionError("gradient penalty needs equal shapes, got " + ad::shape_str(real.shape()) + " and " +
                             ad::shape_str(fake.shape()));
    }
    if (real.rank() < 1 || real.size(0) == 0) throw DimensionError("gradient penalty needs a nonempty batch");
    const std::size_t rows = real.size(0);
    const std::size_t width = real.numel() / rows;
    const Tensor eps = ad::rand_uniform({rows, 1}, rng);

    std::vector<double> mixed(real.numel());
    const auto& r = real.values();
    const auto& f = fake.values();
    const auto& e = eps.values();
    for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < width; ++j)
            mixed[i * width + j] = e[i] * r[i * width + j] + (1.0 - e[i]) * f[i * width + j];
    const Tensor interp = Tensor::from_values(real.shape(), std::move(mixed), true);

    const Tensor scores = critic(interp);
    const Tensor g = ad::reshape(ad::grad(ad::sum(scores), {interp}, true)[0], {rows, width});
    const Tensor norms = ad::sqrt(ad::add_scalar(ad::sum(ad::square(g), 1, true), 1e-12));
    return ad::scale(ad::mean(ad::square(ad::add_scalar(norms, -1.0))), lambda);
}

HallucTrainResult train_hallucinator(const std::vector<RealEmbedding>& real, const GeneratorConfig& gcfg,
                                     const CriticConfig& ccfg, const HallucTrainConfig& tcfg, std::uint64_t seed,
                                     const std::vector<RealEmbedding>* heldout, const EpochCallback& on_epoch) {
    gcfg.validate();
    ccfg.validate();
    tcfg.validate();
    ad::keep_freed_memory();
    if (ccfg.output_len != gcfg.output_len || ccfg.embed_dim != gcfg.embed_dim ||
        (ccfg.conditioned && ccfg.num_classes != gcfg.num_classes)) {
        throw ConfigError("critic and generator configs disagree on shape or class count");
    }
    const std::size_t len = gcfg.output_len;
    const std::size_t dim = gcfg.embed_dim;
    const std::size_t flat = len * dim;
    const std::size_t classes = gcfg.num_classes;

    std::vector<std::size_t> per_class(classes, 0);
    for (const auto& item : real) {
        if (item.embedding.rank() != 2 || item.embedding.size(0) != len || item.embedding.size(1) != dim) {
            throw DimensionError("real embedding has shape " + ad::shape_str(item.embedding.shape()) + ", expected [" +
                                 std::to_string(len) + "x" + std::to_string(dim) + "]");
        }
        if (item.label < 0 || static_cast<std::size_t>(item.label) >= classes)
            throw IndexError("real embedding label " + std::to_string(item.label) + " out of range");
        ++per_class[static_cast<std::size_t>(item.label)];
    }
    std::string missing;
    for (std::size_t c = 0; c < classes; ++c)
        if (per_class[c] == 0) missing += (missing.empty() ? "" : ", ") + std::to_string(c);
    if (!missing.empty()) throw CoverageError("no real embeddings for classes: " + missing);

    HallucTrainResult result{Generator(gcfg, derive_seed(seed, "generator")),
                             Critic(ccfg, derive_seed(seed, "critic")),
                             {}};
    Generator& gen = result.generator;
    Critic& critic = result.critic;
    gen.mark_trained();
    if (tcfg.epochs == 0) return result;

    std::vector<double> flat_real(real.size() * flat);
    std::vector<int> real_labels(real.size());
    for (std::size_t i = 0; i < real.size(); ++i) {
        std::copy(real[i].embedding.values().begin(), real[i].embedding.values().end(),
                  flat_real.begin() + static_cast<std::ptrdiff_t>(i * flat));
        real_labels[i] = real[i].label;
    }
    auto gather = [&](const std::vector<std::size_t>& idx, std::vector<int>& labels) {
        std::vector<double> values(idx.size() * flat);
        labels.resize(idx.size());
        for (std::size_t k = 0; k < idx.size(); ++k) {
            std::copy_n(flat_real.begin() + static_cast<std::ptrdiff_t>(idx[k] * flat), flat,
                        values.begin() + static_cast<std::ptrdiff_t>(k * flat));
            labels[k] = real_labels[idx[k]];
        }
        return Tensor::from_values({idx.size(), flat}, std::move(values));
    };

    Rng noise_rng(derive_seed(seed, "noise"));
    Rng penalty_rng(derive_seed(seed, "penalty"));
    Rng heldout_rng(derive_seed(seed, "heldout"));
    data::ShuffledStream stream(real.size(), derive_seed(seed, "batches"));

    const ad::AdamOptions adam{tcfg.lr, tcfg.beta1, tcfg.beta2, 1e-8};
    ad::Adam gen_opt(gen.parameters(), adam);
    ad::Adam critic_opt(critic.parameters(), adam);

    const std::size_t b = tcfg.batch_size;
    const std::size_t gen_steps = std::max<std::size_t>(1, (real.size() + b - 1) / b);
    auto fake_rows = [&](const std::vector<int>& labels) {
        const Tensor z = ad::randn({labels.size(), gcfg.noise_dim}, noise_rng);
        return ad::reshape(gen.forward(z, labels, ad::Mode::train), {labels.size(), flat});
    };
    auto check_finite = [](double v, const char* what, std::size_t epoch) {
        if (!std::isfinite(v))
            throw Error(std::string(what) + " became non-finite in epoch " + std::to_string(epoch));
    };

    for (std::size_t epoch = 1; epoch <= tcfg.epochs; ++epoch) {
        double critic_sum = 0.0, gen_sum = 0.0, w_sum = 0.0;
        for (std::size_t g = 0; g < gen_steps; ++g) {
            for (std::size_t k = 0; k < tcfg.critic_steps; ++k) {
                std::vector<int> labels;
                const Tensor r = gather(stream.next(b), labels);
                Tensor f;
                {
                    ad::NoGradGuard no_grad;
                    f = fake_rows(labels);
                }
                // Real and fake share one batch so batch-norm statistics
                // cannot hide a shift between them.
                const Tensor scores = critic.forward(ad::concat({r, f}, 0), doubled(labels), ad::Mode::train);
                const Tensor real_score = ad::mean(ad::slice(scores, 0, 0, b));
                const Tensor fake_score = ad::mean(ad::slice(scores, 0, b, 2 * b));
                const Tensor penalty = gradient_penalty(
                    [&](const Tensor& x) { return critic.forward(x, labels, ad::Mode::train); }, r, f, tcfg.gp_weight,
                    penalty_rng);
                const Tensor loss = ad::add(ad::sub(fake_score, real_score), penalty);
                critic_opt.zero_grad();
                ad::backward(loss);
                critic_opt.step();
                critic_sum += loss.item();
                w_sum += real_score.item() - fake_score.item();
            }
            std::vector<int> labels;
            const Tensor r = gather(stream.next(b), labels);
            const Tensor f = fake_rows(labels);
            const Tensor scores = critic.forward(ad::concat({r, f}, 0), doubled(labels), ad::Mode::train);
            const Tensor loss = ad::neg(ad::mean(ad::slice(scores, 0, b, 2 * b)));
            gen_opt.zero_grad();
            ad::backward(loss);
            gen_opt.step();
            critic_opt.zero_grad();
            gen_sum += loss.item();
        }
        EpochRecord rec;
        rec.epoch = epoch;
        rec.critic_loss = critic_sum / static_cast<double>(gen_steps * tcfg.critic_steps);
        rec.gen_loss = gen_sum / static_cast<double>(gen_steps);
        rec.wasserstein_estimate = w_sum / static_cast<double>(gen_steps * tcfg.critic_steps);
        rec.heldout_wasserstein = std::numeric_limits<double>::quiet_NaN();
        check_finite(rec.critic_loss, "critic loss", epoch);
        check_finite(rec.gen_loss, "generator loss", epoch);
        if (heldout && !heldout->empty()) {
            ad::NoGradGuard no_grad;
            std::vector<double> values;
            std::vector<int> labels;
            for (const auto& item : *heldout) {
                values.insert(values.end(), item.embedding.values().begin(), item.embedding.values().end());
                labels.push_back(item.label);
            }
            const Tensor hr = Tensor::from_values({labels.size(), flat}, std::move(values));
            const Tensor hf = gen.sample_batch(labels, heldout_rng);
            const double sr = ad::mean(critic.forward(hr, labels, ad::Mode::eval)).item();
            const double sf = ad::mean(critic.forward(hf, labels, ad::Mode::eval)).item();
            rec.heldout_wasserstein = sr - sf;
        }
        result.history.push_back(rec);
        if (on_epoch) on_epoch(rec, gen);
    }
    return result;
}

void write_loss_history(const fs::path& path, const std::vector<EpochRecord>& history) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write loss history to " + path.string());
    out.precision(17);
    out << "epoch,critic_loss,gen_loss,wasserstein_estimate\n";
    for (const auto& r : history)
        out << r.epoch << "," << r.critic_loss << "," << r.gen_loss << "," << r.wasserstein_estimate << "\n";
    if (!out) throw IoError("failed writing loss history to " + path.string());
}

void save_hallucinator(const fs::path& dir, const Generator& generator, const Critic& critic) {
    const auto& g = generator.config();
    const auto& c = critic.config();
    std::map<std::string, std::string> config{
        {"generator.noise_dim", std::to_string(g.noise_dim)},
        {"generator.num_classes", std::to_string(g.num_classes)},
        {"generator.hidden_dims", io::join_sizes(g.hidden_dims)},
        {"generator.output_len", std::to_string(g.output_len)},
        {"generator.embed_dim", std::to_string(g.embed_dim)},
        {"generator.leaky_slope", format_double(g.leaky_slope)},
        {"critic.hidden_dims", io::join_sizes(c.hidden_dims)},
        {"critic.norm", to_string(c.norm)},
        {"critic.conditioned", c.conditioned ? "1" : "0"},
        {"critic.leaky_slope", format_double(c.leaky_slope)},
    };
    std::vector<ad::NamedTensor> tensors;
    ad::append_prefixed(tensors, "generator", generator.named_tensors());
    ad::append_prefixed(tensors, "critic", critic.named_tensors());
    io::save_checkpoint(dir, "hallucinator", config, tensors);
}

Generator load_generator(const fs::path& dir) {
    if (!fs::exists(dir / "manifest.txt"))
        throw DependencyError("no trained hallucinator checkpoint at " + dir.string());
    const io::Checkpoint ckpt = io::load_checkpoint(dir);
    if (ckpt.kind != "hallucinator") throw DataError("checkpoint at " + dir.string() + " is not a hallucinator");
    GeneratorConfig cfg;
    cfg.noise_dim = std::stoul(ckpt.require("generator.noise_dim"));
    cfg.num_classes = std::stoul(ckpt.require("generator.num_classes"));
    cfg.hidden_dims = io::parse_sizes(ckpt.require("generator.hidden_dims"));
    cfg.output_len = std::stoul(ckpt.require("generator.output_len"));
    cfg.embed_dim = std::stoul(ckpt.require("generator.embed_dim"));
    cfg.leaky_slope = std::stod(ckpt.require("generator.leaky_slope"));
    Generator gen(cfg, 0);
    std::vector<ad::NamedTensor> targets;
    ad::append_prefixed(targets, "generator", gen.named_tensors());
    io::restore_tensors(ckpt, targets);
    gen.mark_trained();
    return gen;
}

CollectedEmbeddings collect_real_embeddings(const learner::LearnerModel& model, const learner::TokenBatch& tokens,
                                            const std::vector<int>& labels, std::size_t length) {
    if (tokens.size() != labels.size()) throw DimensionError("one label per sentence is required");
    if (length == 0) throw ConfigError("embedding length must be positive");
    CollectedEmbeddings out;
    const std::size_t dim = model.config().embed_dim;
    ad::NoGradGuard no_grad;
    constexpr std::size_t chunk = 256;
    for (std::size_t start = 0; start < tokens.size(); start += chunk) {
        const std::size_t end = std::min(tokens.size(), start + chunk);
        const learner::TokenBatch part(tokens.begin() + static_cast<std::ptrdiff_t>(start),
                                       tokens.begin() + static_cast<std::ptrdiff_t>(end));
        const Tensor embedded = model.embed_tokens(part, length);
        const auto& v = embedded.values();
        for (std::size_t i = 0; i < part.size(); ++i) {
            if (part[i].empty()) ++out.empty_sentences;
            auto first = v.begin() + static_cast<std::ptrdiff_t>(i * length * dim);
            out.items.push_back(
                {Tensor::from_values({length, dim}, std::vector<double>(first, first + static_cast<std::ptrdiff_t>(length * dim))),
                 labels[start + i]});
        }
    }
    return out;
}

}  // namespace embedhalluc::halluc
