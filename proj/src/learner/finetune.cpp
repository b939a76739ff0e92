#include "embedhalluc/learner/finetune.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "embedhalluc/autodiff/grad.hpp"
#include "embedhalluc/autodiff/ops.hpp"
#include "embedhalluc/autodiff/optim.hpp"
#include "embedhalluc/errors.hpp"
#include "embedhalluc/harness/metrics.hpp"
#include "embedhalluc/io/checkpoint.hpp"

namespace embedhalluc::learner {

using ad::Tensor;
namespace fs = std::filesystem;

namespace {

constexpr double nan = std::numeric_limits<double>::quiet_NaN();

Tensor auxiliary_loss(const LearnerModel& model, const AuxiliaryBatch& batch) {
    const Tensor logits =
        batch.embeddings.defined() ? model.forward_embeddings(batch.embeddings) : model.forward_tokens(batch.tokens);
    if (batch.soft_targets.defined()) return ad::kl_divergence(batch.soft_targets, logits);
    return ad::softmax_cross_entropy(logits, batch.hard_labels);
}

void require_finite(double v, const char* what, std::size_t step) {
    if (!std::isfinite(v)) throw Error(std::string(what) + " is not finite at step " + std::to_string(step));
}

std::string format_double(double v) {
    std::ostringstream out;
    out.precision(17);
    out << v;
    return out.str();
}

}  // namespace

std::string to_string(LossCombination mode) { return mode == LossCombination::two_step ? "two-step" : "summed"; }

LossCombination parse_loss_combination(const std::string& text) {
    if (text == "two-step" || text == "two_step") return LossCombination::two_step;
    if (text == "summed") return LossCombination::summed;
    throw ConfigError("unknown loss combination '" + text + "'");
}

void FinetuneConfig::validate() const {
    if (eval_interval == 0) throw ConfigError("eval_interval must be positive");
    if (max_steps % eval_interval != 0) {
        throw ConfigError("eval_interval " + std::to_string(eval_interval) + " does not divide max_steps " +
                          std::to_string(max_steps));
    }
    if (!(real_lr > 0.0) || !(halluc_lr > 0.0)) throw ConfigError("learning rates must be positive");
    if (real_batch == 0) throw ConfigError("real_batch must be positive");
}

LabeledSet make_labeled_set(const std::vector<data::Example>& examples, data::TaskKind kind, const data::Vocab& vocab) {
    LabeledSet out;
    for (const auto& ex : examples) {
        out.tokens.push_back(data::tokenize_example(ex, kind, vocab));
        out.labels.push_back(ex.label);
    }
    return out;
}

HallucinationAuxiliary::HallucinationAuxiliary(const halluc::HallucinationSource& source, const LearnerModel* teacher)
    : source_(source) {
    if (teacher) {
        teacher_ = *teacher;
        teacher_.set_mode(ad::Mode::eval);
        calibrate_ = true;
    }
}

AuxiliaryBatch HallucinationAuxiliary::next(std::size_t count, Rng& rng) {
    AuxiliaryBatch batch;
    const std::size_t classes = source_.num_classes();
    for (std::size_t i = 0; i < count; ++i) {
        batch.hard_labels.push_back(static_cast<int>(cursor_));
        cursor_ = (cursor_ + 1) % classes;
    }
    batch.embeddings = source_.sample_batch(batch.hard_labels, rng);
    if (calibrate_) {
        ad::NoGradGuard no_grad;
        batch.soft_targets = ad::softmax(teacher_.forward_embeddings(batch.embeddings));
    }
    return batch;
}

LabeledAuxiliary::LabeledAuxiliary(LabeledSet set, std::uint64_t seed)
    : set_(std::move(set)), stream_(set_.size(), seed) {}

AuxiliaryBatch LabeledAuxiliary::next(std::size_t count, Rng& /*rng*/) {
    AuxiliaryBatch batch;
    for (std::size_t i : stream_.next(count)) {
        batch.tokens.push_back(set_.tokens[i]);
        batch.hard_labels.push_back(set_.labels[i]);
    }
    return batch;
}

FinetuneResult finetune(const LearnerModel& init, const LabeledSet& train, AuxiliarySource* auxiliary,
                        const FinetuneConfig& cfg, std::uint64_t seed, const Validator& validator) {
    cfg.validate();
    ad::keep_freed_memory();
    if (train.empty()) throw DataError("fine-tuning needs a nonempty training set");
    if (train.tokens.size() != train.labels.size()) throw DimensionError("one label per training sentence is required");
    const auto classes = static_cast<int>(init.config().num_classes);
    for (int y : train.labels)
        if (y < 0 || y >= classes) throw LabelError("training label " + std::to_string(y) + " outside the model's classes");

    FinetuneResult result;
    LearnerModel model = init.clone();
    model.set_mode(ad::Mode::train);
    const std::vector<Tensor> params = model.parameters();
    const ad::AdamOptions base{cfg.real_lr, cfg.beta1, cfg.beta2, cfg.adam_eps};
    ad::Adam real_opt(params, base);
    ad::AdamOptions aux_options = base;
    aux_options.lr = cfg.halluc_lr;
    ad::Adam aux_opt(params, aux_options);

    data::ShuffledStream stream(train.size(), derive_seed(seed, "real-batches"));
    Rng aux_rng(derive_seed(seed, "auxiliary"));
    const bool use_aux = auxiliary != nullptr && cfg.halluc_batch > 0;

    bool have_best = false;
    double best = 0.0;
    double train_seconds = 0.0;
    for (std::size_t step = 1; step <= cfg.max_steps; ++step) {
        const auto start = std::chrono::steady_clock::now();
        TokenBatch batch;
        std::vector<int> labels;
        for (std::size_t i : stream.next(cfg.real_batch)) {
            batch.push_back(train.tokens[i]);
            labels.push_back(train.labels[i]);
        }
        const Tensor real_loss = ad::softmax_cross_entropy(model.forward_tokens(batch), labels);
        StepLog entry{step, real_loss.item(), nan, nan};
        require_finite(entry.real_loss, "real loss", step);

        if (!use_aux || cfg.loss_combination == LossCombination::two_step) {
            real_opt.zero_grad();
            ad::backward(real_loss);
            real_opt.step();
        }
        if (use_aux) {
            const AuxiliaryBatch aux_batch = auxiliary->next(cfg.halluc_batch, aux_rng);
            const Tensor aux_loss = auxiliary_loss(model, aux_batch);
            entry.halluc_loss = aux_loss.item();
            require_finite(entry.halluc_loss, "auxiliary loss", step);
            if (cfg.loss_combination == LossCombination::two_step) {
                aux_opt.zero_grad();
                ad::backward(aux_loss);
                aux_opt.step();
            } else {
                real_opt.zero_grad();
                ad::backward(ad::add(real_loss, aux_loss));
                real_opt.step();
            }
        }
        train_seconds += std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

        if (validator && step % cfg.eval_interval == 0) {
            model.set_mode(ad::Mode::eval);
            entry.val_metric = validator(model);
            model.set_mode(ad::Mode::train);
            if (!have_best || entry.val_metric > best) {
                have_best = true;
                best = entry.val_metric;
                result.selected_model = model.clone();
                result.selected_step = step;
            }
        }
        result.log.push_back(entry);
    }
    real_opt.zero_grad();

    model.set_mode(ad::Mode::eval);
    result.final_model = model;
    if (have_best) {
        result.selected_score = best;
        result.selected_model.set_mode(ad::Mode::eval);
    } else {
        result.selected_model = model;
        result.selected_step = cfg.max_steps;
        result.selected_score = nan;
    }
    result.seconds_per_step = cfg.max_steps ? train_seconds / static_cast<double>(cfg.max_steps) : 0.0;
    return result;
}

FinetuneResult finetune_teacher(const LearnerModel& init, const LabeledSet& train, const FinetuneConfig& cfg,
                                std::uint64_t seed, const Validator& validator) {
    FinetuneResult result = finetune(init, train, nullptr, cfg, seed, validator);
    if (!cfg.select_teacher_by_validation) {
        result.selected_model = result.final_model;
        result.selected_step = cfg.max_steps;
    }
    return result;
}

FinetuneResult finetune_student(const LearnerModel& init, const LearnerModel& teacher, const LabeledSet& train,
                                const halluc::HallucinationSource* generator, const FinetuneConfig& cfg,
                                std::uint64_t seed, const Validator& validator) {
    if (cfg.halluc_batch == 0) return finetune(init, train, nullptr, cfg, seed, validator);
    if (generator == nullptr || !generator->ready())
        throw DependencyError("student training needs a trained hallucination generator");
    if (generator->embed_dim() != init.config().embed_dim || generator->num_classes() != init.config().num_classes) {
        throw DimensionError("generator emits " + std::to_string(generator->num_classes()) + " classes of width " +
                             std::to_string(generator->embed_dim()) + ", student expects " +
                             std::to_string(init.config().num_classes) + " of width " +
                             std::to_string(init.config().embed_dim));
    }
    HallucinationAuxiliary aux(*generator, cfg.label_calibration ? &teacher : nullptr);
    return finetune(init, train, &aux, cfg, seed, validator);
}

halluc::HallucSample pseudo_label(const LearnerModel& teacher, const halluc::HallucSample& sample) {
    LearnerModel view = teacher;
    view.set_mode(ad::Mode::eval);
    const auto& shape = sample.embedding.shape();
    if (shape.size() != 2) throw DimensionError("hallucinated embedding must be [L x E]");
    const Tensor probs = ad::softmax(view.forward_embeddings(ad::reshape(sample.embedding, {1, shape[0], shape[1]})));
    halluc::HallucSample out = sample;
    out.soft_label = probs.values();
    return out;
}

double evaluate(const LearnerModel& model, const LabeledSet& set, data::MetricKind metric) {
    if (set.empty()) throw DataError("evaluation on an empty dataset");
    return harness::compute_metric(metric, model.predict(set.tokens), set.labels);
}

void write_step_log(const fs::path& path, const std::vector<StepLog>& log) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write step log to " + path.string());
    out.precision(17);
    out << "step,L_real,L_halluc,val_metric\n";
    for (const auto& e : log) {
        out << e.step << "," << e.real_loss << ",";
        if (!std::isnan(e.halluc_loss)) out << e.halluc_loss;
        out << ",";
        if (!std::isnan(e.val_metric)) out << e.val_metric;
        out << "\n";
    }
    if (!out) throw IoError("failed writing step log to " + path.string());
}

void save_learner(const fs::path& dir, const LearnerModel& model) {
    const auto& c = model.config();
    std::map<std::string, std::string> config{
        {"vocab_size", std::to_string(c.vocab_size)},
        {"num_classes", std::to_string(c.num_classes)},
        {"embed_dim", std::to_string(c.embed_dim)},
        {"max_len", std::to_string(c.max_len)},
        {"num_blocks", std::to_string(c.num_blocks)},
        {"ffn_dim", std::to_string(c.ffn_dim)},
        {"encoder", to_string(c.encoder)},
        {"embedding_stddev", format_double(c.embedding_stddev)},
        {"head_stddev", format_double(c.head_stddev)},
        {"pad_id", std::to_string(c.pad_id)},
    };
    io::save_checkpoint(dir, "learner", config, model.named_tensors());
}

LearnerModel load_learner(const fs::path& dir) {
    const io::Checkpoint ckpt = io::load_checkpoint(dir);
    if (ckpt.kind != "learner") throw DataError("checkpoint at " + dir.string() + " is not a learner model");
    LearnerConfig c;
    c.vocab_size = std::stoul(ckpt.require("vocab_size"));
    c.num_classes = std::stoul(ckpt.require("num_classes"));
    c.embed_dim = std::stoul(ckpt.require("embed_dim"));
    c.max_len = std::stoul(ckpt.require("max_len"));
    c.num_blocks = std::stoul(ckpt.require("num_blocks"));
    c.ffn_dim = std::stoul(ckpt.require("ffn_dim"));
    c.encoder = parse_encoder_kind(ckpt.require("encoder"));
    c.embedding_stddev = std::stod(ckpt.require("embedding_stddev"));
    c.head_stddev = std::stod(ckpt.require("head_stddev"));
    c.pad_id = std::stoi(ckpt.require("pad_id"));
    LearnerModel model(c, 0);
    io::restore_tensors(ckpt, model.named_tensors());
    model.set_mode(ad::Mode::eval);
    return model;
}

}  // namespace embedhalluc::learner
