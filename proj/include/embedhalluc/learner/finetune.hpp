#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "embedhalluc/autodiff/tensor.hpp"
#include "embedhalluc/data/dataset.hpp"
#include "embedhalluc/data/sampler.hpp"
#include "embedhalluc/halluc/sample.hpp"
#include "embedhalluc/learner/model.hpp"
#include "embedhalluc/random.hpp"

namespace embedhalluc::learner {

enum class LossCombination { two_step, summed };

std::string to_string(LossCombination mode);
LossCombination parse_loss_combination(const std::string& text);

struct FinetuneConfig {
    std::size_t max_steps = 1000;
    double real_lr = 1e-5;
    double halluc_lr = 1e-5;
    std::size_t real_batch = 8;
    std::size_t halluc_batch = 4;
    std::size_t eval_interval = 100;
    bool label_calibration = false;
    LossCombination loss_combination = LossCombination::two_step;
    // Off: the teacher is the model after max_steps.
    bool select_teacher_by_validation = false;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double adam_eps = 1e-8;

    void validate() const;
};

struct LabeledSet {
    TokenBatch tokens;
    std::vector<int> labels;

    std::size_t size() const { return labels.size(); }
    bool empty() const { return labels.empty(); }
};

// Tokenizes examples (pair tasks joined by SEP).
LabeledSet make_labeled_set(const std::vector<data::Example>& examples, data::TaskKind kind, const data::Vocab& vocab);

// Extra training pairs mixed into each step: either embeddings or token
// sequences, with hard labels or soft targets.
struct AuxiliaryBatch {
    ad::Tensor embeddings;  // [n x L x E], or undefined when tokens are used
    TokenBatch tokens;
    std::vector<int> hard_labels;
    ad::Tensor soft_targets;  // [n x C] probabilities, or undefined
};

class AuxiliarySource {
public:
    virtual ~AuxiliarySource() = default;
    virtual AuxiliaryBatch next(std::size_t count, Rng& rng) = 0;
};

// Cycles labels round-robin over the classes and draws one hallucination per
// label. With a teacher, targets are the teacher's softmax; otherwise the
// condition labels.
class HallucinationAuxiliary : public AuxiliarySource {
public:
    HallucinationAuxiliary(const halluc::HallucinationSource& source, const LearnerModel* teacher);
    AuxiliaryBatch next(std::size_t count, Rng& rng) override;

private:
    const halluc::HallucinationSource& source_;
    LearnerModel teacher_;
    bool calibrate_ = false;
    std::size_t cursor_ = 0;
};

// Samples labeled token sequences with its own shuffled stream.
class LabeledAuxiliary : public AuxiliarySource {
public:
    LabeledAuxiliary(LabeledSet set, std::uint64_t seed);
    AuxiliaryBatch next(std::size_t count, Rng& rng) override;

private:
    LabeledSet set_;
    data::ShuffledStream stream_;
};

struct StepLog {
    std::size_t step = 0;
    double real_loss = 0.0;
    double halluc_loss = 0.0;  // NaN when no auxiliary batch was used
    double val_metric = 0.0;   // NaN except at eval steps
};

using Validator = std::function<double(const LearnerModel&)>;

struct FinetuneResult {
    LearnerModel final_model;
    // Highest validation score among eval steps (earliest on ties); the final
    // model when no validator is given.
    LearnerModel selected_model;
    std::size_t selected_step = 0;
    double selected_score = 0.0;  // NaN without a validator
    std::vector<StepLog> log;
    double seconds_per_step = 0.0;
};

// The shared loop: each step samples real_batch sentences for a
// cross-entropy step at real_lr; with an auxiliary source and
// halluc_batch > 0 it then takes the auxiliary step (two-step) or adds the
// auxiliary loss to the real one (summed). Validation runs after every
// eval_interval-th step.
FinetuneResult finetune(const LearnerModel& init, const LabeledSet& train, AuxiliarySource* auxiliary,
                        const FinetuneConfig& cfg, std::uint64_t seed, const Validator& validator = {});

// Real data only. The returned selected_model is the final model unless
// cfg.select_teacher_by_validation is set.
FinetuneResult finetune_teacher(const LearnerModel& init, const LabeledSet& train, const FinetuneConfig& cfg,
                                std::uint64_t seed, const Validator& validator = {});

// Real data plus hallucinations from `generator`, targets calibrated by the
// teacher when cfg.label_calibration is on. Throws DependencyError when
// hallucinations are requested but the generator is missing or untrained.
FinetuneResult finetune_student(const LearnerModel& init, const LearnerModel& teacher, const LabeledSet& train,
                                const halluc::HallucinationSource* generator, const FinetuneConfig& cfg,
                                std::uint64_t seed, const Validator& validator = {});

// Sets soft_label to the teacher's softmax over the sample's embedding.
halluc::HallucSample pseudo_label(const LearnerModel& teacher, const halluc::HallucSample& sample);

double evaluate(const LearnerModel& model, const LabeledSet& set, data::MetricKind metric);

void write_step_log(const std::filesystem::path& path, const std::vector<StepLog>& log);

void save_learner(const std::filesystem::path& dir, const LearnerModel& model);
LearnerModel load_learner(const std::filesystem::path& dir);

}  // namespace embedhalluc::learner
