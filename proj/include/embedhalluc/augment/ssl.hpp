#pragma once

#include <cstdint>
#include <vector>

#include "embedhalluc/data/dataset.hpp"
#include "embedhalluc/data/split.hpp"
#include "embedhalluc/learner/finetune.hpp"

namespace embedhalluc::augment {

// Labeled few-shot data and an unlabeled pool in one task.
struct SslTask {
    std::vector<data::Example> train;
    data::UnlabeledPool pool;
    data::TaskKind kind = data::TaskKind::single_sentence;
    const data::Vocab* vocab = nullptr;
};

// Throws ContaminationError if any pool sentence also appears in train.
void check_pool_disjoint(const std::vector<data::Example>& train, const data::UnlabeledPool& pool);

// Argmax hard label for every pool sentence.
std::vector<int> pseudo_label_pool(const learner::LearnerModel& model, const learner::TokenBatch& pool_tokens);

learner::TokenBatch tokenize_pool(const data::UnlabeledPool& pool, data::TaskKind kind, const data::Vocab& vocab);

struct SslOutcome {
    learner::FinetuneResult phase1;
    std::vector<int> pool_labels;
    learner::FinetuneResult phase2;
};

// Phase 1 fine-tunes on train (seed derived from `seed`); its selected model
// labels the pool; phase 2 trains `init` afresh on train plus the labeled
// pool with the two-batch scheme (pool batches of phase2.halluc_batch at
// phase2.halluc_lr) under `seed`. An empty pool makes phase 2 plain
// fine-tuning.
SslOutcome ssl_pseudo_label_pipeline(const learner::LearnerModel& init, const SslTask& task,
                                     const learner::FinetuneConfig& phase1, const learner::FinetuneConfig& phase2,
                                     std::uint64_t seed, const learner::Validator& validator = {});

}  // namespace embedhalluc::augment
