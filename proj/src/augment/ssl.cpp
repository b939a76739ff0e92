#include "embedhalluc/augment/ssl.hpp"

#include <set>
#include <utility>

#include "embedhalluc/errors.hpp"
#include "embedhalluc/random.hpp"

namespace embedhalluc::augment {

void check_pool_disjoint(const std::vector<data::Example>& train, const data::UnlabeledPool& pool) {
    std::set<std::pair<std::string, std::string>> seen;
    for (const auto& ex : train) seen.emplace(ex.text, ex.text2);
    std::size_t overlap = 0;
    std::string first;
    for (const auto& item : pool.items) {
        if (seen.count({item.text, item.text2})) {
            if (overlap++ == 0) first = item.text;
        }
    }
    if (overlap) {
        throw ContaminationError(std::to_string(overlap) + " pool sentence(s) also appear in the training set, e.g. '" +
                                 first + "'");
    }
}

learner::TokenBatch tokenize_pool(const data::UnlabeledPool& pool, data::TaskKind kind, const data::Vocab& vocab) {
    learner::TokenBatch out;
    for (const auto& item : pool.items) out.push_back(data::tokenize_example({item.text, item.text2, 0}, kind, vocab));
    return out;
}

std::vector<int> pseudo_label_pool(const learner::LearnerModel& model, const learner::TokenBatch& pool_tokens) {
    if (pool_tokens.empty()) return {};
    return model.predict(pool_tokens);
}

SslOutcome ssl_pseudo_label_pipeline(const learner::LearnerModel& init, const SslTask& task,
                                     const learner::FinetuneConfig& phase1, const learner::FinetuneConfig& phase2,
                                     std::uint64_t seed, const learner::Validator& validator) {
    if (task.vocab == nullptr) throw ConfigError("SSL task needs a vocabulary");
    check_pool_disjoint(task.train, task.pool);
    const learner::LabeledSet train = learner::make_labeled_set(task.train, task.kind, *task.vocab);

    SslOutcome out;
    out.phase1 = learner::finetune(init, train, nullptr, phase1, derive_seed(seed, "ssl-phase1"), validator);
    const learner::TokenBatch pool_tokens = tokenize_pool(task.pool, task.kind, *task.vocab);
    out.pool_labels = pseudo_label_pool(out.phase1.selected_model, pool_tokens);

    if (pool_tokens.empty()) {
        out.phase2 = learner::finetune(init, train, nullptr, phase2, seed, validator);
        return out;
    }
    learner::LabeledAuxiliary pseudo({pool_tokens, out.pool_labels}, derive_seed(seed, "pseudo-batches"));
    out.phase2 = learner::finetune(init, train, &pseudo, phase2, seed, validator);
    return out;
}

}  // namespace embedhalluc::augment
