#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "embedhalluc/data/dataset.hpp"

namespace embedhalluc::data {

struct SplitSizes {
    std::size_t train_per_class = 16;
    std::size_t validation_per_class = 16;
    std::size_t pool_per_class = 64;
    // When false a class short of pool_per_class spare examples gets a
    // smaller pool instead of a CapacityError.
    bool require_pool = true;
};

struct UnlabeledExample {
    std::string text;
    std::string text2;
};

// Sentences with no labels attached; consumers cannot peek at gold labels.
struct UnlabeledPool {
    std::vector<UnlabeledExample> items;

    std::size_t size() const { return items.size(); }
    bool empty() const { return items.empty(); }
};

struct FewShotSplit {
    std::vector<Example> train;
    std::vector<Example> validation;
    UnlabeledPool pool;
    std::vector<Example> test;
    std::uint64_t seed = 0;
    // Gold labels of pool items, for scoring pseudo-labels only.
    std::vector<int> pool_gold_labels;
};

// Class-balanced train/validation, an unlabeled pool, and the remainder as
// test. Examples with identical text are collapsed first so no sentence can
// land in two partitions. A pure function of (dataset, seed).
FewShotSplit sample_few_shot(const TaskDataset& dataset, std::uint64_t seed, const SplitSizes& sizes = {});

}  // namespace embedhalluc::data
