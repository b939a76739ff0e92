#include "embedhalluc/data/split.hpp"

#include <algorithm>
#include <set>
#include <utility>

#include "embedhalluc/errors.hpp"
#include "embedhalluc/random.hpp"

namespace embedhalluc::data {

FewShotSplit sample_few_shot(const TaskDataset& dataset, std::uint64_t seed, const SplitSizes& sizes) {
    dataset.validate();
    std::vector<std::vector<std::size_t>> by_class(dataset.num_classes);
    std::set<std::pair<std::string, std::string>> seen;
    for (std::size_t i = 0; i < dataset.examples.size(); ++i) {
        const auto& ex = dataset.examples[i];
        if (!seen.emplace(ex.text, ex.text2).second) continue;
        by_class[static_cast<std::size_t>(ex.label)].push_back(i);
    }

    const std::size_t labeled = sizes.train_per_class + sizes.validation_per_class;
    const std::size_t needed = labeled + (sizes.require_pool ? sizes.pool_per_class : 0);
    for (std::size_t c = 0; c < by_class.size(); ++c) {
        if (by_class[c].size() < needed) {
            const std::string name =
                c < dataset.label_names.size() ? dataset.label_names[c] : std::to_string(c);
            throw CapacityError("class '" + name + "' has " + std::to_string(by_class[c].size()) +
                                " distinct examples, needs " + std::to_string(needed));
        }
    }

    FewShotSplit split;
    split.seed = seed;
    std::vector<std::size_t> train, validation, pool, test;
    for (std::size_t c = 0; c < by_class.size(); ++c) {
        auto ids = by_class[c];
        Rng rng(derive_seed(derive_seed(seed, "class"), c));
        std::shuffle(ids.begin(), ids.end(), rng);
        const std::size_t pool_n = std::min(sizes.pool_per_class, ids.size() - labeled);
        auto cursor = ids.begin();
        train.insert(train.end(), cursor, cursor + static_cast<std::ptrdiff_t>(sizes.train_per_class));
        cursor += static_cast<std::ptrdiff_t>(sizes.train_per_class);
        validation.insert(validation.end(), cursor, cursor + static_cast<std::ptrdiff_t>(sizes.validation_per_class));
        cursor += static_cast<std::ptrdiff_t>(sizes.validation_per_class);
        pool.insert(pool.end(), cursor, cursor + static_cast<std::ptrdiff_t>(pool_n));
        cursor += static_cast<std::ptrdiff_t>(pool_n);
        test.insert(test.end(), cursor, ids.end());
    }
    Rng order(derive_seed(seed, "order"));
    for (auto* part : {&train, &validation, &pool}) std::shuffle(part->begin(), part->end(), order);
    std::sort(test.begin(), test.end());

    for (auto i : train) split.train.push_back(dataset.examples[i]);
    for (auto i : validation) split.validation.push_back(dataset.examples[i]);
    for (auto i : test) split.test.push_back(dataset.examples[i]);
    for (auto i : pool) {
        const auto& ex = dataset.examples[i];
        split.pool.items.push_back({ex.text, ex.text2});
        split.pool_gold_labels.push_back(ex.label);
    }
    return split;
}

}  // namespace embedhalluc::data
