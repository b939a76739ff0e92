#include "embedhalluc/data/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "embedhalluc/errors.hpp"
#include "embedhalluc/random.hpp"

namespace embedhalluc::data {

namespace {

std::size_t content_words(const SyntheticSpec& spec) {
    if (spec.vocab_size <= Vocab::num_specials) {
        throw SpecError("vocab_size " + std::to_string(spec.vocab_size) + " leaves no room beyond the " +
                        std::to_string(Vocab::num_specials) + " special tokens");
    }
    return spec.vocab_size - Vocab::num_specials;
}

// Home block of word w among W words split into C contiguous blocks.
std::size_t home_class(std::size_t w, std::size_t words, std::size_t classes) { return w * classes / words; }

}  // namespace

std::vector<std::vector<double>> synthetic_distributions(const SyntheticSpec& spec) {
    const std::size_t words = content_words(spec);
    if (spec.num_classes < 2) throw SpecError("synthetic task needs at least two classes");
    if (!spec.class_token_distributions.empty()) {
        const auto& given = spec.class_token_distributions;
        if (given.size() != spec.num_classes) throw SpecError("one token distribution per class is required");
        for (const auto& row : given) {
            if (row.size() != words) {
                throw SpecError("token distribution has " + std::to_string(row.size()) + " entries, expected " +
                                std::to_string(words));
            }
            const double total = std::accumulate(row.begin(), row.end(), 0.0);
            if (std::abs(total - 1.0) > 1e-9 || std::any_of(row.begin(), row.end(), [](double p) { return p < 0; })) {
                throw SpecError("token distribution is not a probability vector");
            }
        }
        return given;
    }
    if (words < spec.num_classes) throw SpecError("fewer content words than classes");
    if (spec.overlap < 0.0 || spec.overlap > 1.0) throw SpecError("overlap must lie in [0, 1]");
    std::vector<std::vector<double>> dist(spec.num_classes, std::vector<double>(words, 0.0));
    for (std::size_t c = 0; c < spec.num_classes; ++c) {
        std::size_t block = 0;
        for (std::size_t w = 0; w < words; ++w) block += home_class(w, words, spec.num_classes) == c;
        for (std::size_t w = 0; w < words; ++w) {
            double p = spec.overlap / static_cast<double>(words);
            if (home_class(w, words, spec.num_classes) == c) p += (1.0 - spec.overlap) / static_cast<double>(block);
            dist[c][w] = p;
        }
    }
    return dist;
}

SyntheticTask synthetic_task(const SyntheticSpec& spec) {
    const std::size_t words = content_words(spec);
    if (spec.size == 0) throw DataError("synthetic task of size 0 would be an empty dataset");
    if (spec.min_len == 0 || spec.min_len > spec.max_len) throw SpecError("invalid sentence length range");

    SyntheticTask task;
    task.centroids = synthetic_distributions(spec);
    for (std::size_t w = 0; w < words; ++w) task.words.push_back("w" + std::to_string(w));

    auto& ds = task.dataset;
    ds.name = spec.name;
    ds.kind = TaskKind::single_sentence;
    ds.num_classes = spec.num_classes;
    ds.metric = MetricKind::accuracy;
    for (std::size_t c = 0; c < spec.num_classes; ++c) ds.label_names.push_back(std::to_string(c));

    Rng label_rng(derive_seed(spec.seed, "labels"));
    Rng text_rng(derive_seed(spec.seed, "text"));
    std::vector<int> labels(spec.size);
    for (std::size_t i = 0; i < spec.size; ++i) labels[i] = static_cast<int>(i % spec.num_classes);
    std::shuffle(labels.begin(), labels.end(), label_rng);

    std::vector<std::discrete_distribution<std::size_t>> token_dist;
    for (const auto& row : task.centroids) token_dist.emplace_back(row.begin(), row.end());
    std::uniform_int_distribution<std::size_t> length(spec.min_len, spec.max_len);
    for (int label : labels) {
        const std::size_t n = length(text_rng);
        std::vector<std::string> sentence;
        for (std::size_t t = 0; t < n; ++t)
            sentence.push_back(task.words[token_dist[static_cast<std::size_t>(label)](text_rng)]);
        ds.examples.push_back({join_words(sentence), "", label});
    }

    // Synonyms stay inside the home block so replacements keep class evidence.
    for (std::size_t w = 0; w < words && spec.synonyms_per_word > 0; ++w) {
        std::vector<std::size_t> block;
        for (std::size_t v = 0; v < words; ++v)
            if (home_class(v, words, spec.num_classes) == home_class(w, words, spec.num_classes)) block.push_back(v);
        const auto pos = static_cast<std::size_t>(std::find(block.begin(), block.end(), w) - block.begin());
        std::vector<std::string> syns;
        for (std::size_t k = 1; k < block.size() && syns.size() < spec.synonyms_per_word; ++k)
            syns.push_back(task.words[block[(pos + k) % block.size()]]);
        if (!syns.empty()) task.synonyms[task.words[w]] = std::move(syns);
    }
    if (spec.embedding_dim > 0) {
        if (!(spec.embedding_spread >= 0.0)) throw SpecError("embedding_spread must be nonnegative");
        Rng vec_rng(derive_seed(spec.seed, "word-vectors"));
        std::normal_distribution<double> normal(0.0, 1.0);
        std::vector<std::vector<double>> centers(spec.num_classes, std::vector<double>(spec.embedding_dim));
        for (auto& center : centers)
            for (auto& x : center) x = normal(vec_rng);
        for (std::size_t w = 0; w < words; ++w) {
            std::vector<double> v = centers[home_class(w, words, spec.num_classes)];
            for (auto& x : v) x += spec.embedding_spread * normal(vec_rng);
            task.word_vectors[task.words[w]] = std::move(v);
        }
    }
    ds.validate();
    return task;
}

}  // namespace embedhalluc::data
