#include "embedhalluc/augment/eda.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "embedhalluc/errors.hpp"

namespace embedhalluc::augment {

namespace {

std::size_t pick(std::size_t n, Rng& rng) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng); }

const std::vector<std::string>* synonyms_of(const EdaParams& params, const std::string& word) {
    auto it = params.synonyms.find(word);
    return it == params.synonyms.end() || it->second.empty() ? nullptr : &it->second;
}

}  // namespace

std::string to_string(EdaOp op) {
    switch (op) {
        case EdaOp::synonym_replacement: return "synonym-replacement";
        case EdaOp::random_swap: return "random-swap";
        case EdaOp::random_deletion: return "random-deletion";
        case EdaOp::random_insertion: return "random-insertion";
    }
    return "?";
}

EdaOp parse_eda_op(const std::string& text) {
    for (EdaOp op : {EdaOp::synonym_replacement, EdaOp::random_swap, EdaOp::random_deletion, EdaOp::random_insertion})
        if (text == to_string(op)) return op;
    throw ConfigError("unknown EDA operation '" + text + "'");
}

void EdaParams::validate() const {
    if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("EDA alpha must lie in (0, 1)");
    if (ops.empty()) throw ConfigError("EDA needs at least one enabled operation");
    data::validate_synonyms(synonyms);
}

std::size_t EdaParams::edit_count(std::size_t length) const {
    return std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(alpha * static_cast<double>(length))));
}

EdaResult eda_apply(const std::vector<std::string>& sentence, EdaOp op, const EdaParams& params, Rng& rng) {
    if (sentence.empty()) throw DataError("EDA cannot edit an empty sentence");
    EdaResult out{sentence, op, 0, false};
    auto& t = out.tokens;
    const std::size_t n = params.edit_count(sentence.size());
    switch (op) {
        case EdaOp::synonym_replacement: {
            std::vector<std::size_t> candidates;
            for (std::size_t i = 0; i < t.size(); ++i)
                if (synonyms_of(params, t[i])) candidates.push_back(i);
            if (candidates.empty()) {
                out.noop = true;
                break;
            }
            std::shuffle(candidates.begin(), candidates.end(), rng);
            for (std::size_t k = 0; k < std::min(n, candidates.size()); ++k) {
                const auto& syns = *synonyms_of(params, t[candidates[k]]);
                t[candidates[k]] = syns[pick(syns.size(), rng)];
                ++out.edits;
            }
            break;
        }
        case EdaOp::random_swap: {
            if (t.size() < 2) break;
            for (std::size_t k = 0; k < n; ++k) {
                const std::size_t i = pick(t.size(), rng);
                std::size_t j = pick(t.size() - 1, rng);
                if (j >= i) ++j;
                std::swap(t[i], t[j]);
                ++out.edits;
            }
            break;
        }
        case EdaOp::random_deletion: {
            std::bernoulli_distribution drop(params.alpha);
            std::vector<std::string> kept;
            for (const auto& w : t)
                if (!drop(rng)) kept.push_back(w);
            if (kept.empty()) kept.push_back(t[pick(t.size(), rng)]);
            out.edits = t.size() - kept.size();
            t = std::move(kept);
            break;
        }
        case EdaOp::random_insertion: {
            for (std::size_t k = 0; k < n; ++k) {
                std::vector<std::size_t> with_syns;
                for (std::size_t i = 0; i < t.size(); ++i)
                    if (synonyms_of(params, t[i])) with_syns.push_back(i);
                std::string word;
                if (with_syns.empty()) {
                    // No synonym anywhere: duplicate a word so length still grows by n.
                    word = t[pick(t.size(), rng)];
                } else {
                    const auto& syns = *synonyms_of(params, t[with_syns[pick(with_syns.size(), rng)]]);
                    word = syns[pick(syns.size(), rng)];
                }
                t.insert(t.begin() + static_cast<std::ptrdiff_t>(pick(t.size() + 1, rng)), word);
                ++out.edits;
            }
            break;
        }
    }
    return out;
}

EdaResult eda_augment(const std::vector<std::string>& sentence, const EdaParams& params, Rng& rng) {
    if (params.ops.empty()) throw ConfigError("EDA needs at least one enabled operation");
    const EdaOp op = params.ops[pick(params.ops.size(), rng)];
    return eda_apply(sentence, op, params, rng);
}

std::vector<EdaResult> eda_augment_all(const std::vector<std::string>& sentence, const EdaParams& params, Rng& rng) {
    std::vector<EdaResult> out;
    for (EdaOp op : params.ops) out.push_back(eda_apply(sentence, op, params, rng));
    return out;
}

std::vector<data::Example> eda_augment_examples(const std::vector<data::Example>& examples, const EdaParams& params,
                                                std::size_t variants, Rng& rng, std::size_t* noop_count) {
    params.validate();
    std::vector<data::Example> out;
    std::size_t noops = 0;
    auto emit = [&](const data::Example& ex, EdaOp op) {
        const EdaResult first = eda_apply(data::split_words(ex.text), op, params, rng);
        noops += first.noop;
        data::Example aug{data::join_words(first.tokens), "", ex.label};
        if (!data::split_words(ex.text2).empty()) aug.text2 = data::join_words(eda_apply(data::split_words(ex.text2), op, params, rng).tokens);
        out.push_back(std::move(aug));
    };
    for (const auto& ex : examples) {
        if (data::split_words(ex.text).empty()) continue;
        if (variants == 0) {
            for (EdaOp op : params.ops) emit(ex, op);
        } else {
            for (std::size_t v = 0; v < variants; ++v) emit(ex, params.ops[pick(params.ops.size(), rng)]);
        }
    }
    if (noop_count) *noop_count = noops;
    return out;
}

}  // namespace embedhalluc::augment
