#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "embedhalluc/data/dataset.hpp"
#include "embedhalluc/random.hpp"

namespace embedhalluc::augment {

enum class EdaOp { synonym_replacement, random_swap, random_deletion, random_insertion };

std::string to_string(EdaOp op);
EdaOp parse_eda_op(const std::string& text);

struct EdaParams {
    // Fraction of tokens edited per operation, in (0, 1).
    double alpha = 0.1;
    std::vector<EdaOp> ops{EdaOp::synonym_replacement, EdaOp::random_swap, EdaOp::random_deletion,
                           EdaOp::random_insertion};
    data::SynonymTable synonyms;

    void validate() const;
    // max(1, round(alpha * length)).
    std::size_t edit_count(std::size_t length) const;
};

struct EdaResult {
    std::vector<std::string> tokens;
    EdaOp op = EdaOp::random_swap;
    // Replacements, swaps, deletions or insertions actually made.
    std::size_t edits = 0;
    // Synonym replacement found no word with synonyms.
    bool noop = false;
};

// Applies one operation. Throws DataError on an empty sentence.
EdaResult eda_apply(const std::vector<std::string>& sentence, EdaOp op, const EdaParams& params, Rng& rng);

// One enabled operation chosen uniformly.
EdaResult eda_augment(const std::vector<std::string>& sentence, const EdaParams& params, Rng& rng);

// One variant per enabled operation, in params.ops order.
std::vector<EdaResult> eda_augment_all(const std::vector<std::string>& sentence, const EdaParams& params, Rng& rng);

// Augments every example `variants` times (all-ops mode when variants == 0);
// labels are carried over. Pair tasks edit both sides with the same op.
std::vector<data::Example> eda_augment_examples(const std::vector<data::Example>& examples, const EdaParams& params,
                                                std::size_t variants, Rng& rng, std::size_t* noop_count = nullptr);

}  // namespace embedhalluc::augment
