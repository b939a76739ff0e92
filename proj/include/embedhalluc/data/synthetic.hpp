#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "embedhalluc/data/dataset.hpp"

namespace embedhalluc::data {

// Generating parameters of a bag-of-words classification task.
//
// Content words are named w0, w1, ... and split into one contiguous "home"
// block per class. Unless explicit distributions are given, class c draws a
// token from its home block with probability 1 - overlap and uniformly from
// the whole content vocabulary with probability overlap, so overlap = 0
// gives disjoint supports.
struct SyntheticSpec {
    std::string name = "synthetic";
    std::size_t num_classes = 2;
    // Total vocabulary including the four special tokens.
    std::size_t vocab_size = 44;
    double overlap = 0.0;
    // Optional C x W matrix of per-class token probabilities, W = vocab_size - 4.
    std::vector<std::vector<double>> class_token_distributions;
    std::size_t min_len = 6;
    std::size_t max_len = 12;
    std::size_t size = 1000;
    std::uint64_t seed = 0;
    // Synonyms listed per word (drawn from the same home block).
    std::size_t synonyms_per_word = 3;
    // When nonzero, also emit word vectors of this width: each class gets a
    // N(0, I) center and each word its home center plus N(0, spread^2 I).
    std::size_t embedding_dim = 0;
    double embedding_spread = 1.0;
};

struct SyntheticTask {
    TaskDataset dataset;
    SynonymTable synonyms;
    std::vector<std::string> words;
    // Ground-truth class-conditional unigram distributions over `words`.
    std::vector<std::vector<double>> centroids;
    // Empty unless spec.embedding_dim > 0.
    WordVectors word_vectors;
};

// Labels are balanced (i mod C, then shuffled); lengths are uniform in
// [min_len, max_len]. Deterministic in (spec, seed).
SyntheticTask synthetic_task(const SyntheticSpec& spec);

std::vector<std::vector<double>> synthetic_distributions(const SyntheticSpec& spec);

}  // namespace embedhalluc::data
