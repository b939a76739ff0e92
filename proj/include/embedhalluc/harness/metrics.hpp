#pragma once

#include <cstddef>
#include <vector>

#include "embedhalluc/data/dataset.hpp"

namespace embedhalluc::harness {

// All metrics throw DataError on empty input and DimensionError on unequal
// lengths.

// counts[true][pred]; classes = 1 + the largest label seen unless given.
std::vector<std::vector<std::size_t>> confusion_matrix(const std::vector<int>& preds, const std::vector<int>& labels,
                                                       std::size_t classes = 0);

double accuracy(const std::vector<int>& preds, const std::vector<int>& labels);

// Multiclass Matthews correlation from the confusion matrix; 0 when the
// denominator vanishes (all predictions or all labels in one class).
double matthews_corr(const std::vector<int>& preds, const std::vector<int>& labels);

struct F1Result {
    double score = 0.0;
    // No predicted and no actual positives; score is 0 by convention.
    bool degenerate = false;
};

F1Result f1_detail(const std::vector<int>& preds, const std::vector<int>& labels, int positive = 1);
double f1_score(const std::vector<int>& preds, const std::vector<int>& labels, int positive = 1);

double compute_metric(data::MetricKind kind, const std::vector<int>& preds, const std::vector<int>& labels);

}  // namespace embedhalluc::harness
