#include "embedhalluc/harness/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "embedhalluc/errors.hpp"

namespace embedhalluc::harness {

namespace {

void check_inputs(const std::vector<int>& preds, const std::vector<int>& labels) {
    if (preds.size() != labels.size()) {
        throw DimensionError("metric inputs differ in length: " + std::to_string(preds.size()) + " predictions, " +
                             std::to_string(labels.size()) + " labels");
    }
    if (preds.empty()) throw DataError("metric over an empty dataset");
    for (std::size_t i = 0; i < preds.size(); ++i)
        if (preds[i] < 0 || labels[i] < 0) throw IndexError("negative class index in metric input");
}

}  // namespace

std::vector<std::vector<std::size_t>> confusion_matrix(const std::vector<int>& preds, const std::vector<int>& labels,
                                                       std::size_t classes) {
    check_inputs(preds, labels);
    for (std::size_t i = 0; i < preds.size(); ++i)
        classes = std::max(classes, static_cast<std::size_t>(std::max(preds[i], labels[i])) + 1);
    std::vector<std::vector<std::size_t>> counts(classes, std::vector<std::size_t>(classes, 0));
    for (std::size_t i = 0; i < preds.size(); ++i)
        ++counts[static_cast<std::size_t>(labels[i])][static_cast<std::size_t>(preds[i])];
    return counts;
}

double accuracy(const std::vector<int>& preds, const std::vector<int>& labels) {
    check_inputs(preds, labels);
    std::size_t hits = 0;
    for (std::size_t i = 0; i < preds.size(); ++i) hits += preds[i] == labels[i];
    return static_cast<double>(hits) / static_cast<double>(preds.size());
}

double matthews_corr(const std::vector<int>& preds, const std::vector<int>& labels) {
    const auto counts = confusion_matrix(preds, labels);
    const std::size_t k = counts.size();
    double correct = 0.0;
    double total = 0.0;
    std::vector<double> actual(k, 0.0), predicted(k, 0.0);
    for (std::size_t t = 0; t < k; ++t) {
        for (std::size_t p = 0; p < k; ++p) {
            const auto n = static_cast<double>(counts[t][p]);
            actual[t] += n;
            predicted[p] += n;
            total += n;
        }
        correct += static_cast<double>(counts[t][t]);
    }
    double cross = 0.0, pp = 0.0, tt = 0.0;
    for (std::size_t c = 0; c < k; ++c) {
        cross += predicted[c] * actual[c];
        pp += predicted[c] * predicted[c];
        tt += actual[c] * actual[c];
    }
    const double denom = (total * total - pp) * (total * total - tt);
    if (denom <= 0.0) return 0.0;
    return (correct * total - cross) / std::sqrt(denom);
}

F1Result f1_detail(const std::vector<int>& preds, const std::vector<int>& labels, int positive) {
    check_inputs(preds, labels);
    double tp = 0.0, fp = 0.0, fn = 0.0;
    for (std::size_t i = 0; i < preds.size(); ++i) {
        const bool p = preds[i] == positive;
        const bool a = labels[i] == positive;
        tp += p && a;
        fp += p && !a;
        fn += !p && a;
    }
    F1Result out;
    if (tp + fp == 0.0 && tp + fn == 0.0) {
        out.degenerate = true;
        return out;
    }
    const double precision = tp + fp > 0.0 ? tp / (tp + fp) : 0.0;
    const double recall = tp + fn > 0.0 ? tp / (tp + fn) : 0.0;
    if (precision + recall > 0.0) out.score = 2.0 * precision * recall / (precision + recall);
    return out;
}

double f1_score(const std::vector<int>& preds, const std::vector<int>& labels, int positive) {
    return f1_detail(preds, labels, positive).score;
}

double compute_metric(data::MetricKind kind, const std::vector<int>& preds, const std::vector<int>& labels) {
    switch (kind) {
        case data::MetricKind::accuracy: return accuracy(preds, labels);
        case data::MetricKind::matthews: return matthews_corr(preds, labels);
        case data::MetricKind::f1: return f1_score(preds, labels);
    }
    throw ConfigError("unknown metric kind");
}

}  // namespace embedhalluc::harness
