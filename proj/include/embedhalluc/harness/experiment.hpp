#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "embedhalluc/augment/eda.hpp"
#include "embedhalluc/data/dataset.hpp"
#include "embedhalluc/data/split.hpp"
#include "embedhalluc/data/synthetic.hpp"
#include "embedhalluc/halluc/gan.hpp"
#include "embedhalluc/harness/grid.hpp"
#include "embedhalluc/learner/finetune.hpp"
#include "embedhalluc/learner/model.hpp"

namespace embedhalluc::harness {

enum class Method { finetune, embedhalluc, embedhalluc_labelcalib, eda, ssl };

std::string to_string(Method method);
Method parse_method(const std::string& text);

// Either a synthetic spec or a TSV file with its schema.
struct TaskSource {
    std::optional<data::SyntheticSpec> synthetic;
    std::filesystem::path dataset_path;
    data::DatasetSchema schema;
    std::filesystem::path synonyms_path;
    // Optional word vectors for the learner's token table (file tasks only;
    // synthetic tasks emit their own when embedding_dim > 0).
    std::filesystem::path embeddings_path;
};

struct ExperimentConfig {
    TaskSource task;
    Method method = Method::finetune;
    std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
    data::SplitSizes split;
    // vocab_size and num_classes are filled in from the task.
    learner::LearnerConfig learner;
    // real_lr is also the baseline learning rate.
    learner::FinetuneConfig finetune;
    std::vector<double> lr_grid = default_lr_grid();
    std::vector<std::size_t> batch_grid = default_batch_grid();
    // Empty keeps the baseline at finetune.real_lr; otherwise the baseline
    // selects its real_lr from this list on validation.
    std::vector<double> baseline_lr_grid;
    // Multiplies every learning rate above (real, baseline and grid).
    double lr_scale = 1.0;
    // Output shape and class count follow the learner and the task.
    halluc::GeneratorConfig generator;
    halluc::CriticConfig critic;
    halluc::HallucTrainConfig halluc;
    augment::EdaParams eda;
    // Augmented copies per training sentence; 0 emits one per enabled op.
    std::size_t eda_variants = 0;
    // false selects on accuracy whatever the task metric.
    bool select_by_task_metric = true;
    std::filesystem::path output_dir;
    std::size_t threads = 1;

    void validate() const;
};

// Loaded dataset, vocabulary and synonyms shared by every seed.
struct PreparedTask {
    data::TaskDataset dataset;
    data::Vocab vocab;
    data::SynonymTable synonyms;
    // Copied into every initial learner; empty keeps the random table.
    data::WordVectors word_vectors;
};

PreparedTask prepare_task(const TaskSource& source);

struct SeedReport {
    std::uint64_t seed = 0;
    bool ok = true;
    std::string error;
    double test_score = 0.0;
    double validation_score = 0.0;
    std::size_t selected_step = 0;
    std::optional<GridCell> best_cell;
    std::vector<CellRecord> grid;
    std::map<std::string, double> phase_seconds;
    std::map<std::string, double> diagnostics;
};

struct RunReport {
    std::string task;
    std::string method;
    std::string metric;
    std::string std_convention = "population";
    std::vector<SeedReport> seeds;
    // Over successful seeds only; failed seeds are listed, never dropped.
    double mean = 0.0;
    double std = 0.0;
    std::size_t succeeded = 0;
    std::vector<std::uint64_t> failed_seeds;

    // Recomputes mean, std, succeeded and failed_seeds from seeds.
    void aggregate();
};

// Population mean and standard deviation.
std::pair<double, double> mean_std(const std::vector<double>& values);

// One split seed end to end: split, train per method, select on validation
// every eval_interval steps, score the selection once on test.
SeedReport run_seed(const PreparedTask& task, const ExperimentConfig& cfg, std::uint64_t seed);

// Every configured seed (concurrently when threads > 1). A seed that throws
// is marked failed with its message.
RunReport run_experiment(const ExperimentConfig& cfg);
RunReport run_experiment(const PreparedTask& task, const ExperimentConfig& cfg);

}  // namespace embedhalluc::harness
