#include "embedhalluc/harness/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <limits>
#include <mutex>
#include <thread>
#include <tuple>

#include "embedhalluc/augment/ssl.hpp"
#include "embedhalluc/errors.hpp"
#include "embedhalluc/harness/metrics.hpp"

namespace embedhalluc::harness {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

bool uses_grid(Method m) { return m != Method::finetune; }

// The learner, generator and critic must agree on L, E and C.
ExperimentConfig bind_shapes(const ExperimentConfig& cfg, const PreparedTask& task) {
    ExperimentConfig out = cfg;
    out.learner.vocab_size = task.vocab.size();
    out.learner.num_classes = task.dataset.num_classes;
    out.generator.num_classes = task.dataset.num_classes;
    out.generator.output_len = out.learner.max_len;
    out.generator.embed_dim = out.learner.embed_dim;
    out.critic.num_classes = task.dataset.num_classes;
    out.critic.output_len = out.learner.max_len;
    out.critic.embed_dim = out.learner.embed_dim;
    out.eda.synonyms = task.synonyms;
    return out;
}

}  // namespace

std::string to_string(Method method) {
    switch (method) {
        case Method::finetune: return "finetune";
        case Method::embedhalluc: return "embedhalluc";
        case Method::embedhalluc_labelcalib: return "embedhalluc+labelcalib";
        case Method::eda: return "eda";
        case Method::ssl: return "ssl";
    }
    return "?";
}

Method parse_method(const std::string& text) {
    for (Method m : {Method::finetune, Method::embedhalluc, Method::embedhalluc_labelcalib, Method::eda, Method::ssl})
        if (text == to_string(m)) return m;
    throw ConfigError("unknown method '" + text + "'");
}

void ExperimentConfig::validate() const {
    if (seeds.empty()) throw ConfigError("experiment needs at least one seed");
    if (!task.synthetic && task.dataset_path.empty()) throw ConfigError("task needs a synthetic spec or a dataset path");
    if (!(lr_scale > 0.0)) throw ConfigError("lr_scale must be positive");
    finetune.validate();
    if (uses_grid(method) && (lr_grid.empty() || batch_grid.empty()))
        throw ConfigError("method " + to_string(method) + " needs nonempty lr and batch grids");
    for (double lr : lr_grid)
        if (!(lr > 0.0)) throw ConfigError("grid learning rates must be positive");
    for (double lr : baseline_lr_grid)
        if (!(lr > 0.0)) throw ConfigError("grid learning rates must be positive");
    for (std::size_t b : batch_grid)
        if (b == 0) throw ConfigError("grid batch sizes must be positive");
    if (method == Method::embedhalluc || method == Method::embedhalluc_labelcalib) {
        generator.validate();
        critic.validate();
        halluc.validate();
    }
    if (method == Method::eda) {
        eda.validate();
    }
    if (method == Method::ssl && !split.require_pool && split.pool_per_class == 0)
        throw ConfigError("ssl needs an unlabeled pool");
}

PreparedTask prepare_task(const TaskSource& source) {
    PreparedTask task;
    if (source.synthetic) {
        data::SyntheticTask synthetic = data::synthetic_task(*source.synthetic);
        task.dataset = std::move(synthetic.dataset);
        task.vocab = data::Vocab::from_words(synthetic.words);
        task.synonyms = std::move(synthetic.synonyms);
        task.word_vectors = std::move(synthetic.word_vectors);
    } else {
        task.dataset = data::load_dataset(source.dataset_path, source.schema);
        task.vocab = data::build_vocab(task.dataset);
        if (!source.synonyms_path.empty()) task.synonyms = data::load_synonyms(source.synonyms_path);
        if (!source.embeddings_path.empty()) task.word_vectors = data::load_word_vectors(source.embeddings_path);
    }
    return task;
}

std::pair<double, double> mean_std(const std::vector<double>& values) {
    if (values.empty()) return {std::numeric_limits<double>::quiet_NaN(), std::numeric_limits<double>::quiet_NaN()};
    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= static_cast<double>(values.size());
    double var = 0.0;
    for (double v : values) var += (v - mean) * (v - mean);
    var /= static_cast<double>(values.size());
    return {mean, std::sqrt(var)};
}

void RunReport::aggregate() {
    std::vector<double> scores;
    failed_seeds.clear();
    for (const auto& s : seeds) {
        if (s.ok) {
            scores.push_back(s.test_score);
        } else {
            failed_seeds.push_back(s.seed);
        }
    }
    succeeded = scores.size();
    std::tie(mean, std) = mean_std(scores);
}

SeedReport run_seed(const PreparedTask& task, const ExperimentConfig& raw_cfg, std::uint64_t seed) {
    const ExperimentConfig cfg = bind_shapes(raw_cfg, task);
    SeedReport report;
    report.seed = seed;

    auto start = Clock::now();
    data::SplitSizes sizes = cfg.split;
    if (cfg.method != Method::ssl) sizes.require_pool = false;
    const data::FewShotSplit split = data::sample_few_shot(task.dataset, seed, sizes);
    const data::TaskKind kind = task.dataset.kind;
    const learner::LabeledSet train = learner::make_labeled_set(split.train, kind, task.vocab);
    const learner::LabeledSet val = learner::make_labeled_set(split.validation, kind, task.vocab);
    report.phase_seconds["split"] = seconds_since(start);

    const data::MetricKind select_metric = cfg.select_by_task_metric ? task.dataset.metric : data::MetricKind::accuracy;
    const learner::Validator validator = [&](const learner::LearnerModel& m) {
        return learner::evaluate(m, val, select_metric);
    };
    learner::LearnerModel init(cfg.learner, derive_seed(seed, "init"));
    if (!task.word_vectors.empty()) init.load_word_vectors(task.vocab, task.word_vectors);
    learner::FinetuneConfig base = cfg.finetune;
    base.real_lr *= cfg.lr_scale;
    base.halluc_lr *= cfg.lr_scale;

    learner::LearnerModel selected;
    // Each cell gets halluc_lr and halluc_batch from the grid.
    auto run_grid = [&](const std::function<learner::FinetuneResult(const learner::FinetuneConfig&)>& train_cell) {
        std::vector<learner::LearnerModel> models;
        // Steps with a finite auxiliary loss, summed over cells.
        std::size_t aux_steps = 0;
        const GridResult grid = grid_search(
            [&](const GridCell& cell) {
                learner::FinetuneConfig ft = base;
                ft.halluc_lr = cell.lr * cfg.lr_scale;
                ft.halluc_batch = cell.batch;
                learner::FinetuneResult r = train_cell(ft);
                for (const auto& e : r.log) aux_steps += std::isfinite(e.halluc_loss) ? 1 : 0;
                models.push_back(r.selected_model);
                return CellOutcome{r.selected_score, r.selected_step};
            },
            cfg.lr_grid, cfg.batch_grid);
        report.grid = grid.cells;
        report.best_cell = grid.best_cell().cell;
        report.validation_score = grid.best_cell().outcome.validation_score;
        report.selected_step = grid.best_cell().outcome.selected_step;
        report.diagnostics["aux_loss_steps"] = static_cast<double>(aux_steps);
        selected = models.at(grid.best);
    };

    start = Clock::now();
    switch (cfg.method) {
        case Method::finetune: {
            if (cfg.baseline_lr_grid.empty()) {
                const auto r = learner::finetune(init, train, nullptr, base, derive_seed(seed, "student"), validator);
                selected = r.selected_model;
                report.validation_score = r.selected_score;
                report.selected_step = r.selected_step;
            } else {
                std::vector<learner::LearnerModel> models;
                const GridResult grid = grid_search(
                    [&](const GridCell& cell) {
                        learner::FinetuneConfig ft = base;
                        ft.real_lr = cell.lr * cfg.lr_scale;
                        auto r = learner::finetune(init, train, nullptr, ft, derive_seed(seed, "student"), validator);
                        models.push_back(r.selected_model);
                        return CellOutcome{r.selected_score, r.selected_step};
                    },
                    cfg.baseline_lr_grid, {base.real_batch});
                report.grid = grid.cells;
                report.best_cell = grid.best_cell().cell;
                report.validation_score = grid.best_cell().outcome.validation_score;
                report.selected_step = grid.best_cell().outcome.selected_step;
                selected = models.at(grid.best);
            }
            report.phase_seconds["finetune"] = seconds_since(start);
            break;
        }
        case Method::embedhalluc:
        case Method::embedhalluc_labelcalib: {
            const auto real = halluc::collect_real_embeddings(init, train.tokens, train.labels, cfg.learner.max_len);
            report.diagnostics["empty_sentences"] = static_cast<double>(real.empty_sentences);
            const auto gan = halluc::train_hallucinator(real.items, cfg.generator, cfg.critic, cfg.halluc,
                                                        derive_seed(seed, "halluc"));
            if (!gan.history.empty()) report.diagnostics["final_wasserstein"] = gan.history.back().wasserstein_estimate;
            report.phase_seconds["hallucinator"] = seconds_since(start);

            start = Clock::now();
            const auto teacher = learner::finetune_teacher(init, train, base, derive_seed(seed, "teacher"), validator);
            report.phase_seconds["teacher"] = seconds_since(start);

            start = Clock::now();
            base.label_calibration = cfg.method == Method::embedhalluc_labelcalib;
            run_grid([&](const learner::FinetuneConfig& ft) {
                return learner::finetune_student(init, teacher.selected_model, train, &gan.generator, ft,
                                                 derive_seed(seed, "student"), validator);
            });
            report.phase_seconds["student_grid"] = seconds_since(start);
            break;
        }
        case Method::eda: {
            Rng eda_rng(derive_seed(seed, "eda"));
            std::size_t noops = 0;
            const auto augmented = augment::eda_augment_examples(split.train, cfg.eda, cfg.eda_variants, eda_rng, &noops);
            report.diagnostics["eda_sentences"] = static_cast<double>(augmented.size());
            report.diagnostics["eda_synonym_noops"] = static_cast<double>(noops);
            const learner::LabeledSet aug = learner::make_labeled_set(augmented, kind, task.vocab);
            run_grid([&](const learner::FinetuneConfig& ft) {
                learner::LabeledAuxiliary source(aug, derive_seed(seed, "eda-batches"));
                return learner::finetune(init, train, &source, ft, derive_seed(seed, "student"), validator);
            });
            report.phase_seconds["eda_grid"] = seconds_since(start);
            break;
        }
        case Method::ssl: {
            augment::check_pool_disjoint(split.train, split.pool);
            const auto phase1 = learner::finetune(init, train, nullptr, base, derive_seed(seed, "ssl-phase1"), validator);
            const auto pool_tokens = augment::tokenize_pool(split.pool, kind, task.vocab);
            const auto pool_labels = augment::pseudo_label_pool(phase1.selected_model, pool_tokens);
            report.diagnostics["pool_size"] = static_cast<double>(pool_labels.size());
            if (!pool_labels.empty())
                report.diagnostics["pseudo_label_accuracy"] = accuracy(pool_labels, split.pool_gold_labels);
            report.phase_seconds["ssl_phase1"] = seconds_since(start);
            start = Clock::now();
            run_grid([&](const learner::FinetuneConfig& ft) {
                if (pool_tokens.empty())
                    return learner::finetune(init, train, nullptr, ft, derive_seed(seed, "student"), validator);
                learner::LabeledAuxiliary source({pool_tokens, pool_labels}, derive_seed(seed, "pseudo-batches"));
                return learner::finetune(init, train, &source, ft, derive_seed(seed, "student"), validator);
            });
            report.phase_seconds["ssl_phase2_grid"] = seconds_since(start);
            break;
        }
    }

    // The test split is read once, after selection.
    start = Clock::now();
    const learner::LabeledSet test = learner::make_labeled_set(split.test, kind, task.vocab);
    report.test_score = learner::evaluate(selected, test, task.dataset.metric);
    report.phase_seconds["test"] = seconds_since(start);
    return report;
}

RunReport run_experiment(const ExperimentConfig& cfg) {
    cfg.validate();
    return run_experiment(prepare_task(cfg.task), cfg);
}

RunReport run_experiment(const PreparedTask& task, const ExperimentConfig& cfg) {
    cfg.validate();
    RunReport report;
    report.task = task.dataset.name;
    report.method = to_string(cfg.method);
    report.metric = data::to_string(task.dataset.metric);
    report.seeds.resize(cfg.seeds.size());

    auto run_one = [&](std::size_t i) {
        SeedReport& out = report.seeds[i];
        try {
            out = run_seed(task, cfg, cfg.seeds[i]);
        } catch (const std::exception& e) {
            out = SeedReport{};
            out.seed = cfg.seeds[i];
            out.ok = false;
            out.error = e.what();
            out.test_score = std::numeric_limits<double>::quiet_NaN();
        }
    };
    const std::size_t threads = std::max<std::size_t>(1, std::min(cfg.threads, cfg.seeds.size()));
    if (threads == 1) {
        for (std::size_t i = 0; i < cfg.seeds.size(); ++i) run_one(i);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        for (std::size_t t = 0; t < threads; ++t) {
            pool.emplace_back([&] {
                for (std::size_t i = next++; i < cfg.seeds.size(); i = next++) run_one(i);
            });
        }
        for (auto& th : pool) th.join();
    }
    report.aggregate();
    return report;
}

}  // namespace embedhalluc::harness
