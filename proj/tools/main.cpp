#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "embedhalluc/augment/eda.hpp"
#include "embedhalluc/data/split.hpp"
#include "embedhalluc/data/synthetic.hpp"
#include "embedhalluc/errors.hpp"
#include "embedhalluc/halluc/gan.hpp"
#include "embedhalluc/harness/config.hpp"
#include "embedhalluc/harness/experiment.hpp"
#include "embedhalluc/harness/report.hpp"
#include "embedhalluc/learner/finetune.hpp"

namespace fs = std::filesystem;
using namespace embedhalluc;

namespace {

enum Exit { ok = 0, config_error = 1, data_error = 2, training_error = 3 };

struct Common {
    std::string config;
    std::uint64_t seed = 1;
    bool seed_set = false;
    std::string out_dir = "out";
    std::string method;
    std::size_t threads = 0;
};

harness::ExperimentConfig load(const Common& c) {
    harness::ExperimentConfig cfg = c.config.empty() ? harness::ExperimentConfig{} : harness::load_config(c.config);
    if (!c.method.empty()) cfg.method = harness::parse_method(c.method);
    if (c.seed_set) cfg.seeds = {c.seed};
    if (c.threads > 0) cfg.threads = c.threads;
    if (!c.out_dir.empty()) cfg.output_dir = c.out_dir;
    if (!cfg.task.synthetic && cfg.task.dataset_path.empty()) cfg.task.synthetic = data::SyntheticSpec{};
    return cfg;
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    out << text;
}

// The learner a seed starts from, with the task's word vectors when present.
learner::LearnerModel initial_learner(const harness::PreparedTask& task, learner::LearnerConfig lc, std::uint64_t seed) {
    lc.vocab_size = task.vocab.size();
    lc.num_classes = task.dataset.num_classes;
    learner::LearnerModel model(lc, derive_seed(seed, "init"));
    if (!task.word_vectors.empty()) model.load_word_vectors(task.vocab, task.word_vectors);
    return model;
}

void sync_gan_shapes(harness::ExperimentConfig& cfg, std::size_t classes) {
    cfg.generator.num_classes = cfg.critic.num_classes = classes;
    cfg.generator.output_len = cfg.critic.output_len = cfg.learner.max_len;
    cfg.generator.embed_dim = cfg.critic.embed_dim = cfg.learner.embed_dim;
}

int gen_data(const Common& c) {
    harness::ExperimentConfig cfg = load(c);
    if (!cfg.task.synthetic) throw ConfigError("gen-data needs a synthetic task in the config");
    data::SyntheticSpec spec = *cfg.task.synthetic;
    if (c.seed_set) spec.seed = c.seed;
    const data::SyntheticTask task = data::synthetic_task(spec);
    fs::create_directories(c.out_dir);
    const fs::path dir(c.out_dir);
    data::save_dataset(task.dataset, dir / (spec.name + ".tsv"));
    data::save_synonyms(task.synonyms, dir / "synonyms.tsv");
    if (!task.word_vectors.empty()) data::save_word_vectors(task.word_vectors, dir / "vectors.tsv");
    std::printf("wrote %zu examples, %zu synonym entries%s to %s\n", task.dataset.examples.size(), task.synonyms.size(),
                task.word_vectors.empty() ? "" : " and word vectors", dir.string().c_str());
    return ok;
}

int train_halluc(const Common& c) {
    harness::ExperimentConfig cfg = load(c);
    const harness::PreparedTask task = harness::prepare_task(cfg.task);
    sync_gan_shapes(cfg, task.dataset.num_classes);
    const std::uint64_t seed = cfg.seeds.at(0);
    const auto split = data::sample_few_shot(task.dataset, seed, {cfg.split.train_per_class, cfg.split.validation_per_class, 0, false});
    const auto train = learner::make_labeled_set(split.train, task.dataset.kind, task.vocab);
    const auto init = initial_learner(task, cfg.learner, seed);
    const auto real = halluc::collect_real_embeddings(init, train.tokens, train.labels, cfg.learner.max_len);
    const auto result = halluc::train_hallucinator(real.items, cfg.generator, cfg.critic, cfg.halluc,
                                                   derive_seed(seed, "halluc"), nullptr,
                                                   [](const halluc::EpochRecord& r, const halluc::Generator&) {
                                                       if ((r.epoch + 1) % 25 == 0)
                                                           std::printf("epoch %zu critic %.4f gen %.4f W %.4f\n",
                                                                       r.epoch + 1, r.critic_loss, r.gen_loss,
                                                                       r.wasserstein_estimate);
                                                   });
    const fs::path dir = fs::path(c.out_dir) / ("seed-" + std::to_string(seed));
    fs::create_directories(dir);
    halluc::save_hallucinator(dir / "hallucinator", result.generator, result.critic);
    halluc::write_loss_history(dir / "halluc_loss.csv", result.history);
    std::printf("saved hallucinator to %s\n", (dir / "hallucinator").string().c_str());
    return ok;
}

int finetune_cmd(const Common& c, const std::string& generator_dir) {
    harness::ExperimentConfig cfg = load(c);
    const harness::PreparedTask task = harness::prepare_task(cfg.task);
    const std::uint64_t seed = cfg.seeds.at(0);
    const auto split = data::sample_few_shot(task.dataset, seed, {cfg.split.train_per_class, cfg.split.validation_per_class, 0, false});
    const auto kind = task.dataset.kind;
    const auto train = learner::make_labeled_set(split.train, kind, task.vocab);
    const auto val = learner::make_labeled_set(split.validation, kind, task.vocab);
    const auto test = learner::make_labeled_set(split.test, kind, task.vocab);
    const auto metric = task.dataset.metric;
    const learner::Validator validator = [&](const learner::LearnerModel& m) { return learner::evaluate(m, val, metric); };
    const auto init = initial_learner(task, cfg.learner, seed);
    learner::FinetuneConfig ft = cfg.finetune;
    ft.real_lr *= cfg.lr_scale;
    ft.halluc_lr *= cfg.lr_scale;
    ft.label_calibration = ft.label_calibration || cfg.method == harness::Method::embedhalluc_labelcalib;

    const fs::path dir = fs::path(c.out_dir) / ("seed-" + std::to_string(seed));
    fs::create_directories(dir);
    learner::FinetuneResult result;
    if (generator_dir.empty()) {
        result = learner::finetune(init, train, nullptr, ft, derive_seed(seed, "student"), validator);
    } else {
        const halluc::Generator generator = halluc::load_generator(generator_dir);
        const auto teacher = learner::finetune_teacher(init, train, ft, derive_seed(seed, "teacher"), validator);
        learner::save_learner(dir / "teacher", teacher.selected_model);
        result = learner::finetune_student(init, teacher.selected_model, train, &generator, ft,
                                           derive_seed(seed, "student"), validator);
    }
    learner::save_learner(dir / "learner", result.selected_model);
    learner::write_step_log(dir / "steps.csv", result.log);
    std::printf("selected step %zu validation %.4f test %.4f (%s)\n", result.selected_step, result.selected_score,
                learner::evaluate(result.selected_model, test, metric), data::to_string(metric).c_str());
    return ok;
}

int run_cmd(const Common& c) {
    const harness::ExperimentConfig cfg = load(c);
    const harness::RunReport report = harness::run_experiment(cfg);
    const fs::path dir = cfg.output_dir;
    fs::create_directories(dir);
    const std::string stem = report.task + "-" + report.method;
    write_text(dir / (stem + ".config.json"), harness::config_to_json(cfg));
    harness::emit_report(report, harness::ReportFormat::json, dir / (stem + ".json"));
    harness::emit_report(report, harness::ReportFormat::csv, dir / (stem + ".csv"));
    const std::string table = harness::render_table({report});
    write_text(dir / (stem + ".txt"), table);
    std::cout << table;
    for (const auto& s : report.seeds) {
        if (!s.ok) std::fprintf(stderr, "seed %llu failed: %s\n", static_cast<unsigned long long>(s.seed), s.error.c_str());
    }
    return report.succeeded == 0 ? training_error : ok;
}

struct EdaArgs {
    std::string input;
    std::string output;
    std::string synonyms;
    std::vector<std::string> labels;
    bool pair = false;
    double alpha = 0.1;
    std::size_t variants = 0;
};

int eda_cmd(const Common& c, const EdaArgs& a) {
    data::DatasetSchema schema;
    schema.name = fs::path(a.input).stem().string();
    schema.kind = a.pair ? data::TaskKind::sentence_pair : data::TaskKind::single_sentence;
    schema.labels = a.labels;
    const data::TaskDataset ds = data::load_dataset(a.input, schema);
    augment::EdaParams params;
    params.alpha = a.alpha;
    if (!a.synonyms.empty()) params.synonyms = data::load_synonyms(a.synonyms);
    params.validate();
    Rng rng(derive_seed(c.seed, "eda"));
    std::size_t noops = 0;
    data::TaskDataset out = ds;
    out.examples = augment::eda_augment_examples(ds.examples, params, a.variants, rng, &noops);
    data::save_dataset(out, a.output);
    std::printf("wrote %zu augmented examples to %s (%zu synonym replacements found no candidate)\n",
                out.examples.size(), a.output.c_str(), noops);
    return ok;
}

int report_cmd(const std::vector<std::string>& inputs, const std::string& format, const std::string& output) {
    std::vector<harness::RunReport> reports;
    for (const auto& in : inputs) reports.push_back(harness::load_report(in));
    const harness::ReportFormat f = harness::parse_report_format(format);
    if (f == harness::ReportFormat::table) {
        const std::string table = harness::render_table(reports);
        if (output.empty()) {
            std::cout << table;
        } else {
            write_text(output, table);
        }
        return ok;
    }
    if (reports.size() != 1) throw ConfigError("json and csv output take exactly one input report");
    if (output.empty()) {
        std::cout << (f == harness::ReportFormat::json ? harness::report_to_json(reports[0])
                                                       : harness::report_to_csv(reports[0]));
    } else {
        harness::emit_report(reports[0], f, output);
    }
    return ok;
}

int exit_code(const Error& e) {
    switch (e.category()) {
        case Error::Category::config: return config_error;
        case Error::Category::data: return data_error;
        case Error::Category::training: return training_error;
    }
    return training_error;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Few-shot text classification with hallucinated embeddings"};
    app.require_subcommand(1);
    Common common;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", common.config, "JSON experiment config")->check(CLI::ExistingFile);
        sub->add_option_function<std::uint64_t>(
            "--seed", [&](const std::uint64_t& s) { common.seed = s; common.seed_set = true; }, "split / root seed");
        sub->add_option("--out-dir", common.out_dir, "output directory");
        sub->add_option("--method", common.method, "finetune | embedhalluc | embedhalluc+labelcalib | eda | ssl");
        sub->add_option("--threads", common.threads, "seeds run concurrently");
    };

    auto* gen = app.add_subcommand("gen-data", "write a synthetic task, its synonyms and word vectors");
    add_common(gen);
    auto* th = app.add_subcommand("train-halluc", "train the hallucinator on one split's training embeddings");
    add_common(th);
    auto* ft = app.add_subcommand("finetune", "fine-tune on one split, optionally with a saved hallucinator");
    add_common(ft);
    std::string generator_dir;
    ft->add_option("--generator", generator_dir, "hallucinator checkpoint directory")->check(CLI::ExistingDirectory);
    auto* run = app.add_subcommand("run", "full experiment over every seed with reports");
    add_common(run);
    auto* eda = app.add_subcommand("eda", "augment a TSV file");
    EdaArgs eda_args;
    eda->add_option("--seed", common.seed, "augmentation seed");
    eda->add_option("--input", eda_args.input, "input TSV")->required()->check(CLI::ExistingFile);
    eda->add_option("--output", eda_args.output, "output TSV")->required();
    eda->add_option("--labels", eda_args.labels, "label strings in class order")->required()->delimiter(',');
    eda->add_option("--synonyms", eda_args.synonyms, "synonym TSV")->check(CLI::ExistingFile);
    eda->add_flag("--pair", eda_args.pair, "rows are text1<TAB>text2<TAB>label");
    eda->add_option("--alpha", eda_args.alpha, "fraction of words edited");
    eda->add_option("--variants", eda_args.variants, "copies per example; 0 emits one per operation");
    auto* rep = app.add_subcommand("report", "re-render saved reports");
    std::vector<std::string> inputs;
    std::string format = "table";
    std::string output;
    rep->add_option("inputs", inputs, "JSON or CSV reports")->required()->check(CLI::ExistingFile);
    rep->add_option("--format", format, "json | csv | table");
    rep->add_option("--output", output, "output file (stdout when omitted)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? ok : config_error;
    }

    try {
        if (*gen) return gen_data(common);
        if (*th) return train_halluc(common);
        if (*ft) return finetune_cmd(common, generator_dir);
        if (*run) return run_cmd(common);
        if (*eda) return eda_cmd(common, eda_args);
        if (*rep) return report_cmd(inputs, format, output);
    } catch (const Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return exit_code(e);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return training_error;
    }
    return ok;
}
