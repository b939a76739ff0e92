#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>

#include "embedhalluc/errors.hpp"
#include "embedhalluc/harness/config.hpp"
#include "embedhalluc/harness/experiment.hpp"
#include "embedhalluc/harness/grid.hpp"
#include "embedhalluc/harness/report.hpp"

using namespace embedhalluc;
using namespace embedhalluc::harness;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const auto dir = fs::temp_directory_path() / "embedhalluc_harness_test";
    fs::create_directories(dir);
    return dir / name;
}

RunReport sample_report() {
    RunReport r;
    r.task = "toy";
    r.method = "finetune";
    r.metric = "accuracy";
    const double scores[] = {0.80, 0.82, 0.84, 0.78, 0.76};
    for (int i = 0; i < 5; ++i) {
        SeedReport s;
        s.seed = static_cast<std::uint64_t>(i + 1);
        s.test_score = scores[i];
        s.validation_score = 0.9 - 0.01 * i;
        s.selected_step = 100 * static_cast<std::size_t>(i + 1);
        s.best_cell = GridCell{1e-5 / (i + 1), 4u + static_cast<std::size_t>(i % 3) * 2};
        s.phase_seconds["finetune"] = 1.5;
        r.seeds.push_back(s);
    }
    r.aggregate();
    return r;
}

// Small enough for a unit test: 40 steps, 2 seeds, one block.
ExperimentConfig tiny_experiment(Method method) {
    ExperimentConfig cfg;
    data::SyntheticSpec spec;
    spec.size = 300;
    spec.overlap = 0.3;
    cfg.task.synthetic = spec;
    cfg.method = method;
    cfg.seeds = {1, 2};
    cfg.split.require_pool = false;
    cfg.learner.embed_dim = 8;
    cfg.learner.num_blocks = 1;
    cfg.learner.ffn_dim = 16;
    cfg.finetune.max_steps = 40;
    cfg.finetune.eval_interval = 20;
    cfg.lr_scale = 100.0;
    cfg.lr_grid = {1e-5};
    cfg.batch_grid = {4};
    cfg.generator.hidden_dims = {8};
    cfg.generator.noise_dim = 4;
    cfg.critic.hidden_dims = {8};
    cfg.critic.norm = halluc::NormKind::none;
    cfg.halluc.epochs = 2;
    return cfg;
}

}  // namespace

TEST(Grid, SingleCell) {
    const auto r = grid_search([](const GridCell&) { return CellOutcome{0.3, 100}; }, {1e-5}, {8});
    ASSERT_EQ(r.cells.size(), 1u);
    EXPECT_EQ(r.best_cell().cell.batch, 8u);
}

TEST(Grid, DefaultGridRunsNineCellsLrOuter) {
    std::vector<GridCell> seen;
    const auto r = grid_search(
        [&](const GridCell& c) {
            seen.push_back(c);
            return CellOutcome{0.5, 100};
        },
        default_lr_grid(), default_batch_grid());
    ASSERT_EQ(r.cells.size(), 9u);
    EXPECT_EQ(seen[0].lr, 1e-5);
    EXPECT_EQ(seen[1].batch, 6u);
    EXPECT_EQ(seen[3].lr, 5e-6);
    EXPECT_EQ(seen[8].lr, 1e-6);
    EXPECT_EQ(seen[8].batch, 8u);
}

TEST(Grid, ArgmaxAndTieRule) {
    std::map<std::pair<double, std::size_t>, double> scores{
        {{1e-5, 4}, 0.7}, {{1e-5, 6}, 0.9}, {{1e-5, 8}, 0.6}, {{5e-6, 4}, 0.8}, {{5e-6, 6}, 0.9},
        {{5e-6, 8}, 0.9}, {{1e-6, 4}, 0.5}, {{1e-6, 6}, 0.2}, {{1e-6, 8}, 0.1}};
    auto mock = [&](const GridCell& c) { return CellOutcome{scores.at({c.lr, c.batch}), 100}; };
    auto r = grid_search(mock, default_lr_grid(), default_batch_grid());
    // Three cells tie at 0.9: the lower lr wins, then the smaller batch.
    EXPECT_EQ(r.best_cell().cell.lr, 5e-6);
    EXPECT_EQ(r.best_cell().cell.batch, 6u);
    scores[{1e-6, 8}] = 0.95;
    r = grid_search(mock, default_lr_grid(), default_batch_grid());
    EXPECT_EQ(r.best_cell().cell.lr, 1e-6);
    EXPECT_EQ(r.best_cell().cell.batch, 8u);
}

TEST(Grid, EmptyGridIsConfigError) {
    EXPECT_THROW(grid_search([](const GridCell&) { return CellOutcome{}; }, {}, {4}), ConfigError);
}

TEST(Aggregate, PopulationMeanAndStd) {
    const auto [mean, std] = mean_std({80, 82, 84, 78, 76});
    EXPECT_NEAR(mean, 80.0, 1e-12);
    EXPECT_NEAR(std, std::sqrt(8.0), 1e-12);
    EXPECT_EQ(format_mean_std(0.80, 0.0283), "80.0 (2.8)");
}

TEST(Aggregate, FailedSeedsAreFlaggedNotAveraged) {
    RunReport r = sample_report();
    r.seeds[2].ok = false;
    r.seeds[2].error = "boom";
    r.aggregate();
    EXPECT_EQ(r.succeeded, 4u);
    EXPECT_EQ(r.failed_seeds, std::vector<std::uint64_t>{3});
    EXPECT_NEAR(r.mean, (0.80 + 0.82 + 0.78 + 0.76) / 4.0, 1e-12);
    EXPECT_NE(render_table({r}).find("[1 failed]"), std::string::npos);
}

TEST(Report, JsonCsvRoundTrip) {
    const RunReport r = sample_report();
    const RunReport from_json = report_from_json(report_to_json(r));
    const RunReport from_csv = report_from_csv(report_to_csv(from_json));
    EXPECT_EQ(from_csv.task, "toy");
    EXPECT_EQ(from_csv.method, "finetune");
    ASSERT_EQ(from_csv.seeds.size(), 5u);
    for (std::size_t i = 0; i < 5; ++i) {
        EXPECT_NEAR(from_csv.seeds[i].test_score, r.seeds[i].test_score, 1e-9);
        EXPECT_NEAR(from_csv.seeds[i].validation_score, r.seeds[i].validation_score, 1e-9);
        EXPECT_EQ(from_csv.seeds[i].selected_step, r.seeds[i].selected_step);
        ASSERT_TRUE(from_csv.seeds[i].best_cell.has_value());
        EXPECT_NEAR(from_csv.seeds[i].best_cell->lr, r.seeds[i].best_cell->lr, 1e-18);
    }
    EXPECT_NEAR(from_csv.mean, r.mean, 1e-9);
    EXPECT_NEAR(from_csv.std, r.std, 1e-9);
    EXPECT_EQ(from_json.seeds[0].phase_seconds.at("finetune"), 1.5);
}

TEST(Report, CsvHasAggregateRow) {
    const std::string csv = report_to_csv(sample_report());
    EXPECT_NE(csv.find("\naggregate,5/5,"), std::string::npos);
}

TEST(Report, TableUsesMeanStdConvention) {
    const RunReport r = sample_report();
    const std::string table = render_table({r});
    EXPECT_NE(table.find(format_mean_std(r.mean, r.std)), std::string::npos);
    EXPECT_NE(table.find("80.0 (2.8)"), std::string::npos);
}

TEST(Report, EmptySeedListIsAnError) {
    RunReport r;
    r.task = "t";
    EXPECT_THROW(report_to_json(r), DataError);
    EXPECT_THROW(emit_report(r, ReportFormat::csv, scratch("empty.csv")), DataError);
}

TEST(Report, UnwritablePathIsIoError) {
    const auto blocker = scratch("blocker");
    std::ofstream(blocker) << "x";
    EXPECT_THROW(emit_report(sample_report(), ReportFormat::json, blocker / "r.json"), IoError);
}

TEST(Report, FilesReloadByExtension) {
    const RunReport r = sample_report();
    emit_report(r, ReportFormat::json, scratch("r.json"));
    emit_report(r, ReportFormat::csv, scratch("r.csv"));
    EXPECT_NEAR(load_report(scratch("r.json")).mean, r.mean, 1e-12);
    EXPECT_NEAR(load_report(scratch("r.csv")).mean, r.mean, 1e-9);
}

TEST(Config, DefaultsAndOverrides) {
    const auto cfg = parse_config(R"({"method": "embedhalluc+labelcalib", "seeds": [7],
        "finetune": {"max_steps": 200}, "critic": {"norm": "none"}, "task": {"synthetic": {"overlap": 0.4}}})");
    EXPECT_EQ(cfg.method, Method::embedhalluc_labelcalib);
    EXPECT_EQ(cfg.seeds, std::vector<std::uint64_t>{7});
    EXPECT_EQ(cfg.finetune.max_steps, 200u);
    EXPECT_EQ(cfg.finetune.eval_interval, 100u);
    EXPECT_EQ(cfg.critic.norm, halluc::NormKind::none);
    ASSERT_TRUE(cfg.task.synthetic.has_value());
    EXPECT_EQ(cfg.task.synthetic->overlap, 0.4);
    EXPECT_EQ(cfg.lr_grid, default_lr_grid());
}

TEST(Config, UnknownKeyNamesThePath) {
    try {
        parse_config(R"({"finetune": {"max_stpes": 5}})");
        FAIL() << "expected ConfigError";
    } catch (const ConfigError& e) {
        EXPECT_NE(std::string(e.what()).find("finetune.max_stpes"), std::string::npos);
    }
}

TEST(Config, BadValues) {
    EXPECT_THROW(parse_config(R"({"method": "magic"})"), ConfigError);
    EXPECT_THROW(parse_config(R"({"seeds": "one"})"), ConfigError);
    EXPECT_THROW(parse_config("{"), ConfigError);
}

TEST(Config, SerializationReloads) {
    ExperimentConfig cfg = tiny_experiment(Method::eda);
    cfg.baseline_lr_grid = {1e-5, 2e-5};
    const ExperimentConfig back = parse_config(config_to_json(cfg));
    EXPECT_EQ(config_to_json(back), config_to_json(cfg));
}

TEST(Config, MethodSpecificValidation) {
    ExperimentConfig cfg = tiny_experiment(Method::embedhalluc);
    cfg.lr_grid.clear();
    EXPECT_THROW(cfg.validate(), ConfigError);
    cfg = tiny_experiment(Method::finetune);
    cfg.seeds.clear();
    EXPECT_THROW(cfg.validate(), ConfigError);
}

TEST(Experiment, FinetuneRunIsDeterministic) {
    const ExperimentConfig cfg = tiny_experiment(Method::finetune);
    const RunReport a = run_experiment(cfg);
    const RunReport b = run_experiment(cfg);
    ASSERT_EQ(a.seeds.size(), 2u);
    EXPECT_EQ(a.succeeded, 2u);
    for (std::size_t i = 0; i < 2; ++i) {
        EXPECT_EQ(a.seeds[i].test_score, b.seeds[i].test_score);
        EXPECT_EQ(a.seeds[i].selected_step % cfg.finetune.eval_interval, 0u);
    }
    const auto [mean, std] = mean_std({a.seeds[0].test_score, a.seeds[1].test_score});
    EXPECT_NEAR(a.mean, mean, 1e-12);
    EXPECT_NEAR(a.std, std, 1e-12);
    EXPECT_EQ(a.std_convention, "population");
}

TEST(Experiment, ThreadsDoNotChangeResults) {
    ExperimentConfig cfg = tiny_experiment(Method::finetune);
    const RunReport serial = run_experiment(cfg);
    cfg.threads = 2;
    const RunReport parallel = run_experiment(cfg);
    for (std::size_t i = 0; i < 2; ++i) EXPECT_EQ(serial.seeds[i].test_score, parallel.seeds[i].test_score);
}

TEST(Experiment, EveryMethodRuns) {
    for (Method m : {Method::embedhalluc, Method::embedhalluc_labelcalib, Method::eda, Method::ssl}) {
        ExperimentConfig cfg = tiny_experiment(m);
        cfg.seeds = {1};
        if (m == Method::ssl) cfg.split.require_pool = true;
        const RunReport r = run_experiment(cfg);
        ASSERT_EQ(r.succeeded, 1u) << to_string(m) << ": " << r.seeds[0].error;
        EXPECT_TRUE(r.seeds[0].best_cell.has_value());
        EXPECT_TRUE(std::isfinite(r.mean));
    }
}

TEST(Experiment, FailingSeedIsReported) {
    ExperimentConfig cfg = tiny_experiment(Method::finetune);
    cfg.split.train_per_class = 500;  // more than the task holds
    const RunReport r = run_experiment(cfg);
    EXPECT_EQ(r.succeeded, 0u);
    EXPECT_EQ(r.failed_seeds.size(), 2u);
    EXPECT_FALSE(r.seeds[0].error.empty());
}

TEST(Experiment, BaselineLrSweep) {
    ExperimentConfig cfg = tiny_experiment(Method::finetune);
    cfg.seeds = {1};
    cfg.baseline_lr_grid = {1e-5, 2e-5, 5e-5};
    const RunReport r = run_experiment(cfg);
    ASSERT_EQ(r.succeeded, 1u);
    EXPECT_EQ(r.seeds[0].grid.size(), 3u);
}
