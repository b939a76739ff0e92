#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "embedhalluc/autodiff/ops.hpp"
#include "embedhalluc/data/split.hpp"
#include "embedhalluc/data/synthetic.hpp"
#include "embedhalluc/errors.hpp"
#include "embedhalluc/halluc/gan.hpp"
#include "embedhalluc/learner/finetune.hpp"
#include "embedhalluc/learner/model.hpp"

using namespace embedhalluc;
using namespace embedhalluc::learner;
using ad::Tensor;
namespace fs = std::filesystem;

namespace {

LearnerConfig small_config(std::size_t vocab = 12, EncoderKind encoder = EncoderKind::attention) {
    LearnerConfig c;
    c.vocab_size = vocab;
    c.embed_dim = 8;
    c.max_len = 6;
    c.num_blocks = 1;
    c.ffn_dim = 16;
    c.encoder = encoder;
    return c;
}

// Two separable classes: class 0 uses ids 4..7, class 1 ids 8..11.
LabeledSet toy_set(std::size_t n, std::uint64_t seed) {
    Rng rng(seed);
    std::uniform_int_distribution<int> word(0, 3), len(2, 5);
    LabeledSet s;
    for (std::size_t i = 0; i < n; ++i) {
        const int c = static_cast<int>(i % 2);
        std::vector<int> t;
        for (int k = len(rng); k > 0; --k) t.push_back(4 + 4 * c + word(rng));
        s.tokens.push_back(t);
        s.labels.push_back(c);
    }
    return s;
}

FinetuneConfig quick(std::size_t steps = 20) {
    FinetuneConfig f;
    f.max_steps = steps;
    f.eval_interval = 10;
    f.real_lr = 1e-3;
    f.halluc_lr = 1e-3;
    f.real_batch = 4;
    f.halluc_batch = 2;
    return f;
}

halluc::Generator trained_generator(const LearnerConfig& lc, std::uint64_t seed) {
    halluc::GeneratorConfig g;
    g.noise_dim = 4;
    g.hidden_dims = {8};
    g.output_len = lc.max_len;
    g.embed_dim = lc.embed_dim;
    halluc::Generator gen(g, seed);
    gen.mark_trained();
    return gen;
}

bool same_parameters(const LearnerModel& a, const LearnerModel& b) {
    const auto pa = a.parameters();
    const auto pb = b.parameters();
    if (pa.size() != pb.size()) return false;
    for (std::size_t i = 0; i < pa.size(); ++i)
        if (pa[i].values() != pb[i].values()) return false;
    return true;
}

}  // namespace

TEST(LearnerModel, LogitShapes) {
    for (auto enc : {EncoderKind::attention, EncoderKind::mean_pool}) {
        const LearnerModel m(small_config(12, enc), 1);
        EXPECT_EQ(m.forward_tokens({{4, 5}}).shape(), (ad::Shape{1, 2}));
        EXPECT_EQ(m.forward_embeddings(Tensor::zeros({3, 6, 8})).shape(), (ad::Shape{3, 2}));
    }
}

TEST(LearnerModel, OutOfVocabularyIsIndexError) {
    const LearnerModel m(small_config(), 1);
    EXPECT_THROW(m.forward_tokens({{4, 12}}), IndexError);
}

TEST(LearnerModel, EmbeddingWidthMismatch) {
    const LearnerModel m(small_config(), 1);
    EXPECT_THROW(m.forward_embeddings(Tensor::zeros({1, 6, 7})), DimensionError);
}

TEST(LearnerModel, ZeroEmbeddingsGiveFiniteLogits) {
    const LearnerModel m(small_config(), 2);
    for (double v : m.forward_embeddings(Tensor::zeros({2, 6, 8})).values()) EXPECT_TRUE(std::isfinite(v));
}

TEST(LearnerModel, TokenAndEmbeddingPathsAgree) {
    LearnerModel m(small_config(), 3);
    m.set_mode(ad::Mode::eval);
    const TokenBatch batch{{4, 9, 5, 11, 6, 7}, {8, 4}};
    const Tensor a = m.forward_tokens(batch);
    const Tensor b = m.forward_embeddings(m.embed_tokens(batch));
    ASSERT_EQ(a.values().size(), b.values().size());
    for (std::size_t i = 0; i < a.values().size(); ++i) EXPECT_NEAR(a.values()[i], b.values()[i], 1e-12);
}

TEST(LearnerModel, PadRowEmbedsToZero) {
    const LearnerModel m(small_config(), 4);
    const Tensor e = m.embed_tokens({{0, 5}}, 3);
    for (std::size_t k = 0; k < 8; ++k) {
        EXPECT_EQ(e.at({0, 0, k}), 0.0);
        EXPECT_EQ(e.at({0, 2, k}), 0.0);
    }
}

TEST(LearnerModel, NearUniformSoftmaxAtInit) {
    LearnerModel m(small_config(40), 5);
    m.set_mode(ad::Mode::eval);
    Rng rng(6);
    std::uniform_int_distribution<int> word(4, 39), len(1, 6);
    TokenBatch batch;
    for (int i = 0; i < 1000; ++i) {
        std::vector<int> t;
        for (int k = len(rng); k > 0; --k) t.push_back(word(rng));
        batch.push_back(t);
    }
    const Tensor p = ad::softmax(m.forward_tokens(batch));
    double p0 = 0.0;
    for (std::size_t i = 0; i < 1000; ++i) p0 += p.at({i, 0});
    EXPECT_NEAR(p0 / 1000.0, 0.5, 0.1);
}

TEST(LearnerModel, CloneIsIndependent) {
    const LearnerModel m(small_config(), 7);
    LearnerModel c = m.clone();
    EXPECT_EQ(c.checksum(), m.checksum());
    c.parameters()[0].mutable_values()[5] += 1.0;
    EXPECT_NE(c.checksum(), m.checksum());
}

TEST(LearnerModel, WordVectorsOverwriteRows) {
    const data::Vocab vocab = data::Vocab::from_words({"a", "b"});
    LearnerConfig c = small_config(vocab.size());
    LearnerModel m(c, 8);
    const data::WordVectors vectors{{"a", std::vector<double>(8, 0.5)}, {"zz", std::vector<double>(8, 1.0)}};
    EXPECT_EQ(m.load_word_vectors(vocab, vectors), 1u);
    const Tensor e = m.embed_tokens({{vocab.id("a")}}, 1);
    for (std::size_t k = 0; k < 8; ++k) EXPECT_EQ(e.at({0, 0, k}), 0.5);
    EXPECT_THROW(m.load_word_vectors(vocab, {{"a", std::vector<double>(3, 0.0)}}), DimensionError);
}

TEST(Finetune, ZeroStepsLeavesModelUnchanged) {
    const LearnerModel init(small_config(), 1);
    const auto r = finetune_teacher(init, toy_set(8, 1), quick(0), 3);
    EXPECT_EQ(r.final_model.checksum(), init.checksum());
}

TEST(Finetune, OverfitsTwoExamples) {
    const LearnerModel init(small_config(), 2);
    LabeledSet two{{{4, 5}, {8, 9}}, {0, 1}};
    FinetuneConfig f = quick(1000);
    f.real_batch = 2;
    f.eval_interval = 100;
    const auto r = finetune_teacher(init, two, f, 4);
    EXPECT_LT(r.log.back().real_loss, 0.05);
}

TEST(Finetune, DeterministicUnderSeed) {
    const LearnerModel init(small_config(), 3);
    const auto set = toy_set(8, 2);
    EXPECT_EQ(finetune_teacher(init, set, quick(), 5).final_model.checksum(),
              finetune_teacher(init, set, quick(), 5).final_model.checksum());
}

TEST(Finetune, EmptyTrainSetIsDataError) {
    const LearnerModel init(small_config(), 3);
    EXPECT_THROW(finetune_teacher(init, LabeledSet{}, quick(), 5), DataError);
}

TEST(Finetune, LabelOutOfRange) {
    const LearnerModel init(small_config(), 3);
    LabeledSet bad{{{4}}, {2}};
    EXPECT_THROW(finetune_teacher(init, bad, quick(), 5), LabelError);
}

TEST(Finetune, InvalidIntervalIsConfigError) {
    FinetuneConfig f = quick(25);
    EXPECT_THROW(f.validate(), ConfigError);
}

TEST(Finetune, SelectionOnlyAtEvalSteps) {
    const LearnerModel init(small_config(), 4);
    int calls = 0;
    const auto r = finetune(init, toy_set(8, 3), nullptr, quick(40), 6, [&](const LearnerModel&) {
        return static_cast<double>(++calls % 3);  // peaks at the 2nd eval
    });
    EXPECT_EQ(calls, 4);
    EXPECT_EQ(r.selected_step, 20u);
    EXPECT_EQ(r.selected_step % 10, 0u);
    for (const auto& e : r.log) EXPECT_EQ(std::isnan(e.val_metric), e.step % 10 != 0);
}

TEST(Finetune, EarliestStepWinsTies) {
    const LearnerModel init(small_config(), 4);
    const auto r = finetune(init, toy_set(8, 3), nullptr, quick(30), 6, [](const LearnerModel&) { return 0.5; });
    EXPECT_EQ(r.selected_step, 10u);
}

TEST(Student, DisabledHallucinationMatchesTeacherBitwise) {
    const LearnerConfig lc = small_config();
    const LearnerModel init(lc, 5);
    const auto set = toy_set(10, 4);
    FinetuneConfig f = quick(30);
    const auto teacher = finetune_teacher(init, set, f, 42);
    f.halluc_batch = 0;
    const auto gen = trained_generator(lc, 1);
    const auto student = finetune_student(init, teacher.final_model, set, &gen, f, 42);
    EXPECT_TRUE(same_parameters(teacher.final_model, student.final_model));
    for (std::size_t i = 0; i < teacher.log.size(); ++i) EXPECT_EQ(teacher.log[i].real_loss, student.log[i].real_loss);
}

TEST(Student, TeacherIsNeverMutated) {
    const LearnerConfig lc = small_config();
    const LearnerModel init(lc, 6);
    const auto set = toy_set(10, 5);
    const auto teacher = finetune_teacher(init, set, quick(), 1);
    const auto before = teacher.final_model.checksum();
    FinetuneConfig f = quick();
    f.label_calibration = true;
    const auto gen = trained_generator(lc, 2);
    const auto student = finetune_student(init, teacher.final_model, set, &gen, f, 2);
    EXPECT_EQ(teacher.final_model.checksum(), before);
    for (const auto& e : student.log) {
        EXPECT_TRUE(std::isfinite(e.halluc_loss));
        EXPECT_GE(e.halluc_loss, 0.0);
    }
}

TEST(Student, SummedModeRuns) {
    const LearnerConfig lc = small_config();
    const LearnerModel init(lc, 6);
    FinetuneConfig f = quick();
    f.loss_combination = LossCombination::summed;
    const auto gen = trained_generator(lc, 2);
    const auto r = finetune_student(init, init, toy_set(10, 5), &gen, f, 2);
    EXPECT_EQ(r.log.size(), 20u);
}

TEST(Student, GeneratorDependencies) {
    const LearnerConfig lc = small_config();
    const LearnerModel init(lc, 6);
    const auto set = toy_set(6, 1);
    EXPECT_THROW(finetune_student(init, init, set, nullptr, quick(), 1), DependencyError);
    halluc::GeneratorConfig g;
    g.noise_dim = 4;
    g.hidden_dims = {8};
    g.output_len = lc.max_len;
    g.embed_dim = lc.embed_dim;
    const halluc::Generator untrained(g, 1);
    EXPECT_THROW(finetune_student(init, init, set, &untrained, quick(), 1), DependencyError);
    g.embed_dim = 5;
    halluc::Generator narrow(g, 1);
    narrow.mark_trained();
    EXPECT_THROW(finetune_student(init, init, set, &narrow, quick(), 1), DimensionError);
}

TEST(Student, HardTargetLossIsCrossEntropy) {
    // With calibration off the auxiliary targets are one-hot, where KL equals CE.
    Rng rng(3);
    const Tensor logits = ad::randn({4, 2}, rng);
    const std::vector<int> labels{0, 1, 1, 0};
    EXPECT_NEAR(ad::kl_divergence(ad::one_hot(labels, 2), logits).item(),
                ad::softmax_cross_entropy(logits, labels).item(), 1e-12);
}

TEST(Student, CopyGeneratorBehavesLikeMoreRealData) {
    const LearnerConfig lc = small_config();
    const auto set = toy_set(16, 9);
    const LearnerModel init(lc, 9);
    std::vector<Tensor> embeddings;
    const Tensor all = init.embed_tokens(set.tokens);
    for (std::size_t i = 0; i < set.size(); ++i)
        embeddings.push_back(ad::reshape(ad::slice(all, 0, i, i + 1), {lc.max_len, lc.embed_dim}));
    const halluc::CopyGenerator copy(embeddings, set.labels, 2);
    FinetuneConfig f = quick(100);
    const auto student = finetune_student(init, init, set, &copy, f, 3);
    EXPECT_GE(evaluate(student.final_model, set, data::MetricKind::accuracy), 0.9);
}

TEST(PseudoLabel, SoftLabelSumsToOne) {
    LearnerModel teacher(small_config(), 10);
    teacher.set_mode(ad::Mode::eval);
    Rng rng(1);
    halluc::HallucSample s{ad::randn({6, 8}, rng), 1, std::nullopt};
    const auto labeled = pseudo_label(teacher, s);
    ASSERT_TRUE(labeled.soft_label.has_value());
    double total = 0.0;
    for (double p : *labeled.soft_label) total += p;
    EXPECT_NEAR(total, 1.0, 1e-9);
    EXPECT_EQ(labeled.condition_label, 1);
}

TEST(Evaluate, EmptySetIsDataError) {
    const LearnerModel m(small_config(), 1);
    EXPECT_THROW(evaluate(m, LabeledSet{}, data::MetricKind::accuracy), DataError);
}

TEST(Checkpoint, LearnerRoundTrip) {
    const LearnerModel m(small_config(), 11);
    const auto dir = fs::temp_directory_path() / "embedhalluc_learner_test" / "model";
    fs::remove_all(dir);
    save_learner(dir, m);
    const LearnerModel loaded = load_learner(dir);
    EXPECT_EQ(loaded.checksum(), m.checksum());
    EXPECT_EQ(loaded.config().encoder, m.config().encoder);
}

TEST(StepLog, CsvColumns) {
    const auto dir = fs::temp_directory_path() / "embedhalluc_learner_test";
    fs::create_directories(dir);
    write_step_log(dir / "steps.csv", {{1, 0.5, std::nan(""), std::nan("")}});
    std::ifstream in(dir / "steps.csv");
    std::string header, row;
    std::getline(in, header);
    std::getline(in, row);
    EXPECT_EQ(header, "step,L_real,L_halluc,val_metric");
    EXPECT_EQ(row, "1,0.5,,");
}
