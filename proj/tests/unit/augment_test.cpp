#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "embedhalluc/augment/eda.hpp"
#include "embedhalluc/augment/ssl.hpp"
#include "embedhalluc/data/split.hpp"
#include "embedhalluc/data/synthetic.hpp"
#include "embedhalluc/errors.hpp"

using namespace embedhalluc;
using namespace embedhalluc::augment;

namespace {

std::vector<std::string> words(std::size_t n) {
    std::vector<std::string> out;
    for (std::size_t i = 0; i < n; ++i) out.push_back("w" + std::to_string(i));
    return out;
}

EdaParams with_synonyms() {
    EdaParams p;
    for (int i = 0; i < 40; ++i) p.synonyms["w" + std::to_string(i)] = {"s" + std::to_string(i), "t" + std::to_string(i)};
    return p;
}

std::size_t expected_edits(double alpha, std::size_t len) {
    return std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(alpha * static_cast<double>(len))));
}

}  // namespace

TEST(Eda, EditCountFormula) {
    EdaParams p;
    EXPECT_EQ(p.alpha, 0.1);
    EXPECT_EQ(p.edit_count(1), 1u);
    EXPECT_EQ(p.edit_count(14), 1u);
    EXPECT_EQ(p.edit_count(15), 2u);
    EXPECT_EQ(p.edit_count(40), 4u);
}

TEST(Eda, EditCountsMatchAcrossLengths) {
    const EdaParams p = with_synonyms();
    Rng rng(1);
    for (std::size_t len = 1; len <= 40; ++len) {
        const auto s = words(len);
        const std::size_t n = expected_edits(p.alpha, len);
        const auto sr = eda_apply(s, EdaOp::synonym_replacement, p, rng);
        EXPECT_EQ(sr.edits, std::min(n, len));
        std::size_t changed = 0;
        for (std::size_t i = 0; i < len; ++i) changed += sr.tokens[i] != s[i];
        EXPECT_EQ(changed, sr.edits);
        const auto ri = eda_apply(s, EdaOp::random_insertion, p, rng);
        EXPECT_EQ(ri.tokens.size(), len + n);
        const auto rs = eda_apply(s, EdaOp::random_swap, p, rng);
        EXPECT_EQ(rs.edits, len < 2 ? 0u : n);
        auto a = rs.tokens, b = s;
        std::sort(a.begin(), a.end());
        std::sort(b.begin(), b.end());
        EXPECT_EQ(a, b);
    }
}

TEST(Eda, NothingEverEmptiesASentence) {
    EdaParams p = with_synonyms();
    p.alpha = 0.9;
    Rng rng(2);
    for (int trial = 0; trial < 500; ++trial) {
        const auto s = words(1 + trial % 5);
        for (EdaOp op : p.ops) EXPECT_FALSE(eda_apply(s, op, p, rng).tokens.empty());
    }
}

TEST(Eda, EmptySentenceIsDataError) {
    Rng rng(1);
    EXPECT_THROW(eda_apply({}, EdaOp::random_swap, EdaParams{}, rng), DataError);
}

TEST(Eda, NoSynonymsIsALoggedNoOp) {
    Rng rng(1);
    const auto r = eda_apply(words(5), EdaOp::synonym_replacement, EdaParams{}, rng);
    EXPECT_TRUE(r.noop);
    EXPECT_EQ(r.tokens, words(5));
}

TEST(Eda, FixedSeedIsDeterministic) {
    const EdaParams p = with_synonyms();
    std::vector<data::Example> xs{{"w1 w2 w3 w4 w5", "", 0}, {"w6 w7", "w8 w9", 1}};
    Rng a(7), b(7);
    const auto ra = eda_augment_examples(xs, p, 3, a);
    const auto rb = eda_augment_examples(xs, p, 3, b);
    ASSERT_EQ(ra.size(), 6u);
    for (std::size_t i = 0; i < ra.size(); ++i) {
        EXPECT_EQ(ra[i].text, rb[i].text);
        EXPECT_EQ(ra[i].text2, rb[i].text2);
        EXPECT_EQ(ra[i].label, xs[i / 3].label);
    }
}

TEST(Eda, AllOpsModeEmitsOnePerOperation) {
    const EdaParams p = with_synonyms();
    Rng rng(3);
    EXPECT_EQ(eda_augment_examples({{"w1 w2 w3", "", 1}}, p, 0, rng).size(), 4u);
}

TEST(Eda, InvalidParams) {
    EdaParams p;
    p.alpha = 0.0;
    EXPECT_THROW(p.validate(), ConfigError);
    p.alpha = 0.1;
    p.ops.clear();
    EXPECT_THROW(p.validate(), ConfigError);
}

TEST(Eda, OpNamesRoundTrip) {
    for (EdaOp op : EdaParams{}.ops) EXPECT_EQ(parse_eda_op(to_string(op)), op);
}

class SslTest : public ::testing::Test {
protected:
    void SetUp() override {
        data::SyntheticSpec spec;
        spec.size = 400;
        task = data::synthetic_task(spec);
        vocab = data::Vocab::from_words(task.words);
        split = data::sample_few_shot(task.dataset, 3, {16, 16, 64, true});
        learner::LearnerConfig lc;
        lc.vocab_size = vocab.size();
        lc.embed_dim = 8;
        lc.num_blocks = 1;
        lc.ffn_dim = 16;
        init = learner::LearnerModel(lc, 1);
        cfg.max_steps = 20;
        cfg.eval_interval = 10;
        cfg.real_lr = 1e-3;
        cfg.halluc_lr = 1e-3;
    }

    data::SyntheticTask task;
    data::Vocab vocab;
    data::FewShotSplit split;
    learner::LearnerModel init;
    learner::FinetuneConfig cfg;
};

TEST_F(SslTest, FullPoolLabelsSixtyFourPerClass) {
    const SslTask t{split.train, split.pool, data::TaskKind::single_sentence, &vocab};
    const auto out = ssl_pseudo_label_pipeline(init, t, cfg, cfg, 5, {});
    EXPECT_EQ(out.pool_labels.size(), 64u * task.dataset.num_classes);
    for (int l : out.pool_labels) EXPECT_TRUE(l == 0 || l == 1);
    for (const auto& e : out.phase2.log) EXPECT_TRUE(std::isfinite(e.halluc_loss));
}

TEST_F(SslTest, EmptyPoolIsPlainFinetuneBitwise) {
    const SslTask t{split.train, {}, data::TaskKind::single_sentence, &vocab};
    const auto out = ssl_pseudo_label_pipeline(init, t, cfg, cfg, 5, {});
    const auto train = learner::make_labeled_set(split.train, data::TaskKind::single_sentence, vocab);
    const auto plain = learner::finetune(init, train, nullptr, cfg, 5, {});
    EXPECT_TRUE(out.pool_labels.empty());
    EXPECT_EQ(out.phase2.final_model.checksum(), plain.final_model.checksum());
}

TEST_F(SslTest, PoolOverlappingTrainIsRejected) {
    data::UnlabeledPool pool = split.pool;
    pool.items.push_back({split.train[0].text, split.train[0].text2});
    const SslTask t{split.train, pool, data::TaskKind::single_sentence, &vocab};
    EXPECT_THROW(ssl_pseudo_label_pipeline(init, t, cfg, cfg, 5, {}), ContaminationError);
}

TEST_F(SslTest, MissingVocabularyIsConfigError) {
    const SslTask t{split.train, split.pool, data::TaskKind::single_sentence, nullptr};
    EXPECT_THROW(ssl_pseudo_label_pipeline(init, t, cfg, cfg, 5, {}), ConfigError);
}
