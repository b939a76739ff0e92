#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "embedhalluc/autodiff/grad.hpp"
#include "embedhalluc/autodiff/ops.hpp"
#include "embedhalluc/errors.hpp"
#include "embedhalluc/halluc/gan.hpp"
#include "embedhalluc/halluc/sample.hpp"
#include "../support/gradcheck.hpp"

using namespace embedhalluc;
using namespace embedhalluc::halluc;
using ad::Tensor;
namespace fs = std::filesystem;

namespace {

GeneratorConfig tiny_generator(std::size_t classes = 2) {
    GeneratorConfig g;
    g.noise_dim = 4;
    g.num_classes = classes;
    g.hidden_dims = {8, 8};
    g.output_len = 2;
    g.embed_dim = 3;
    return g;
}

CriticConfig tiny_critic(std::size_t classes = 2, NormKind norm = NormKind::none) {
    CriticConfig c;
    c.hidden_dims = {8, 8};
    c.output_len = 2;
    c.embed_dim = 3;
    c.num_classes = classes;
    c.norm = norm;
    return c;
}

std::vector<RealEmbedding> gaussian_pairs(std::size_t n, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<RealEmbedding> out;
    for (std::size_t i = 0; i < n; ++i) {
        const int c = static_cast<int>(i % 2);
        Tensor e = ad::randn({2, 3}, rng, 0.3);
        for (auto& v : e.mutable_values()) v += c == 0 ? -1.0 : 1.0;
        out.push_back({e, c});
    }
    return out;
}

fs::path fresh_dir(const std::string& name) {
    const auto dir = fs::temp_directory_path() / "embedhalluc_halluc_test" / name;
    fs::remove_all(dir);
    return dir;
}

}  // namespace

TEST(GradientPenalty, LinearCriticThreeFour) {
    const Tensor w = Tensor::from_values({2, 1}, {3, 4});
    auto critic = [&](const Tensor& x) { return ad::matmul(x, w); };
    Rng rng(1);
    const Tensor real = ad::randn({6, 2}, rng);
    const Tensor fake = ad::randn({6, 2}, rng);
    // ||grad|| = 5 everywhere, so the penalty is 100 * (5 - 1)^2.
    EXPECT_NEAR(gradient_penalty(critic, real, fake, 100.0, rng).item(), 1600.0, 1e-9);
}

TEST(GradientPenalty, UnitGradientCriticIsFree) {
    const Tensor w = Tensor::from_values({2, 1}, {0.6, 0.8});
    auto critic = [&](const Tensor& x) { return ad::matmul(x, w); };
    Rng rng(2);
    const Tensor real = ad::randn({5, 2}, rng);
    const Tensor fake = ad::randn({5, 2}, rng);
    EXPECT_NEAR(gradient_penalty(critic, real, fake, 100.0, rng).item(), 0.0, 1e-9);
}

TEST(GradientPenalty, ZeroWeightContributesNoGradient) {
    Rng rng(3);
    Tensor w1 = ad::randn({3, 5}, rng).set_requires_grad(true);
    Tensor w2 = ad::randn({5, 1}, rng).set_requires_grad(true);
    auto critic = [&](const Tensor& x) { return ad::matmul(ad::leaky_relu(ad::matmul(x, w1)), w2); };
    const Tensor gp = gradient_penalty(critic, ad::randn({4, 3}, rng), ad::randn({4, 3}, rng), 0.0, rng);
    EXPECT_EQ(gp.item(), 0.0);
    for (const auto& g : ad::grad(gp, {w1, w2}, true))
        for (double v : g.values()) EXPECT_EQ(v, 0.0);
}

TEST(GradientPenalty, ParameterGradientMatchesFiniteDifferences) {
    Rng data_rng(4);
    const Tensor real = ad::randn({4, 3}, data_rng);
    const Tensor fake = ad::randn({4, 3}, data_rng);
    // The same interpolation draws on every evaluation.
    auto loss = [&](const std::vector<Tensor>& p) {
        // The penalty needs the recorded graph even inside the oracle's no-grad evaluations.
        ad::GradModeGuard record(true);
        Rng eps(99);
        auto critic = [&](const Tensor& x) {
            return ad::matmul(ad::leaky_relu(ad::add(ad::matmul(x, p[0]), p[1])), p[2]);
        };
        return gradient_penalty(critic, real, fake, 10.0, eps);
    };
    Rng rng(5);
    const double err =
        test_support::gradcheck(loss, {ad::randn({3, 6}, rng), ad::randn({6}, rng), ad::randn({6, 1}, rng)});
    EXPECT_LT(err, 1e-3);
}

TEST(Generator, ShapesAndConditioning) {
    const Generator g(tiny_generator(3), 7);
    Rng rng(1);
    const Tensor x = g.forward(ad::randn({5, 4}, rng), {0, 1, 2, 0, 1}, ad::Mode::train);
    EXPECT_EQ(x.shape(), (ad::Shape{5, 2, 3}));
    // Same noise, different class: different output.
    const Tensor z = ad::randn({1, 4}, rng);
    const Tensor a = g.forward(z, {0}, ad::Mode::eval);
    const Tensor b = g.forward(z, {2}, ad::Mode::eval);
    EXPECT_NE(a.values(), b.values());
    EXPECT_THROW(g.forward(z, {3}, ad::Mode::eval), IndexError);
}

TEST(Generator, SampleBatchIsDeterministicAndDetached) {
    Generator g(tiny_generator(), 11);
    g.mark_trained();
    Rng r1(5), r2(5);
    const Tensor a = g.sample_batch({0, 1, 1}, r1);
    const Tensor b = g.sample_batch({0, 1, 1}, r2);
    EXPECT_EQ(a.values(), b.values());
    EXPECT_FALSE(a.requires_grad());
}

TEST(Generator, FullScaleConfigWidths) {
    const GeneratorConfig g = GeneratorConfig::full_scale(2);
    EXPECT_EQ(g.hidden_dims, (std::vector<std::size_t>{128, 256, 512, 1024}));
    EXPECT_EQ(g.output_width(), 128u * 1024u);
    EXPECT_NO_THROW(g.validate());
    const CriticConfig c = CriticConfig::full_scale(2);
    EXPECT_EQ(c.input_width(), 128u * 1024u + 2u);
}

TEST(Generator, InvalidConfig) {
    GeneratorConfig g = tiny_generator();
    g.num_classes = 0;
    EXPECT_THROW(g.validate(), ConfigError);
}

TEST(Critic, ScoresOneColumnPerRow) {
    for (NormKind norm : {NormKind::none, NormKind::batch_norm}) {
        const Critic c(tiny_critic(2, norm), 3);
        Rng rng(2);
        const Tensor s = c.forward(ad::randn({4, 2, 3}, rng), {0, 1, 0, 1}, ad::Mode::train);
        EXPECT_EQ(s.shape(), (ad::Shape{4, 1}));
    }
}

TEST(TrainHallucinator, MissingClassIsCoverageError) {
    auto real = gaussian_pairs(8, 1);
    for (auto& r : real) r.label = 0;
    EXPECT_THROW(train_hallucinator(real, tiny_generator(), tiny_critic(), {}, 1), CoverageError);
}

TEST(TrainHallucinator, WrongEmbeddingShape) {
    auto real = gaussian_pairs(8, 1);
    real[3].embedding = Tensor::zeros({2, 4});
    EXPECT_THROW(train_hallucinator(real, tiny_generator(), tiny_critic(), {}, 1), DimensionError);
}

TEST(TrainHallucinator, ZeroEpochsReturnsInitialNetworks) {
    HallucTrainConfig t;
    t.epochs = 0;
    const auto r = train_hallucinator(gaussian_pairs(8, 1), tiny_generator(), tiny_critic(), t, 9);
    EXPECT_TRUE(r.history.empty());
    EXPECT_TRUE(r.generator.ready());
}

TEST(TrainHallucinator, DeterministicUnderSeed) {
    HallucTrainConfig t;
    t.epochs = 3;
    t.batch_size = 8;
    const auto real = gaussian_pairs(16, 2);
    const auto a = train_hallucinator(real, tiny_generator(), tiny_critic(), t, 5);
    const auto b = train_hallucinator(real, tiny_generator(), tiny_critic(), t, 5);
    ASSERT_EQ(a.history.size(), 3u);
    for (std::size_t i = 0; i < 3; ++i) {
        EXPECT_EQ(a.history[i].critic_loss, b.history[i].critic_loss);
        EXPECT_EQ(a.history[i].gen_loss, b.history[i].gen_loss);
        EXPECT_TRUE(std::isnan(a.history[i].heldout_wasserstein));
    }
}

TEST(TrainHallucinator, CallbackOncePerEpochCountingFromOne) {
    HallucTrainConfig t;
    t.epochs = 2;
    t.batch_size = 8;
    std::size_t calls = 0;
    train_hallucinator(gaussian_pairs(20, 3), tiny_generator(), tiny_critic(), t, 5, nullptr,
                       [&](const EpochRecord& r, const Generator&) { EXPECT_EQ(r.epoch, ++calls); });
    EXPECT_EQ(calls, 2u);
}

TEST(Checkpoint, GeneratorRoundTrip) {
    HallucTrainConfig t;
    t.epochs = 1;
    t.batch_size = 8;
    const auto r = train_hallucinator(gaussian_pairs(16, 4), tiny_generator(), tiny_critic(), t, 6);
    const auto dir = fresh_dir("roundtrip");
    save_hallucinator(dir, r.generator, r.critic);
    const Generator loaded = load_generator(dir);
    EXPECT_TRUE(loaded.ready());
    Rng r1(8), r2(8);
    EXPECT_EQ(r.generator.sample_batch({0, 1}, r1).values(), loaded.sample_batch({0, 1}, r2).values());
}

TEST(Checkpoint, MissingDirectoryIsDependencyError) {
    EXPECT_THROW(load_generator(fresh_dir("absent")), DependencyError);
}

TEST(LossHistory, CsvHeader) {
    const auto dir = fresh_dir("history");
    fs::create_directories(dir);
    write_loss_history(dir / "h.csv", {{0, 1.0, 2.0, 3.0, 0.0}});
    std::ifstream in(dir / "h.csv");
    std::string header;
    std::getline(in, header);
    EXPECT_EQ(header, "epoch,critic_loss,gen_loss,wasserstein_estimate");
}

TEST(Generate, BadClassAndEmptyRequest) {
    Generator g(tiny_generator(), 1);
    g.mark_trained();
    Rng rng(1);
    EXPECT_THROW(generate(g, 2, 3, rng), IndexError);
    EXPECT_THROW(generate(g, -1, 3, rng), IndexError);
    EXPECT_TRUE(generate(g, 1, 0, rng).empty());
    const auto samples = generate(g, 1, 4, rng);
    ASSERT_EQ(samples.size(), 4u);
    for (const auto& s : samples) {
        EXPECT_EQ(s.condition_label, 1);
        EXPECT_EQ(s.embedding.shape(), (ad::Shape{2, 3}));
    }
}

TEST(HallucSample, SoftLabelMustBeADistribution) {
    HallucSample s{Tensor::zeros({2, 3}), 0, std::vector<double>{0.7, 0.7}};
    EXPECT_THROW(s.validate(), DistributionError);
    s.soft_label = std::vector<double>{0.25, 0.75};
    EXPECT_NO_THROW(s.validate());
}

TEST(CopyGenerator, EmitsStoredEmbeddingsOfTheClass) {
    const Tensor a = Tensor::full({2, 3}, 1.0);
    const Tensor b = Tensor::full({2, 3}, -1.0);
    const CopyGenerator copy({a, b}, {0, 1}, 2);
    Rng rng(3);
    const Tensor x = copy.sample_batch({1, 0, 1}, rng);
    EXPECT_EQ(x.shape(), (ad::Shape{3, 2, 3}));
    EXPECT_EQ(x.at({0, 0, 0}), -1.0);
    EXPECT_EQ(x.at({1, 1, 2}), 1.0);
    EXPECT_THROW(CopyGenerator({a}, {0}, 2), CoverageError);
}
