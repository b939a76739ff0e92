#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "embedhalluc/autodiff/grad.hpp"
#include "embedhalluc/autodiff/nn.hpp"
#include "embedhalluc/autodiff/ops.hpp"
#include "embedhalluc/autodiff/optim.hpp"
#include "embedhalluc/errors.hpp"
#include "../support/gradcheck.hpp"
#include "../support/op_suite.hpp"

using namespace embedhalluc;
using namespace embedhalluc::ad;
using embedhalluc::test_support::gradcheck;
namespace ts = embedhalluc::test_support;

namespace {

Tensor mat(std::size_t r, std::size_t c, std::vector<double> v, bool rg = false) {
    return Tensor::from_values({r, c}, std::move(v), rg);
}

void expect_values(const Tensor& t, const std::vector<double>& expected, double tol = 1e-12) {
    ASSERT_EQ(t.numel(), expected.size());
    for (std::size_t i = 0; i < expected.size(); ++i) EXPECT_NEAR(t.values()[i], expected[i], tol) << "index " << i;
}

}  // namespace

TEST(Matmul, IdentityTimesIdentity) {
    const Tensor eye = mat(2, 2, {1, 0, 0, 1});
    expect_values(matmul(eye, eye), {1, 0, 0, 1});
}

TEST(Matmul, HandComputedProduct) {
    const Tensor y = matmul(mat(2, 2, {1, 2, 3, 4}), mat(2, 1, {1, 1}));
    EXPECT_EQ(y.shape(), (Shape{2, 1}));
    expect_values(y, {3, 7});
}

TEST(Matmul, GradientOfSumIsOnesTimesBTransposed) {
    Tensor a = mat(2, 3, {0.5, -1, 2, 1.5, 0.25, -0.75}, true);
    Tensor b = mat(3, 2, {1, 2, 3, 4, 5, 6}, true);
    const auto g = grad(sum(matmul(a, b)), {a, b});
    // ones(2x2) * B^T: every row equals the row sums of B.
    expect_values(g[0], {3, 7, 11, 3, 7, 11});
    const double err = gradcheck([](const std::vector<Tensor>& x) { return sum(matmul(x[0], x[1])); },
                                 {a.clone(), b.clone()});
    EXPECT_LT(err, 1e-4);
}

TEST(Matmul, ShapeMismatchNamesBothShapes) {
    try {
        matmul(Tensor::zeros({2, 3}), Tensor::zeros({4, 5}));
        FAIL() << "expected DimensionError";
    } catch (const DimensionError& e) {
        const std::string msg = e.what();
        EXPECT_NE(msg.find("[2x3]"), std::string::npos);
        EXPECT_NE(msg.find("[4x5]"), std::string::npos);
    }
}

TEST(Matmul, BackwardIsRecordedForDoubleBackward) {
    Tensor a = mat(1, 2, {1.5, -2.0}, true);
    Tensor b = mat(2, 1, {0.5, 3.0}, true);
    // d/da sum(a b) = b^T, so sum((d/da)^2) depends on b; its gradient is 2b.
    const Tensor ga = grad(sum(matmul(a, b)), {a}, true)[0];
    const Tensor gb = grad(sum(square(ga)), {b})[0];
    expect_values(gb, {1.0, 6.0});
}

TEST(LeakyRelu, DefinitionCases) {
    expect_values(leaky_relu(Tensor::scalar(1.0), 0.2), {1.0});
    expect_values(leaky_relu(Tensor::scalar(-1.0), 0.2), {-0.2});
    expect_values(leaky_relu(Tensor::scalar(0.0), 0.2), {0.0});
}

TEST(BatchNorm, ConstantColumnNormalizesToZero) {
    Tensor rm = Tensor::zeros({1});
    Tensor rv = Tensor::ones({1});
    const Tensor y = batch_norm_normalize(mat(3, 1, {4, 4, 4}), rm, rv, Mode::train);
    expect_values(y, {0, 0, 0});
    for (double v : y.values()) EXPECT_TRUE(std::isfinite(v));
}

TEST(BatchNorm, TwoRowsUsePopulationVariance) {
    Tensor rm = Tensor::zeros({1});
    Tensor rv = Tensor::ones({1});
    const Tensor y = batch_norm_normalize(mat(2, 1, {0, 2}), rm, rv, Mode::train);
    // mean 1, population variance 1; only the 1e-5 floor separates it from +-1.
    expect_values(y, {-1.0 / std::sqrt(1.0 + 1e-5), 1.0 / std::sqrt(1.0 + 1e-5)});
    EXPECT_NEAR(rm.values()[0], 0.1, 1e-12);
}

TEST(BatchNorm, EvalWithUnitRunningStatsIsIdentity) {
    BatchNorm bn(3);
    const Tensor x = mat(2, 3, {1, -2, 3, 0.5, 0, -1});
    std::vector<double> expected = x.values();
    for (auto& v : expected) v /= std::sqrt(1.0 + 1e-5);
    expect_values(bn.forward(x, Mode::eval), expected);
}

TEST(BatchNorm, SingleRowTrainModeIsDegenerate) {
    BatchNorm bn(2);
    EXPECT_THROW(bn.forward(mat(1, 2, {1, 2}), Mode::train), DegenerateBatchError);
    EXPECT_NO_THROW(bn.forward(mat(1, 2, {1, 2}), Mode::eval));
}

TEST(CrossEntropy, UniformLogitsGiveLogTwo) {
    EXPECT_NEAR(softmax_cross_entropy(mat(1, 2, {0.3, 0.3}), {1}).item(), std::numbers::ln2, 1e-12);
}

TEST(CrossEntropy, LargeLogitIsStable) {
    const double loss = softmax_cross_entropy(mat(1, 2, {1000, 0}), {0}).item();
    EXPECT_TRUE(std::isfinite(loss));
    EXPECT_NEAR(loss, 0.0, 1e-12);
}

TEST(CrossEntropy, LabelOutOfRange) {
    EXPECT_THROW(softmax_cross_entropy(mat(1, 2, {0, 0}), {2}), IndexError);
    EXPECT_THROW(softmax_cross_entropy(mat(1, 2, {0, 0}), {-1}), IndexError);
}

TEST(KlDivergence, MatchedDistributionsGiveZero) {
    const Tensor logits = mat(2, 3, {0.1, -0.4, 2.0, 1.0, 1.0, -3.0});
    const Tensor teacher = softmax(logits).detach();
    EXPECT_NEAR(kl_divergence(teacher, logits).item(), 0.0, 1e-12);
}

TEST(KlDivergence, DirectSummation) {
    const Tensor teacher = mat(1, 2, {0.5, 0.5});
    const Tensor student = mat(1, 2, {0.0, std::log(3.0)});  // softmax = (0.25, 0.75)
    const double expected = 0.5 * std::log(2.0) + 0.5 * std::log(2.0 / 3.0);
    EXPECT_NEAR(kl_divergence(teacher, student).item(), expected, 1e-12);
    EXPECT_NEAR(expected, 0.1438, 1e-4);
}

TEST(KlDivergence, OneHotTeacherIsCrossEntropy) {
    const Tensor logits = mat(3, 3, {0.2, 1.0, -0.5, 3.0, 0.0, 0.1, -1.0, -1.0, 2.0});
    const std::vector<int> labels{1, 0, 2};
    EXPECT_NEAR(kl_divergence(one_hot(labels, 3), logits).item(), softmax_cross_entropy(logits, labels).item(),
                1e-12);
}

TEST(KlDivergence, RejectsUnnormalizedTeacher) {
    EXPECT_THROW(kl_divergence(mat(1, 2, {0.5, 0.6}), mat(1, 2, {0, 0})), DistributionError);
    EXPECT_THROW(kl_divergence(mat(1, 2, {1.5, -0.5}), mat(1, 2, {0, 0})), DistributionError);
}

TEST(KlDivergence, NonnegativeAndZeroOnlyWhenMatched) {
    Rng rng(11);
    for (int trial = 0; trial < 50; ++trial) {
        const Tensor teacher_logits = randn({4, 5}, rng, 2.0);
        const Tensor student_logits = randn({4, 5}, rng, 2.0);
        const Tensor teacher = softmax(teacher_logits).detach();
        EXPECT_GE(kl_divergence(teacher, student_logits).item(), 0.0);
        EXPECT_GT(kl_divergence(teacher, student_logits).item(), 1e-10);
        EXPECT_LE(kl_divergence(teacher, teacher_logits).item(), 1e-10);
    }
}

TEST(InputGradient, LinearCriticHasConstantGradient) {
    const Tensor w = mat(2, 1, {3, 4}, true);
    const Tensor b = Tensor::scalar(0.5, true);
    auto critic = [&](const Tensor& x) { return add(matmul(x, w), b); };
    Rng rng(3);
    for (int trial = 0; trial < 5; ++trial) {
        const Tensor g = input_gradient(critic, randn({3, 2}, rng));
        expect_values(g, {3, 4, 3, 4, 3, 4});
    }
}

TEST(InputGradient, HalfSquaredNormGivesIdentity) {
    const Tensor x = mat(2, 2, {1, -2, 0.5, 3});
    const Tensor g = input_gradient([](const Tensor& v) { return scale(sum(square(v)), 0.5); }, x);
    expect_values(g, x.values());
}

TEST(InputGradient, PenaltyParameterGradientMatchesFiniteDifferences) {
    Rng rng(5);
    const Tensor x = randn({4, 3}, rng);
    const auto loss = ts::double_backward_loss(x, false);
    const double err = gradcheck(loss, {randn({3, 6}, rng), randn({6}, rng), randn({6, 1}, rng)});
    EXPECT_LT(err, 1e-4);
}

TEST(InputGradient, FirstOrderOnlyOpIsRejected) {
    auto net = [](const Tensor& x) {
        return elementwise_map(x, [](double v) { return std::tanh(v); },
                               [](double v) { return 1.0 - std::tanh(v) * std::tanh(v); });
    };
    Tensor w = Tensor::ones({2}, true);
    EXPECT_THROW(input_gradient([&](const Tensor& x) { return mul(net(x), w); }, Tensor::ones({2})),
                 CapabilityError);
    // First-order use is fine.
    Tensor x = Tensor::from_values({2}, {0.3, -0.2}, true);
    const Tensor g = grad(sum(net(x)), {x})[0];
    EXPECT_NEAR(g.values()[0], 1.0 - std::tanh(0.3) * std::tanh(0.3), 1e-12);
}

TEST(Backward, NoRequiresGradIsANoOp) {
    const Tensor a = mat(2, 2, {1, 2, 3, 4});
    const Tensor loss = sum(matmul(a, a));
    EXPECT_NO_THROW(backward(loss));
    EXPECT_FALSE(a.grad().defined());
}

TEST(Backward, AccumulatesIntoLeaves) {
    Tensor w = Tensor::from_values({2}, {1.0, 2.0}, true);
    backward(sum(square(w)));
    backward(sum(w));
    expect_values(w.grad(), {3.0, 5.0});
    w.zero_grad();
    EXPECT_FALSE(w.grad().defined());
}

TEST(Adam, ZeroGradientLeavesParametersUnchanged) {
    std::vector<Tensor> params{Tensor::from_values({2}, {1.0, -1.0}, true)};
    AdamState state(params, {0.1, 0.5, 0.999, 1e-8});
    const std::vector<Tensor> grads{Tensor::zeros({2})};
    adam_step(params, grads, state);
    expect_values(params[0], {1.0, -1.0});
    EXPECT_EQ(state.step, 1u);
    adam_step(params, grads, state);
    EXPECT_EQ(state.step, 2u);
}

TEST(Adam, FirstStepMovesByLearningRate) {
    std::vector<Tensor> params{Tensor::scalar(2.0, true)};
    AdamState state(params, {0.1, 0.5, 0.999, 1e-8});
    adam_step(params, std::vector<Tensor>{Tensor::scalar(1.0)}, state);
    // m_hat = 1, v_hat = 1, so the step is lr / (1 + eps).
    EXPECT_NEAR(params[0].item(), 2.0 - 0.1 / (1.0 + 1e-8), 1e-15);
}

TEST(Adam, ConstantGradientMovesMonotonically) {
    std::vector<Tensor> params{Tensor::from_values({2}, {0.0, 0.0}, true)};
    AdamState state(params, {0.05, 0.9, 0.999, 1e-8});
    const std::vector<Tensor> grads{Tensor::from_values({2}, {2.0, -0.5})};
    adam_step(params, grads, state);
    const auto after_one = params[0].values();
    adam_step(params, grads, state);
    EXPECT_LT(after_one[0], 0.0);
    EXPECT_LT(params[0].values()[0], after_one[0]);
    EXPECT_GT(after_one[1], 0.0);
    EXPECT_GT(params[0].values()[1], after_one[1]);
}

TEST(Adam, ShapeMismatch) {
    std::vector<Tensor> params{Tensor::zeros({2}, true)};
    AdamState state(params, {});
    EXPECT_THROW(adam_step(params, std::vector<Tensor>{Tensor::zeros({3})}, state), DimensionError);
    EXPECT_THROW(adam_step(params, std::vector<Tensor>{}, state), DimensionError);
}

TEST(Tensor, ShapeAndValueCountAgree) {
    EXPECT_THROW(Tensor::from_values({2, 2}, {1, 2, 3}), DimensionError);
    EXPECT_EQ(Tensor::zeros({2, 3, 4}).numel(), 24u);
}

TEST(Broadcast, IncompatibleShapesNameBoth) {
    EXPECT_THROW(add(Tensor::zeros({2, 3}), Tensor::zeros({4})), DimensionError);
}

// Every op: reverse mode against central differences on 20 random inputs.
class OpGradient : public ::testing::TestWithParam<std::size_t> {};

TEST_P(OpGradient, MatchesCentralDifferences) {
    const auto suite = ts::op_suite();
    const auto& c = suite[GetParam()];
    Rng rng(1000 + GetParam());
    for (int trial = 0; trial < 20; ++trial) {
        auto inputs = c.inputs(rng);
        const auto loss = ts::projected(c.op, inputs, rng);
        EXPECT_LT(gradcheck(loss, inputs), 1e-4) << c.name << " trial " << trial;
    }
}

INSTANTIATE_TEST_SUITE_P(AllOps, OpGradient, ::testing::Range<std::size_t>(0, ts::op_suite().size()),
                         [](const auto& info) { return ts::op_suite()[info.param].name; });

TEST(DoubleBackward, TwoLayerCriticPenaltyGradient) {
    Rng rng(77);
    for (bool bn : {false, true}) {
        for (int trial = 0; trial < 5; ++trial) {
            const Tensor x = randn({5, 4}, rng);
            const double err = gradcheck(ts::double_backward_loss(x, bn),
                                         {randn({4, 8}, rng), randn({8}, rng), randn({8, 1}, rng)});
            EXPECT_LT(err, 1e-3) << (bn ? "batch-norm" : "plain") << " trial " << trial;
        }
    }
}
