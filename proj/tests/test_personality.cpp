#include <gtest/gtest.h>

#include <cmath>

#include "dyadic/personality.hpp"
#include "dyadic/rng.hpp"
#include "support/oracles.hpp"

using namespace dyadic;

TEST(HeadForward, AllZeroGivesHalf) {
    const HeadParams h = HeadParams::zeros(4);
    const auto out = head_forward(h, Vector{1, -2, 3, 0.5});
    EXPECT_EQ(out.s, (Vector{0.5, 0.5, 0.5, 0.5}));
    EXPECT_EQ(out.y, Vector(5, 0.5));
}

TEST(HeadForward, ZeroInputAndSecondLayer) {
    Rng rng(1);
    HeadParams h = HeadParams::zeros(3);
    for (double& x : h.w1.data()) x = rng.uniform(-2, 2);
    EXPECT_EQ(head_forward(h, Vector{0, 0, 0}).y, Vector(5, 0.5));
}

TEST(HeadForward, HandSeededD2) {
    HeadParams h = HeadParams::zeros(2);
    h.w1 = Matrix::from_rows({{0.5, -1.0}, {2.0, 0.25}});
    h.c1 = {0.1, -0.2};
    h.w2 = Matrix::from_rows({{1, 0, -1, 0.5, 2}, {0, 1, 1, -0.5, -2}});
    h.c2 = {0, 0.1, 0.2, 0.3, 0.4};
    const Vector u{1.0, -0.5};
    const auto out = head_forward(h, u);
    const double s0 = oracle::sigm(1.0 * 0.5 + -0.5 * 2.0 + 0.1);
    const double s1 = oracle::sigm(1.0 * -1.0 + -0.5 * 0.25 - 0.2);
    EXPECT_NEAR(out.s[0], s0, 1e-12);
    EXPECT_NEAR(out.s[1], s1, 1e-12);
    const double w2[2][5] = {{1, 0, -1, 0.5, 2}, {0, 1, 1, -0.5, -2}};
    for (int k = 0; k < 5; ++k) {
        EXPECT_NEAR(out.y[k], oracle::sigm(s0 * w2[0][k] + s1 * w2[1][k] + h.c2[k]), 1e-12);
    }
}

TEST(HeadForward, OutputsStrictlyInsideUnitInterval) {
    Rng rng(2);
    for (int trial = 0; trial < 200; ++trial) {
        HeadParams h = HeadParams::zeros(4);
        for (double& x : h.w1.data()) x = rng.uniform(-3, 3);
        for (double& x : h.w2.data()) x = rng.uniform(-3, 3);
        Vector u(4);
        for (double& x : u) x = rng.uniform(-5, 5);
        for (double y : head_forward(h, u).y) {
            EXPECT_GT(y, 0.0);
            EXPECT_LT(y, 1.0);
        }
    }
}

TEST(HeadForward, ShapeMismatch) {
    EXPECT_THROW(head_forward(HeadParams::zeros(3), Vector{1, 2}), ShapeError);
}

TEST(HeadBackward, MatchesFiniteDifferences) {
    Rng rng(3);
    for (int trial = 0; trial < 5; ++trial) {
        HeadParams h = HeadParams::zeros(3);
        for (double& x : h.w1.data()) x = rng.uniform(-1, 1);
        for (double& x : h.c1) x = rng.uniform(-1, 1);
        for (double& x : h.w2.data()) x = rng.uniform(-1, 1);
        for (double& x : h.c2) x = rng.uniform(-1, 1);
        Vector u{rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)};
        TraitBits labels{};
        for (int& b : labels) b = rng.bernoulli(0.5);
        const auto g = head_backward(h, u, labels);
        auto loss = [&] { return head_loss(h, u, labels); };
        double worst = 0.0;
        auto check = [&](double* p, double a) {
            worst = std::max(worst, oracle::rel_err(a, oracle::central_difference(loss, p)));
        };
        for (std::size_t i = 0; i < h.w1.size(); ++i) check(&h.w1.data()[i], g.g.w1.data()[i]);
        for (std::size_t i = 0; i < h.c1.size(); ++i) check(&h.c1[i], g.g.c1[i]);
        for (std::size_t i = 0; i < h.w2.size(); ++i) check(&h.w2.data()[i], g.g.w2.data()[i]);
        for (std::size_t i = 0; i < h.c2.size(); ++i) check(&h.c2[i], g.g.c2[i]);
        for (std::size_t i = 0; i < u.size(); ++i) check(&u[i], g.d_u[i]);
        EXPECT_LE(worst, 1e-4);
    }
}

TEST(HeadTrain, SeparableToyReachesPerfectTrainingAccuracy) {
    const std::size_t d = 8;
    std::map<std::string, Vector> emb;
    LabelSet labels;
    Rng rng(4);
    for (int i = 0; i < 12; ++i) {
        TraitBits bits{};
        for (int& b : bits) b = rng.bernoulli(0.5);
        Vector u(d, 0.0);
        for (std::size_t k = 0; k < kNumTraits; ++k) u[k] = bits[k];
        const std::string id = "p" + std::to_string(i);
        emb[id] = u;
        labels[id] = bits;
    }
    HeadConfig cfg;
    cfg.seed = 1;
    cfg.epochs = 2000;
    const HeadParams h = head_train(emb, labels, cfg);
    for (const auto& [id, bits] : labels) EXPECT_EQ(infer(h, emb.at(id)), bits) << id;
}

TEST(HeadTrain, ZeroEpochsReturnsInit) {
    std::map<std::string, Vector> emb{{"a", {0.1, 0.2}}};
    LabelSet labels{{"a", {1, 0, 1, 0, 1}}};
    HeadConfig cfg;
    cfg.epochs = 0;
    cfg.seed = 9;
    const HeadParams h = head_train(emb, labels, cfg);
    const HeadParams init = head_init(2, 9);
    EXPECT_EQ(h.w1, init.w1);
    EXPECT_EQ(h.w2, init.w2);
    EXPECT_EQ(h.c1, init.c1);
    EXPECT_EQ(h.c2, init.c2);
}

TEST(HeadTrain, DeterministicAndErrors) {
    std::map<std::string, Vector> emb{{"a", {0.1, 0.2}}, {"b", {-0.3, 0.5}}};
    LabelSet labels{{"a", {1, 0, 1, 0, 1}}, {"b", {0, 0, 1, 1, 0}}};
    HeadConfig cfg;
    cfg.epochs = 20;
    const HeadParams x = head_train(emb, labels, cfg);
    const HeadParams y = head_train(emb, labels, cfg);
    EXPECT_EQ(x.w1, y.w1);
    EXPECT_EQ(x.c2, y.c2);
    EXPECT_THROW(head_train(emb, LabelSet{}, cfg), std::invalid_argument);
    LabelSet orphan{{"zz", {0, 0, 0, 0, 0}}};
    EXPECT_THROW(head_train(emb, orphan, cfg), UnknownIndividual);
}

TEST(Infer, ThresholdAndTies) {
    EXPECT_EQ(threshold_traits(Vector(5, 0.5)), (TraitBits{1, 1, 1, 1, 1}));
    EXPECT_EQ(threshold_traits(Vector{0.9, 0.1, 0.6, 0.4, 0.5}), (TraitBits{1, 0, 1, 0, 1}));
    EXPECT_EQ(infer(HeadParams::zeros(3), Vector{1, 2, 3}), (TraitBits{1, 1, 1, 1, 1}));
    Rng rng(5);
    for (int trial = 0; trial < 50; ++trial) {
        HeadParams h = head_init(4, rng.next());
        Vector u(4);
        for (double& x : u) x = rng.uniform(-3, 3);
        for (int b : infer(h, u)) EXPECT_TRUE(b == 0 || b == 1);
    }
}
