#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "dyadic/baselines.hpp"
#include "dyadic/rng.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"

using namespace dyadic;

TEST(Pearson, Examples) {
    EXPECT_NEAR(pearson(Vector{1, 2, 3}, Vector{1, 2, 3}), 1.0, 1e-12);
    EXPECT_NEAR(pearson(Vector{1, 2, 3}, Vector{-1, -2, -3}), -1.0, 1e-12);
    // sxy = 5, sxx = 2, syy = 38/3
    EXPECT_NEAR(pearson(Vector{1, 2, 3}, Vector{2, 4, 7}), 5.0 / std::sqrt(2.0 * 38.0 / 3.0), 1e-12);
    EXPECT_NEAR(pearson(Vector{1, 2, 3}, Vector{2, 4, 7}), 0.9934, 1e-4);
}

TEST(Pearson, ZeroVarianceAndErrors) {
    EXPECT_EQ(pearson(Vector{2, 2, 2}, Vector{1, 5, 3}), 0.0);
    EXPECT_THROW(pearson(Vector{1, 2}, Vector{1, 2, 3}), std::invalid_argument);
    EXPECT_THROW(pearson(Vector{1}, Vector{1}), std::invalid_argument);
}

TEST(Pearson, SymmetricAndMatchesTextbookFormula) {
    Rng rng(1);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t n = 2 + rng.index(20);
        Vector x(n), y(n);
        for (auto& v : x) v = rng.uniform(-5, 5);
        for (auto& v : y) v = rng.uniform(-5, 5);
        const double r = pearson(x, y);
        EXPECT_NEAR(r, pearson(y, x), 1e-12);
        EXPECT_NEAR(r, oracle::pearson_textbook(x, y), 1e-9);
        EXPECT_GE(r, -1.0);
        EXPECT_LE(r, 1.0);
    }
}

namespace {

// Five speakers each talk to a listener; the listener is unlabeled.
std::pair<Corpus, Vocabulary> five_speaker_corpus() {
    return fixtures::corpus({
        {{"p1", "alpha alpha beta"}, {"zz", "ok"}, {"p1", "gamma"}},
        {{"p2", "beta delta"}, {"zz", "ok"}, {"p2", "delta delta"}},
        {{"p3", "alpha gamma gamma"}, {"zz", "ok"}},
        {{"p4", "epsilon beta"}, {"zz", "ok"}, {"p4", "alpha"}},
        {{"p5", "delta epsilon epsilon"}, {"zz", "hmm"}},
    });
}

LabelSet five_labels() {
    return {{"p1", {1, 0, 1, 0, 1}},
            {"p2", {0, 1, 1, 0, 0}},
            {"p3", {1, 1, 0, 0, 1}},
            {"p4", {0, 0, 0, 1, 1}},
            {"p5", {1, 0, 0, 1, 0}}};
}

}  // namespace

TEST(SelectWords, MatchesBruteForceScoreTable) {
    const auto [corpus, vocab] = five_speaker_corpus();
    const LabelSet labels = five_labels();

    // independent scoring: count every token by hand from the dialogue text
    std::vector<std::pair<double, TokenId>> table;
    for (TokenId w = kUnk; w < vocab.size(); ++w) {
        std::vector<double> counts;
        bool used = false;
        for (const auto& [id, bits] : labels) {
            double c = 0;
            for (const auto& dlg : corpus.dialogues()) {
                for (const auto& turn : dlg.turns) {
                    if (turn.speaker != id) continue;
                    c += static_cast<double>(std::count(turn.tokens.begin(), turn.tokens.end(), w));
                }
            }
            used = used || c > 0;
            counts.push_back(c);
        }
        if (!used) continue;
        double best = 0.0;
        for (std::size_t t = 0; t < kNumTraits; ++t) {
            std::vector<double> y;
            for (const auto& [id, bits] : labels) y.push_back(bits[t]);
            best = std::max(best, std::abs(oracle::pearson_textbook(counts, y)));
        }
        table.emplace_back(best, w);
    }
    std::sort(table.begin(), table.end(), [](const auto& a, const auto& b) {
        return a.first != b.first ? a.first > b.first : a.second < b.second;
    });
    for (std::size_t k : {std::size_t{1}, std::size_t{3}, std::size_t{300}}) {
        std::vector<TokenId> expected;
        for (std::size_t i = 0; i < std::min(k, table.size()); ++i) expected.push_back(table[i].second);
        EXPECT_EQ(select_words(corpus, labels, vocab.size(), k), expected) << "k=" << k;
    }
}

TEST(SelectWords, PerfectAndZeroCorrelation) {
    const auto [corpus, vocab] = fixtures::corpus({
        {{"a", "sig same"}, {"x", "q"}},
        {{"b", "same"}, {"x", "q"}},
        {{"c", "sig same"}, {"x", "q"}},
        {{"d", "same"}, {"x", "q"}},
    });
    const LabelSet labels{{"a", {1, 0, 0, 0, 0}},
                          {"b", {0, 0, 0, 0, 0}},
                          {"c", {1, 0, 0, 0, 0}},
                          {"d", {0, 0, 0, 0, 0}}};
    const auto words = select_words(corpus, labels, vocab.size(), 2);
    ASSERT_EQ(words.size(), 2u);
    EXPECT_EQ(words[0], vocab.id("sig"));
    const std::vector<double> same{1, 1, 1, 1};
    EXPECT_EQ(pearson(same, std::vector<double>{1, 0, 1, 0}), 0.0);
}

TEST(SelectWords, Errors) {
    const auto [corpus, vocab] = five_speaker_corpus();
    EXPECT_THROW(select_words(corpus, LabelSet{}, vocab.size()), std::invalid_argument);
}

TEST(SelectWords, IndependentOfDialogueOrder) {
    auto [corpus, vocab] = five_speaker_corpus();
    std::vector<Dialogue> reversed = corpus.dialogues();
    std::reverse(reversed.begin(), reversed.end());
    const Corpus other(reversed);
    EXPECT_EQ(select_words(corpus, five_labels(), vocab.size()),
              select_words(other, five_labels(), vocab.size()));
}

TEST(BowFeatures, HandCounts) {
    const auto [corpus, vocab] = five_speaker_corpus();
    const std::vector<TokenId> words{vocab.id("alpha"), vocab.id("gamma"), vocab.id("delta")};
    // p1 said "alpha alpha beta" and "gamma": 2 utterances
    EXPECT_EQ(bow_features(corpus, "p1", words), (Vector{1.0, 0.5, 0.0}));
    EXPECT_EQ(bow_features(corpus, "zz", words), (Vector{0, 0, 0}));
    EXPECT_THROW(bow_features(corpus, "nobody", words), UnknownIndividual);
}

TEST(BowFeatures, DoublingUtterancesLeavesFeatures) {
    const auto [once, v1] = fixtures::corpus({{{"a", "x y x"}, {"b", "z"}, {"a", "y"}}});
    const auto [twice, v2] = fixtures::corpus(
        {{{"a", "x y x"}, {"b", "z"}, {"a", "y"}}, {{"a", "x y x"}, {"b", "z"}, {"a", "y"}}});
    const std::vector<TokenId> w1{v1.id("x"), v1.id("y")}, w2{v2.id("x"), v2.id("y")};
    EXPECT_EQ(bow_features(once, "a", w1), bow_features(twice, "a", w2));
}

TEST(BowFeatures, OtherSpeakersDoNotMatter) {
    const auto [full, vocab] = fixtures::corpus({{{"a", "x y"}, {"b", "x x x"}}, {{"c", "y"}, {"a", "x"}}});
    std::vector<Dialogue> trimmed = full.dialogues();
    for (auto& d : trimmed) {
        std::erase_if(d.turns, [](const Turn& t) { return t.speaker != "a"; });
    }
    const Corpus only_a(trimmed);
    const std::vector<TokenId> words{vocab.id("x"), vocab.id("y")};
    EXPECT_EQ(bow_features(full, "a", words), bow_features(only_a, "a", words));
}

TEST(BowTrain, SeparableToyIsFit) {
    std::map<std::string, Vector> feats;
    LabelSet labels;
    Rng rng(7);
    for (int i = 0; i < 10; ++i) {
        TraitBits bits{};
        for (int& b : bits) b = rng.bernoulli(0.5);
        Vector f(6, 0.0);
        for (std::size_t k = 0; k < kNumTraits; ++k) f[k] = bits[k] ? 1.0 : -1.0;
        f[5] = rng.uniform(-1, 1);
        feats["i" + std::to_string(i)] = f;
        labels["i" + std::to_string(i)] = bits;
    }
    std::vector<TokenId> words{3, 4, 5, 6, 7, 8};
    for (bool standardize : {false, true}) {
        BowConfig cfg;
        cfg.standardize = standardize;
        const BowModel m = bow_train(feats, labels, words, cfg);
        for (const auto& [id, bits] : labels) EXPECT_EQ(bow_infer(m, feats.at(id)), bits);
    }
}

TEST(BowTrain, ZeroFeaturesGiveConstantPredictions) {
    std::map<std::string, Vector> feats{{"a", Vector(3, 0.0)}, {"b", Vector(3, 0.0)}, {"c", Vector(3, 0.0)}};
    LabelSet labels{{"a", {1, 0, 1, 0, 1}}, {"b", {1, 1, 0, 0, 1}}, {"c", {0, 0, 1, 0, 1}}};
    const BowModel m = bow_train(feats, labels, {3, 4, 5});
    const TraitBits p = bow_infer(m, Vector(3, 0.0));
    EXPECT_EQ(p, (TraitBits{1, 0, 1, 0, 1}));
    for (const auto& [id, f] : feats) EXPECT_EQ(bow_infer(m, f), p);
    for (double w : m.weights.data()) EXPECT_EQ(w, 0.0);
}

TEST(BowTrain, DeterministicAndErrors) {
    const auto [corpus, vocab] = five_speaker_corpus();
    const BowModel a = bow_fit(corpus, five_labels(), vocab.size());
    const BowModel b = bow_fit(corpus, five_labels(), vocab.size());
    EXPECT_EQ(a.weights, b.weights);
    EXPECT_EQ(a.bias, b.bias);
    EXPECT_THROW(bow_train({}, LabelSet{}, {}), std::invalid_argument);
}
