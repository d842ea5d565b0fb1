#include <gtest/gtest.h>

#include <cmath>

#include "dyadic/rng.hpp"
#include "dyadic/seq2seq.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"

using namespace dyadic;

namespace {

Vocabulary toy_vocab(std::size_t n) {
    std::vector<std::string> toks{"<bos>", "<eos>", "<unk>"};
    for (std::size_t i = 3; i < n; ++i) toks.push_back("t" + std::to_string(i));
    return Vocabulary::from_tokens(toks);
}

Model random_model(ModelVariant v, std::size_t d, std::size_t vocab, std::uint64_t seed,
                   double scale = 0.5) {
    TrainingConfig c;
    c.dim = d;
    c.seed = seed;
    Model m = Model::create(v, c, toy_vocab(vocab), {"i", "j"});
    Rng rng(seed, "test-fill");
    auto fill = [&](std::span<double> xs) {
        for (double& x : xs) x = rng.uniform(-scale, scale);
    };
    fill(m.decoder.word_emb.data());
    m.decoder.cell.for_each([&](Weight, Matrix& w) { fill(w.data()); });
    if (m.encoder) m.encoder->for_each([&](Weight, Matrix& w) { fill(w.data()); });
    fill(m.decoder.out_proj.data());
    fill(m.decoder.out_bias);
    fill(m.persons.table().data());
    return m;
}

TrainingSample sample_for(const Model& m, const std::vector<TokenId>& msg,
                          const std::vector<TokenId>& rsp) {
    return TrainingSample{m.variant == ModelVariant::pse ? std::span<const TokenId>{}
                                                         : std::span<const TokenId>(msg),
                          rsp, 0, m.variant == ModelVariant::pce ? 1 : kNoPerson};
}

}  // namespace

TEST(Variant, StringRoundTrip) {
    for (auto v : {ModelVariant::pse, ModelVariant::pre, ModelVariant::pce}) {
        EXPECT_EQ(model_variant_from_string(to_string(v)), v);
    }
    EXPECT_THROW(model_variant_from_string("lstm"), std::invalid_argument);
}

TEST(Config, Defaults) {
    const TrainingConfig c;
    EXPECT_EQ(c.dim, 50u);
    EXPECT_EQ(c.learning_rate, 0.01);
    EXPECT_EQ(c.max_epochs, 100u);
    EXPECT_EQ(c.vocab_cap, 5000u);
    EXPECT_EQ(c.grad_clip, 5.0);
    EXPECT_EQ(c.convergence_tol, 1e-4);
}

TEST(Model, CreateShapesAndInitRange) {
    TrainingConfig c;
    c.dim = 4;
    const Model m = Model::create(ModelVariant::pce, c, toy_vocab(9), {"a", "b", "c"});
    EXPECT_EQ(m.decoder.word_emb.rows(), 9u);
    EXPECT_EQ(m.decoder.out_proj.cols(), 9u);
    EXPECT_TRUE(m.decoder.cell.has(Weight::Qz));
    ASSERT_TRUE(m.encoder.has_value());
    EXPECT_FALSE(m.encoder->has(Weight::Pz));
    EXPECT_EQ(m.persons.size(), 3u);
    for (double x : m.persons.table().data()) {
        EXPECT_GE(x, -0.08);
        EXPECT_LE(x, 0.08);
    }
    const Model pse = Model::create(ModelVariant::pse, c, toy_vocab(9), {"a"});
    EXPECT_FALSE(pse.encoder.has_value());
    EXPECT_FALSE(pse.decoder.cell.has(Weight::Qz));
}

TEST(TrainingSamples, CountsPerVariant) {
    const auto [corpus, vocab] =
        fixtures::corpus({{{"A", "x y"}, {"B", "z"}, {"A", "w"}}, {{"B", "q"}, {"B", "r"}}});
    TrainingConfig c;
    c.dim = 2;
    const Model pse = Model::create(ModelVariant::pse, c, vocab, corpus.individuals());
    EXPECT_EQ(training_samples(pse, corpus).size(), 5u);
    const Model pce = Model::create(ModelVariant::pce, c, vocab, corpus.individuals());
    const auto samples = training_samples(pce, corpus);
    ASSERT_EQ(samples.size(), 2u);
    EXPECT_EQ(samples[0].responder, pce.persons.index_of("B"));
    EXPECT_EQ(samples[0].addressee, pce.persons.index_of("A"));
}

TEST(Forward, ZeroProjectionIsExactlyLnV) {
    for (auto v : {ModelVariant::pse, ModelVariant::pre, ModelVariant::pce}) {
        Model m = random_model(v, 3, 8, 1);
        std::fill(m.decoder.out_proj.data().begin(), m.decoder.out_proj.data().end(), 0.0);
        std::fill(m.decoder.out_bias.begin(), m.decoder.out_bias.end(), 0.0);
        const std::vector<TokenId> msg{kBos, 3, 4, kEos}, rsp{kBos, 5, 6, 7, kEos};
        EXPECT_NEAR(forward_sample(m, sample_for(m, msg, rsp)).loss, std::log(8.0), 1e-12);
    }
}

TEST(Forward, MatchesReferenceRecomputation) {
    // d=2, V=5, every parameter seeded by hand-chosen arithmetic progressions.
    TrainingConfig c;
    c.dim = 2;
    Model m = Model::create(ModelVariant::pce, c, toy_vocab(5), {"i", "j"});
    double v = -0.45;
    auto next = [&] {
        v += 0.137;
        if (v > 0.5) v -= 1.0;
        return v;
    };
    for (double& x : m.decoder.word_emb.data()) x = next();
    m.decoder.cell.for_each([&](Weight, Matrix& w) {
        for (double& x : w.data()) x = next();
    });
    m.encoder->for_each([&](Weight, Matrix& w) {
        for (double& x : w.data()) x = next();
    });
    for (double& x : m.decoder.out_proj.data()) x = next();
    for (double& x : m.decoder.out_bias) x = next();
    for (double& x : m.persons.table().data()) x = next();

    const std::vector<TokenId> msg{kBos, 3, 4, kEos}, rsp{kBos, 4, 3, 3, kEos};
    const double loss = forward_sample(m, TrainingSample{msg, rsp, 0, 1}).loss;

    oracle::Vec h(2, 0.0);
    for (std::size_t t = 0; t < msg.size(); ++t) {
        const auto row = m.decoder.word_emb.row(msg[t]);
        h = oracle::reference_gate_step(*m.encoder, oracle::Vec(row.begin(), row.end()), h, {}, {});
    }
    const auto ui = m.persons.row(0), uj = m.persons.row(1);
    const double expected = oracle::reference_sequence_loss(
        m.decoder, rsp, h, oracle::Vec(ui.begin(), ui.end()), oracle::Vec(uj.begin(), uj.end()));
    EXPECT_NEAR(loss, expected, 1e-12);
}

TEST(Forward, PceWithZeroAddresseeEqualsPreBitwise) {
    Rng rng(31);
    for (int trial = 0; trial < 20; ++trial) {
        Model pce = random_model(ModelVariant::pce, 4, 7, 100 + trial);
        TrainingConfig c = pce.config;
        Model pre = Model::create(ModelVariant::pre, c, pce.vocab, {"i", "j"});
        pre.decoder.word_emb = pce.decoder.word_emb;
        pre.decoder.out_proj = pce.decoder.out_proj;
        pre.decoder.out_bias = pce.decoder.out_bias;
        pre.decoder.cell.for_each([&](Weight k, Matrix& w) { w = pce.decoder.cell[k]; });
        pre.encoder = pce.encoder;
        pre.persons = pce.persons;
        for (double& x : pce.persons.row(1)) x = 0.0;

        std::vector<TokenId> msg{kBos}, rsp{kBos};
        for (int k = 0; k < 4; ++k) msg.push_back(static_cast<TokenId>(3 + rng.index(4)));
        for (int k = 0; k < 5; ++k) rsp.push_back(static_cast<TokenId>(3 + rng.index(4)));
        msg.push_back(kEos);
        rsp.push_back(kEos);
        const double a = forward_sample(pce, TrainingSample{msg, rsp, 0, 1}).loss;
        const double b = forward_sample(pre, TrainingSample{msg, rsp, 0, kNoPerson}).loss;
        EXPECT_EQ(a, b);
    }
}

TEST(Forward, ExchangeUsesSpeakerIdentities) {
    const auto [corpus, vocab] = fixtures::alternating({"hello there", "hi", "bye now"});
    TrainingConfig c;
    c.dim = 3;
    const Model m = Model::create(ModelVariant::pce, c, vocab, corpus.individuals());
    const auto tape = forward_exchange(m, corpus.exchanges()[0]);
    EXPECT_EQ(tape.responder, m.persons.index_of("B"));
    EXPECT_EQ(tape.addressee, m.persons.index_of("A"));
    EXPECT_EQ(tape.encoder_steps.size(), corpus.exchanges()[0].message.tokens.size());
    const Model pse = Model::create(ModelVariant::pse, c, vocab, corpus.individuals());
    EXPECT_TRUE(forward_exchange(pse, corpus.exchanges()[0]).encoder_steps.empty());
}

class ModelFiniteDifference : public ::testing::TestWithParam<ModelVariant> {};

TEST_P(ModelFiniteDifference, EveryParameterMatches) {
    const ModelVariant variant = GetParam();
    Model m = random_model(variant, 3, 6, 77);
    const std::vector<TokenId> msg{kBos, 3, 5, kEos}, rsp{kBos, 4, 3, kEos};
    const TrainingSample s = sample_for(m, msg, rsp);
    const Gradients g = backward_exchange(m, forward_sample(m, s));
    auto loss = [&] { return forward_sample(m, s).loss; };

    double worst = 0.0;
    auto check = [&](double* p, double analytic) {
        worst = std::max(worst, oracle::rel_err(analytic, oracle::central_difference(loss, p)));
    };
    for (Weight k : kAllWeights) {
        if (!m.decoder.cell.has(k)) continue;
        for (std::size_t i = 0; i < m.decoder.cell[k].size(); ++i) {
            check(&m.decoder.cell[k].data()[i], g.decoder[k].data()[i]);
        }
    }
    if (m.encoder) {
        ASSERT_TRUE(g.encoder.has_value());
        for (Weight k : kAllWeights) {
            if (!m.encoder->has(k)) continue;
            for (std::size_t i = 0; i < (*m.encoder)[k].size(); ++i) {
                check(&(*m.encoder)[k].data()[i], (*g.encoder)[k].data()[i]);
            }
        }
    } else {
        EXPECT_FALSE(g.encoder.has_value());
    }
    for (std::size_t i = 0; i < m.decoder.out_proj.size(); ++i) {
        check(&m.decoder.out_proj.data()[i], g.out_proj.data()[i]);
    }
    for (std::size_t i = 0; i < m.decoder.out_bias.size(); ++i) check(&m.decoder.out_bias[i], g.out_bias[i]);
    for (TokenId t = 0; t < 6; ++t) {
        auto it = g.word_emb_rows.find(t);
        for (std::size_t c = 0; c < 3; ++c) {
            check(&m.decoder.word_emb(t, c), it == g.word_emb_rows.end() ? 0.0 : it->second[c]);
        }
    }
    for (std::size_t p = 0; p < 2; ++p) {
        auto it = g.persons.find(p);
        for (std::size_t c = 0; c < 3; ++c) {
            check(&m.persons.row(p)[c], it == g.persons.end() ? 0.0 : it->second[c]);
        }
    }
    EXPECT_LE(worst, 1e-4);
    if (variant != ModelVariant::pce) EXPECT_FALSE(g.persons.contains(1));
}

INSTANTIATE_TEST_SUITE_P(AllModels, ModelFiniteDifference,
                         ::testing::Values(ModelVariant::pse, ModelVariant::pre, ModelVariant::pce),
                         [](const auto& info) { return std::string(to_string(info.param)); });

TEST(Gradients, AccumulationIsLinear) {
    const Model m = random_model(ModelVariant::pce, 3, 6, 5);
    const std::vector<TokenId> msg{kBos, 3, kEos}, rsp{kBos, 4, 5, kEos};
    const Gradients once = backward_exchange(m, forward_sample(m, sample_for(m, msg, rsp)));
    Gradients twice = Gradients::zeros_like(m);
    twice.accumulate(once);
    twice.accumulate(once);
    for (std::size_t i = 0; i < once.out_proj.size(); ++i) {
        EXPECT_EQ(twice.out_proj.data()[i], 2.0 * once.out_proj.data()[i]);
    }
    for (Weight k : kAllWeights) {
        if (!once.encoder->has(k)) continue;
        for (std::size_t i = 0; i < (*once.encoder)[k].size(); ++i) {
            EXPECT_EQ((*twice.encoder)[k].data()[i], 2.0 * (*once.encoder)[k].data()[i]);
        }
    }
    for (const auto& [p, row] : once.persons) {
        for (std::size_t c = 0; c < row.size(); ++c) EXPECT_EQ(twice.persons.at(p)[c], 2.0 * row[c]);
    }
    EXPECT_DOUBLE_EQ(twice.global_norm(), 2.0 * once.global_norm());
}

TEST(Sgd, ZeroGradientsAndZeroRateLeaveParameters) {
    Model m = random_model(ModelVariant::pce, 3, 6, 9);
    const Model before = m;
    sgd_update(m, Gradients::zeros_like(m), 0.01);
    EXPECT_EQ(m.decoder.out_proj, before.decoder.out_proj);
    EXPECT_EQ(m.persons.table(), before.persons.table());
    const std::vector<TokenId> msg{kBos, 3, kEos}, rsp{kBos, 4, kEos};
    sgd_update(m, backward_exchange(m, forward_sample(m, sample_for(m, msg, rsp))), 0.0);
    EXPECT_EQ(m.decoder.out_proj, before.decoder.out_proj);
    EXPECT_EQ(m.decoder.word_emb, before.decoder.word_emb);
    EXPECT_TRUE(*m.encoder == *before.encoder);
}

TEST(Sgd, ScalarArithmetic) {
    Model m = random_model(ModelVariant::pse, 2, 5, 3);
    m.decoder.out_bias[2] = 1.0;
    Gradients g = Gradients::zeros_like(m);
    g.out_bias[2] = 0.5;
    sgd_update(m, g, 0.01);
    EXPECT_DOUBLE_EQ(m.decoder.out_bias[2], 0.995);
}

TEST(Sgd, ClipsGlobalNorm) {
    Model m = random_model(ModelVariant::pse, 2, 5, 3);
    m.decoder.out_bias.assign(5, 0.0);
    Gradients g = Gradients::zeros_like(m);
    g.out_bias[0] = 30.0;
    g.out_bias[1] = 40.0;  // norm 50, clipped to 5
    sgd_update(m, g, 1.0);
    EXPECT_NEAR(m.decoder.out_bias[0], -3.0, 1e-12);
    EXPECT_NEAR(m.decoder.out_bias[1], -4.0, 1e-12);
}

TEST(Sgd, OnlyTouchedEmbeddingRowsMove) {
    Model m = random_model(ModelVariant::pse, 3, 8, 4);
    const Model before = m;
    const std::vector<TokenId> rsp{kBos, 3, kEos};
    sgd_update(m, backward_exchange(m, forward_sample(m, sample_for(m, {}, rsp))), 0.1);
    for (TokenId t : {TokenId{4}, TokenId{5}, TokenId{6}, TokenId{7}, kEos}) {
        for (std::size_t c = 0; c < 3; ++c) EXPECT_EQ(m.decoder.word_emb(t, c), before.decoder.word_emb(t, c));
    }
    EXPECT_NE(m.decoder.word_emb(3, 0), before.decoder.word_emb(3, 0));
    for (std::size_t c = 0; c < 3; ++c) EXPECT_EQ(m.persons.row(1)[c], before.persons.row(1)[c]);
}

namespace {

SynthCorpus small_synth(std::uint64_t seed, double signal = 0.8) {
    SynthSpec spec;
    spec.n_individuals = 6;
    spec.n_dialogues = 8;
    spec.turns_per_dialogue = 6;
    spec.vocab_size = 40;
    spec.signal_strength = signal;
    spec.seed = seed;
    return synth_corpus(spec);
}

}  // namespace

TEST(Train, DeterministicPerSeed) {
    const auto s = small_synth(1);
    TrainingConfig c;
    c.dim = 6;
    c.max_epochs = 3;
    c.seed = 5;
    for (auto v : {ModelVariant::pse, ModelVariant::pce}) {
        const Model a = train(v, s.corpus, s.vocab, c);
        const Model b = train(v, s.corpus, s.vocab, c);
        EXPECT_EQ(a.loss_history, b.loss_history);
        EXPECT_EQ(a.persons.table(), b.persons.table());
    }
    const auto seed5 = train(ModelVariant::pce, s.corpus, s.vocab, c).loss_history;
    c.seed = 6;
    EXPECT_NE(train(ModelVariant::pce, s.corpus, s.vocab, c).loss_history, seed5);
}

TEST(Train, FirstEpochNearLnV) {
    const auto s = small_synth(2, 0.0);
    TrainingConfig c;
    c.dim = 8;
    c.max_epochs = 1;
    for (auto v : {ModelVariant::pse, ModelVariant::pre, ModelVariant::pce}) {
        const Model m = train(v, s.corpus, s.vocab, c);
        const double ln_v = std::log(static_cast<double>(s.vocab.size()));
        EXPECT_NEAR(m.loss_history[0], ln_v, 0.15 * ln_v) << to_string(v);
    }
}

TEST(Train, LossHistoryFiniteAndDecreasing) {
    const auto s = small_synth(3);
    TrainingConfig c;
    c.dim = 8;
    c.max_epochs = 10;
    c.convergence_tol = 0.0;
    const Model m = train(ModelVariant::pce, s.corpus, s.vocab, c);
    ASSERT_EQ(m.loss_history.size(), 10u);
    for (double l : m.loss_history) EXPECT_TRUE(std::isfinite(l));
    EXPECT_LT(m.loss_history.back(), m.loss_history.front());
}

TEST(Train, StopsOnConvergence) {
    const auto s = small_synth(4);
    TrainingConfig c;
    c.dim = 4;
    c.max_epochs = 50;
    c.convergence_tol = 0.5;  // any epoch improving by less than half stops training
    const Model m = train(ModelVariant::pse, s.corpus, s.vocab, c);
    EXPECT_EQ(m.loss_history.size(), 2u);
}

TEST(Train, EmptyTrainingSetThrows) {
    const auto [corpus, vocab] = fixtures::corpus({{{"A", "x"}, {"A", "y"}}});
    TrainingConfig c;
    c.dim = 2;
    EXPECT_THROW(train(ModelVariant::pce, corpus, vocab, c), std::invalid_argument);
    EXPECT_NO_THROW(train(ModelVariant::pse, corpus, vocab, c));
}

TEST(Embeddings, BeforeTrainingEqualsInit) {
    TrainingConfig c;
    c.dim = 4;
    c.seed = 12;
    const Model a = Model::create(ModelVariant::pce, c, toy_vocab(6), {"x", "y"});
    const Model b = Model::create(ModelVariant::pce, c, toy_vocab(6), {"x", "y"});
    EXPECT_EQ(get_embedding(a, "y"), get_embedding(b, "y"));
    const auto row = a.persons.row(1);
    EXPECT_EQ(get_embedding(a, "y"), Vector(row.begin(), row.end()));
    EXPECT_THROW(get_embedding(a, "nobody"), UnknownIndividual);
    EXPECT_EQ(embeddings(a).size(), 2u);
}

TEST(Embeddings, SameTraitIndividualsCloserWithFullSignal) {
    int wins = 0;
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        SynthSpec spec;
        spec.n_individuals = 8;
        spec.n_dialogues = 40;
        spec.turns_per_dialogue = 8;
        spec.vocab_size = 40;
        spec.signal_strength = 1.0;
        spec.seed = seed;
        const auto s = synth_corpus(spec);
        TrainingConfig c;
        c.dim = 10;
        c.max_epochs = 30;
        c.learning_rate = 0.05;
        c.seed = seed;
        const Model m = train(ModelVariant::pse, s.corpus, s.vocab, c);
        const auto emb = embeddings(m);
        double within = 0.0, between = 0.0;
        std::size_t nw = 0, nb = 0;
        for (const auto& [a, ea] : emb) {
            for (const auto& [b, eb] : emb) {
                if (a >= b) continue;
                const double dist = euclidean_distance(ea, eb);
                for (std::size_t t = 0; t < kNumTraits; ++t) {
                    if (s.labels.at(a)[t] == s.labels.at(b)[t]) {
                        within += dist;
                        ++nw;
                    } else {
                        between += dist;
                        ++nb;
                    }
                }
            }
        }
        wins += nw && nb && within / static_cast<double>(nw) < between / static_cast<double>(nb);
    }
    EXPECT_EQ(wins, 5);
}
