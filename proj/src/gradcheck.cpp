#include "dyadic/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "dyadic/personality.hpp"
#include "dyadic/rng.hpp"

namespace dyadic {

double relative_error(double analytic, double numeric, double floor) {
    const double denom = std::max({std::abs(analytic), std::abs(numeric), floor});
    return std::abs(analytic - numeric) / denom;
}

namespace {

struct Group {
    std::string name;
    std::span<double> params;
    std::vector<double> analytic;
};

template <class LossFn>
void compare_group(const Group& group, LossFn&& loss, GradcheckResult& result) {
    double worst = 0.0;
    for (std::size_t i = 0; i < group.params.size(); ++i) {
        double& p = group.params[i];
        const double saved = p;
        p = saved + kGradcheckEpsilon;
        const double up = loss();
        p = saved - kGradcheckEpsilon;
        const double down = loss();
        p = saved;
        const double numeric = (up - down) / (2.0 * kGradcheckEpsilon);
        worst = std::max(worst, relative_error(group.analytic[i], numeric));
    }
    result.max_rel_error[group.name] = worst;
    result.worst = std::max(result.worst, worst);
}

Vocabulary toy_vocab(std::size_t size) {
    std::vector<std::string> tokens = {"<bos>", "<eos>", "<unk>"};
    for (std::size_t i = 3; i < size; ++i) tokens.push_back("t" + std::to_string(i));
    return Vocabulary::from_tokens(std::move(tokens));
}

std::vector<TokenId> random_sentence(Rng& rng, std::size_t length, std::size_t vocab) {
    std::vector<TokenId> out{kBos};
    while (out.size() + 1 < length) out.push_back(static_cast<TokenId>(3 + rng.index(vocab - 3)));
    out.push_back(kEos);
    return out;
}

void fill(std::span<double> xs, Rng& rng, double scale) {
    for (double& x : xs) x = rng.uniform(-scale, scale);
}

std::vector<double> dense_rows(const std::map<TokenId, Vector>& rows, std::size_t vocab,
                               std::size_t dim) {
    std::vector<double> out(vocab * dim, 0.0);
    for (const auto& [tok, row] : rows) std::copy(row.begin(), row.end(), out.begin() + tok * dim);
    return out;
}

}  // namespace

GradcheckResult gradcheck_model(ModelVariant variant, const GradcheckOptions& options,
                                const GradientFault& fault) {
    TrainingConfig config;
    config.dim = options.dim;
    config.seed = options.seed;
    Model model = Model::create(variant, config, toy_vocab(options.vocab), {"i", "j"});

    Rng rng(options.seed, "gradcheck");
    fill(model.decoder.word_emb.data(), rng, options.init_scale);
    model.decoder.cell.for_each([&](Weight, Matrix& m) { fill(m.data(), rng, options.init_scale); });
    if (model.encoder) {
        model.encoder->for_each([&](Weight, Matrix& m) { fill(m.data(), rng, options.init_scale); });
    }
    fill(model.decoder.out_proj.data(), rng, options.init_scale);
    fill(model.decoder.out_bias, rng, options.init_scale);
    fill(model.persons.table().data(), rng, options.init_scale);

    const auto message = random_sentence(rng, options.message_length, options.vocab);
    const auto response = random_sentence(rng, options.response_length, options.vocab);
    const TrainingSample sample{variant == ModelVariant::pse ? std::span<const TokenId>{}
                                                             : std::span<const TokenId>(message),
                                response, 0, variant == ModelVariant::pce ? 1 : kNoPerson};

    Gradients grads = backward_exchange(model, forward_sample(model, sample));
    if (fault) fault(grads);

    const std::size_t d = options.dim;
    std::vector<Group> groups;
    groups.push_back({"word_emb", model.decoder.word_emb.data(),
                      dense_rows(grads.word_emb_rows, options.vocab, d)});
    groups.push_back({"out_proj", model.decoder.out_proj.data(), grads.out_proj.data()});
    groups.push_back({"out_bias", model.decoder.out_bias, grads.out_bias});
    model.decoder.cell.for_each([&](Weight k, Matrix& m) {
        groups.push_back({"decoder." + std::string(weight_name(k)), m.data(), grads.decoder[k].data()});
    });
    if (model.encoder) {
        model.encoder->for_each([&](Weight k, Matrix& m) {
            groups.push_back(
                {"encoder." + std::string(weight_name(k)), m.data(), (*grads.encoder)[k].data()});
        });
    }
    for (std::size_t p = 0; p < model.persons.size(); ++p) {
        auto it = grads.persons.find(p);
        std::vector<double> analytic = it == grads.persons.end() ? std::vector<double>(d, 0.0)
                                                                 : it->second;
        groups.push_back({p == 0 ? "u_i" : "u_j", model.persons.row(p), std::move(analytic)});
    }

    GradcheckResult result;
    auto loss = [&] { return forward_sample(model, sample).loss; };
    for (const auto& g : groups) compare_group(g, loss, result);
    return result;
}

GradcheckResult gradcheck_cell(CellVariant variant, const GradcheckOptions& options) {
    const std::size_t d = options.dim;
    CellParams params = CellParams::zeros(variant, d, options.vocab);
    Rng rng(options.seed, "gradcheck-cell");
    fill(params.word_emb.data(), rng, options.init_scale);
    params.cell.for_each([&](Weight, Matrix& m) { fill(m.data(), rng, options.init_scale); });
    fill(params.out_proj.data(), rng, options.init_scale);
    fill(params.out_bias, rng, options.init_scale);
    Vector u_i(d), u_j(d), h0(d);
    fill(u_i, rng, options.init_scale);
    fill(u_j, rng, options.init_scale);
    fill(h0, rng, options.init_scale);
    const auto tokens = random_sentence(rng, options.response_length + 1, options.vocab);

    const auto tape = run_sequence(params, tokens, u_i, u_j, h0);
    const auto grads = cell_backward(params, tape, {}, loss_logit_grads(tape));

    std::vector<Group> groups;
    groups.push_back({"word_emb", params.word_emb.data(),
                      dense_rows(grads.word_emb_rows, options.vocab, d)});
    groups.push_back({"out_proj", params.out_proj.data(), grads.out_proj.data()});
    groups.push_back({"out_bias", params.out_bias, grads.out_bias});
    params.cell.for_each([&](Weight k, Matrix& m) {
        groups.push_back({std::string(weight_name(k)), m.data(), grads.cell[k].data()});
    });
    if (!grads.d_u_i.empty()) groups.push_back({"u_i", u_i, grads.d_u_i});
    if (!grads.d_u_j.empty()) groups.push_back({"u_j", u_j, grads.d_u_j});
    groups.push_back({"h0", h0, grads.d_h0});

    GradcheckResult result;
    auto loss = [&] { return run_sequence(params, tokens, u_i, u_j, h0).loss; };
    for (const auto& g : groups) compare_group(g, loss, result);
    return result;
}

GradcheckResult gradcheck_head(const GradcheckOptions& options) {
    const std::size_t d = options.dim;
    HeadParams head = HeadParams::zeros(d);
    Rng rng(options.seed, "gradcheck-head");
    const double scale = std::max(options.init_scale, 1.0);
    fill(head.w1.data(), rng, scale);
    fill(head.c1, rng, scale);
    fill(head.w2.data(), rng, scale);
    fill(head.c2, rng, scale);
    Vector u(d);
    fill(u, rng, scale);
    TraitBits labels{};
    for (int& b : labels) b = rng.bernoulli(0.5) ? 1 : 0;

    const auto grads = head_backward(head, u, labels);
    std::vector<Group> groups{{"W1", head.w1.data(), grads.g.w1.data()},
                              {"c1", head.c1, grads.g.c1},
                              {"W2", head.w2.data(), grads.g.w2.data()},
                              {"c2", head.c2, grads.g.c2},
                              {"u", u, grads.d_u}};
    GradcheckResult result;
    auto loss = [&] { return head_loss(head, u, labels); };
    for (const auto& g : groups) compare_group(g, loss, result);
    return result;
}

}  // namespace dyadic
