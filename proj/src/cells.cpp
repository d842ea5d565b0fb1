#include "dyadic/cells.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "dyadic/rng.hpp"

namespace dyadic {

std::string_view to_string(CellVariant v) {
    switch (v) {
        case CellVariant::rnn: return "rnn";
        case CellVariant::gru: return "gru";
        case CellVariant::pse: return "pse";
        case CellVariant::pce: return "pce";
    }
    return "?";
}

CellVariant cell_variant_from_string(std::string_view name) {
    if (name == "rnn") return CellVariant::rnn;
    if (name == "gru") return CellVariant::gru;
    if (name == "pse") return CellVariant::pse;
    if (name == "pce") return CellVariant::pce;
    throw std::invalid_argument("unknown cell variant '" + std::string(name) + "'");
}

std::string_view weight_name(Weight w) {
    static constexpr std::array<std::string_view, kWeightCount> names = {
        "M", "N", "Mz", "Mr", "Mh", "Nz", "Nr", "Nh", "Pz", "Pr", "Ph", "Qz", "Qr", "Qh"};
    return names[static_cast<std::size_t>(w)];
}

bool uses_weight(CellVariant variant, Weight w) {
    const auto k = static_cast<std::size_t>(w);
    switch (variant) {
        case CellVariant::rnn: return k <= 1;
        case CellVariant::gru: return k >= 2 && k <= 7;
        case CellVariant::pse: return k >= 2 && k <= 10;
        case CellVariant::pce: return k >= 2;
    }
    return false;
}

RecurrentWeights RecurrentWeights::zeros(CellVariant variant, std::size_t dim) {
    RecurrentWeights out;
    out.variant = variant;
    out.dim = dim;
    for (Weight k : kAllWeights) {
        if (uses_weight(variant, k)) out[k] = Matrix(dim, dim);
    }
    return out;
}

CellParams CellParams::zeros(CellVariant variant, std::size_t dim, std::size_t vocab) {
    return CellParams{RecurrentWeights::zeros(variant, dim), Matrix(vocab, dim), Matrix(dim, vocab),
                      Vector(vocab, 0.0)};
}

namespace {

void fill_uniform(Matrix& m, Rng& rng, double scale) {
    for (double& x : m.data()) x = rng.uniform(-scale, scale);
}

void require(bool ok, const std::string& what) {
    if (!ok) throw ShapeError(what);
}

void require_weights(const RecurrentWeights& w, std::initializer_list<Weight> needed,
                     const char* op) {
    for (Weight k : needed) {
        require(w.has(k), std::string(op) + ": cell weights lack " + std::string(weight_name(k)) +
                              " (variant " + std::string(to_string(w.variant)) + ")");
    }
}

void require_dim(std::span<const double> v, std::size_t dim, const char* what) {
    require(v.size() == dim, std::string(what) + ": expected dimension " + std::to_string(dim) +
                                 ", got " + std::to_string(v.size()));
}

}  // namespace

void init_uniform(RecurrentWeights& weights, Rng& rng, double scale) {
    weights.for_each([&](Weight, Matrix& m) { fill_uniform(m, rng, scale); });
}

void init_uniform(CellParams& params, Rng& rng, double scale) {
    fill_uniform(params.word_emb, rng, scale);
    init_uniform(params.cell, rng, scale);
    fill_uniform(params.out_proj, rng, scale);
}

// ---------------------------------------------------------------------------------------------
// Forward steps

StepRecord cell_step(CellVariant kind, const RecurrentWeights& w, std::span<const double> x,
                     std::span<const double> h_prev, std::span<const double> u_i,
                     std::span<const double> u_j) {
    const std::size_t d = w.dim;
    require_dim(x, d, "cell step input");
    require_dim(h_prev, d, "cell step previous state");

    StepRecord rec;
    rec.kind = kind;
    rec.x.assign(x.begin(), x.end());
    rec.h_prev.assign(h_prev.begin(), h_prev.end());

    if (kind == CellVariant::rnn) {
        require_weights(w, {Weight::M, Weight::N}, "rnn_step");
        Vector a(d, 0.0);
        vecmat_accumulate(x, w[Weight::M], a);
        vecmat_accumulate(h_prev, w[Weight::N], a);
        rec.h = tanh_map(a);
        return rec;
    }

    require_weights(w, {Weight::Mz, Weight::Mr, Weight::Mh, Weight::Nz, Weight::Nr, Weight::Nh},
                    "gru_step");
    const bool with_speaker = kind == CellVariant::pse || kind == CellVariant::pce;
    const bool with_addressee = kind == CellVariant::pce;
    if (with_speaker) {
        require_weights(w, {Weight::Pz, Weight::Pr, Weight::Ph}, "pse_step");
        require_dim(u_i, d, "speaker embedding");
    }
    if (with_addressee) {
        require_weights(w, {Weight::Qz, Weight::Qr, Weight::Qh}, "pce_step");
        require_dim(u_j, d, "addressee embedding");
    }

    Vector az(d, 0.0), ar(d, 0.0), ah(d, 0.0);
    vecmat_accumulate(x, w[Weight::Mz], az);
    vecmat_accumulate(h_prev, w[Weight::Nz], az);
    vecmat_accumulate(x, w[Weight::Mr], ar);
    vecmat_accumulate(h_prev, w[Weight::Nr], ar);
    vecmat_accumulate(x, w[Weight::Mh], ah);
    if (with_speaker) {
        vecmat_accumulate(u_i, w[Weight::Pz], az);
        vecmat_accumulate(u_i, w[Weight::Pr], ar);
        vecmat_accumulate(u_i, w[Weight::Ph], ah);
    }
    if (with_addressee) {
        vecmat_accumulate(u_j, w[Weight::Qz], az);
        vecmat_accumulate(u_j, w[Weight::Qr], ar);
        vecmat_accumulate(u_j, w[Weight::Qh], ah);
    }
    rec.z = sigmoid(az);
    rec.r = sigmoid(ar);
    rec.rh = elementwise(h_prev, rec.r, ElementwiseOp::mul);
    vecmat_accumulate(rec.rh, w[Weight::Nh], ah);
    rec.h_cand = tanh_map(ah);

    rec.h.resize(d);
    for (std::size_t k = 0; k < d; ++k) {
        rec.h[k] = (1.0 - rec.z[k]) * h_prev[k] + rec.z[k] * rec.h_cand[k];
    }
    return rec;
}

StepRecord rnn_step(const RecurrentWeights& w, std::span<const double> x,
                    std::span<const double> h_prev) {
    return cell_step(CellVariant::rnn, w, x, h_prev, {}, {});
}

StepRecord gru_step(const RecurrentWeights& w, std::span<const double> x,
                    std::span<const double> h_prev) {
    return cell_step(CellVariant::gru, w, x, h_prev, {}, {});
}

StepRecord pse_step(const RecurrentWeights& w, std::span<const double> x,
                    std::span<const double> h_prev, std::span<const double> u_i) {
    return cell_step(CellVariant::pse, w, x, h_prev, u_i, {});
}

StepRecord pce_step(const RecurrentWeights& w, std::span<const double> x,
                    std::span<const double> h_prev, std::span<const double> u_i,
                    std::span<const double> u_j) {
    return cell_step(CellVariant::pce, w, x, h_prev, u_i, u_j);
}

// ---------------------------------------------------------------------------------------------
// Backward step

StepGrads step_backward(const RecurrentWeights& w, const StepRecord& rec,
                        std::span<const double> u_i, std::span<const double> u_j,
                        std::span<const double> d_h, RecurrentWeights& grads,
                        std::span<double> d_u_i, std::span<double> d_u_j) {
    const std::size_t d = w.dim;
    require_dim(d_h, d, "step_backward d_h");
    StepGrads out{Vector(d, 0.0), Vector(d, 0.0)};

    if (rec.kind == CellVariant::rnn) {
        Vector da(d);
        for (std::size_t k = 0; k < d; ++k) da[k] = d_h[k] * (1.0 - rec.h[k] * rec.h[k]);
        add_outer(grads[Weight::M], rec.x, da);
        add_outer(grads[Weight::N], rec.h_prev, da);
        matvec_accumulate(w[Weight::M], da, out.d_x);
        matvec_accumulate(w[Weight::N], da, out.d_h_prev);
        return out;
    }

    const bool with_speaker = rec.kind == CellVariant::pse || rec.kind == CellVariant::pce;
    const bool with_addressee = rec.kind == CellVariant::pce;

    // h = (1 - z) h_prev + z h_cand
    Vector dz(d), da_h(d);
    for (std::size_t k = 0; k < d; ++k) {
        dz[k] = d_h[k] * (rec.h_cand[k] - rec.h_prev[k]);
        out.d_h_prev[k] = d_h[k] * (1.0 - rec.z[k]);
        const double d_cand = d_h[k] * rec.z[k];
        da_h[k] = d_cand * (1.0 - rec.h_cand[k] * rec.h_cand[k]);
    }

    // candidate pre-activation: x Mh + (h_prev * r) Nh [+ u_i Ph] [+ u_j Qh]
    add_outer(grads[Weight::Mh], rec.x, da_h);
    add_outer(grads[Weight::Nh], rec.rh, da_h);
    matvec_accumulate(w[Weight::Mh], da_h, out.d_x);
    Vector d_rh(d, 0.0);
    matvec_accumulate(w[Weight::Nh], da_h, d_rh);

    Vector da_z(d), da_r(d);
    for (std::size_t k = 0; k < d; ++k) {
        out.d_h_prev[k] += d_rh[k] * rec.r[k];
        const double dr = d_rh[k] * rec.h_prev[k];
        da_r[k] = dr * rec.r[k] * (1.0 - rec.r[k]);
        da_z[k] = dz[k] * rec.z[k] * (1.0 - rec.z[k]);
    }

    add_outer(grads[Weight::Mz], rec.x, da_z);
    add_outer(grads[Weight::Nz], rec.h_prev, da_z);
    add_outer(grads[Weight::Mr], rec.x, da_r);
    add_outer(grads[Weight::Nr], rec.h_prev, da_r);
    matvec_accumulate(w[Weight::Mz], da_z, out.d_x);
    matvec_accumulate(w[Weight::Mr], da_r, out.d_x);
    matvec_accumulate(w[Weight::Nz], da_z, out.d_h_prev);
    matvec_accumulate(w[Weight::Nr], da_r, out.d_h_prev);

    if (with_speaker) {
        add_outer(grads[Weight::Pz], u_i, da_z);
        add_outer(grads[Weight::Pr], u_i, da_r);
        add_outer(grads[Weight::Ph], u_i, da_h);
        matvec_accumulate(w[Weight::Pz], da_z, d_u_i);
        matvec_accumulate(w[Weight::Pr], da_r, d_u_i);
        matvec_accumulate(w[Weight::Ph], da_h, d_u_i);
    }
    if (with_addressee) {
        add_outer(grads[Weight::Qz], u_j, da_z);
        add_outer(grads[Weight::Qr], u_j, da_r);
        add_outer(grads[Weight::Qh], u_j, da_h);
        matvec_accumulate(w[Weight::Qz], da_z, d_u_j);
        matvec_accumulate(w[Weight::Qr], da_r, d_u_j);
        matvec_accumulate(w[Weight::Qh], da_h, d_u_j);
    }
    return out;
}

// ---------------------------------------------------------------------------------------------
// Sequences

Vector project_logits(const CellParams& params, std::span<const double> h) {
    require(params.out_bias.size() == params.out_proj.cols(),
            "project_logits: out_bias " + std::to_string(params.out_bias.size()) +
                " does not match out_proj " + params.out_proj.shape_string());
    Vector logits = params.out_bias;
    vecmat_accumulate(h, params.out_proj, logits);
    return logits;
}

SequenceTape run_sequence(const CellParams& params, std::span<const TokenId> tokens,
                          std::span<const double> u_i, std::span<const double> u_j,
                          std::span<const double> h0) {
    const std::size_t d = params.dim();
    require(tokens.size() >= 2, "run_sequence: need at least two tokens");
    SequenceTape tape;
    tape.kind = params.cell.variant;
    tape.tokens.assign(tokens.begin(), tokens.end());
    tape.u_i.assign(u_i.begin(), u_i.end());
    tape.u_j.assign(u_j.begin(), u_j.end());
    if (h0.empty()) {
        tape.h0.assign(d, 0.0);
    } else {
        tape.h0.assign(h0.begin(), h0.end());
    }

    const std::size_t n = tokens.size() - 1;
    tape.steps.reserve(n);
    tape.probs.reserve(n);
    double total = 0.0;
    std::span<const double> h = tape.h0;
    for (std::size_t t = 0; t < n; ++t) {
        if (tokens[t] >= params.vocab() || tokens[t + 1] >= params.vocab()) {
            throw std::out_of_range("run_sequence: token id outside vocabulary");
        }
        tape.steps.push_back(
            cell_step(tape.kind, params.cell, params.word_emb.row(tokens[t]), h, u_i, u_j));
        h = tape.steps.back().h;
        tape.probs.push_back(softmax(project_logits(params, h)));
        total += cross_entropy(tape.probs.back(), tokens[t + 1]);
    }
    tape.loss = total / static_cast<double>(n);
    return tape;
}

std::vector<Vector> loss_logit_grads(const SequenceTape& tape) {
    const double scale = 1.0 / static_cast<double>(tape.size());
    std::vector<Vector> out;
    out.reserve(tape.size());
    for (std::size_t t = 0; t < tape.size(); ++t) {
        Vector g = tape.probs[t];
        g[tape.tokens[t + 1]] -= 1.0;
        for (double& v : g) v *= scale;
        out.push_back(std::move(g));
    }
    return out;
}

CellGrads CellGrads::zeros_like(const CellParams& params, CellVariant kind) {
    CellGrads g;
    g.cell = RecurrentWeights::zeros(params.cell.variant, params.dim());
    g.out_proj = Matrix(params.out_proj.rows(), params.out_proj.cols());
    g.out_bias.assign(params.out_bias.size(), 0.0);
    if (kind == CellVariant::pse || kind == CellVariant::pce) g.d_u_i.assign(params.dim(), 0.0);
    if (kind == CellVariant::pce) g.d_u_j.assign(params.dim(), 0.0);
    g.d_h0.assign(params.dim(), 0.0);
    return g;
}

void accumulate_word_row(std::map<TokenId, Vector>& rows, TokenId token,
                         std::span<const double> grad) {
    auto [it, inserted] = rows.try_emplace(token, grad.begin(), grad.end());
    if (!inserted) axpy(1.0, grad, it->second);
}

CellGrads cell_backward(const CellParams& params, const SequenceTape& tape,
                        std::span<const double> d_h_final, std::span<const Vector> d_logits) {
    const std::size_t d = params.dim();
    if (tape.kind != params.cell.variant) {
        throw std::invalid_argument("cell_backward: tape variant " +
                                    std::string(to_string(tape.kind)) +
                                    " does not match params variant " +
                                    std::string(to_string(params.cell.variant)));
    }
    require(d_logits.size() == tape.size(), "cell_backward: one logit gradient per step required");

    CellGrads g = CellGrads::zeros_like(params, tape.kind);
    Vector d_h(d, 0.0);
    if (!d_h_final.empty()) {
        require_dim(d_h_final, d, "cell_backward d_h_final");
        d_h.assign(d_h_final.begin(), d_h_final.end());
    }

    for (std::size_t t = tape.size(); t-- > 0;) {
        const StepRecord& rec = tape.steps[t];
        add_outer(g.out_proj, rec.h, d_logits[t]);
        axpy(1.0, d_logits[t], g.out_bias);
        matvec_accumulate(params.out_proj, d_logits[t], d_h);

        StepGrads sg = step_backward(params.cell, rec, tape.u_i, tape.u_j, d_h, g.cell, g.d_u_i,
                                     g.d_u_j);
        accumulate_word_row(g.word_emb_rows, tape.tokens[t], sg.d_x);
        d_h = std::move(sg.d_h_prev);
    }
    g.d_h0 = std::move(d_h);
    return g;
}

}  // namespace dyadic
