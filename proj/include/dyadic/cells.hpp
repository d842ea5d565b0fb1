#pragma once

#include <array>
#include <map>
#include <span>
#include <string_view>
#include <vector>

#include "dyadic/corpus.hpp"
#include "dyadic/tensor.hpp"

namespace dyadic {

class Rng;

/// Recurrent cell formulations:
///   rnn  h = tanh(w M + h' N)
///   gru  standard gated update, no biases
///   pse  gru with u_i P added to each gate / candidate pre-activation
///   pce  pse with u_j Q added as well
enum class CellVariant { rnn, gru, pse, pce };

std::string_view to_string(CellVariant v);
CellVariant cell_variant_from_string(std::string_view name);

enum class Weight : std::size_t { M, N, Mz, Mr, Mh, Nz, Nr, Nh, Pz, Pr, Ph, Qz, Qr, Qh };
inline constexpr std::size_t kWeightCount = 14;
inline constexpr std::array<Weight, kWeightCount> kAllWeights = {
    Weight::M,  Weight::N,  Weight::Mz, Weight::Mr, Weight::Mh, Weight::Nz, Weight::Nr,
    Weight::Nh, Weight::Pz, Weight::Pr, Weight::Ph, Weight::Qz, Weight::Qr, Weight::Qh};

std::string_view weight_name(Weight w);
bool uses_weight(CellVariant variant, Weight w);

/// The d x d transition matrices of one cell. Matrices the variant does not use stay empty.
struct RecurrentWeights {
    CellVariant variant = CellVariant::gru;
    std::size_t dim = 0;
    std::array<Matrix, kWeightCount> w;

    static RecurrentWeights zeros(CellVariant variant, std::size_t dim);

    Matrix& operator[](Weight k) { return w[static_cast<std::size_t>(k)]; }
    const Matrix& operator[](Weight k) const { return w[static_cast<std::size_t>(k)]; }
    bool has(Weight k) const { return !(*this)[k].empty(); }
    bool operator==(const RecurrentWeights&) const = default;

    /// Visits the matrices present for this variant, in kAllWeights order.
    template <class F>
    void for_each(F&& f) {
        for (Weight k : kAllWeights) {
            if (has(k)) f(k, (*this)[k]);
        }
    }
    template <class F>
    void for_each(F&& f) const {
        for (Weight k : kAllWeights) {
            if (has(k)) f(k, (*this)[k]);
        }
    }
};

/// A cell plus the word embeddings and the output layer that turns hidden states into
/// next-word logits.
struct CellParams {
    RecurrentWeights cell;
    Matrix word_emb;  // V x d
    Matrix out_proj;  // d x V
    Vector out_bias;  // V

    std::size_t dim() const { return cell.dim; }
    std::size_t vocab() const { return word_emb.rows(); }

    static CellParams zeros(CellVariant variant, std::size_t dim, std::size_t vocab);
};

inline constexpr double kInitScale = 0.08;

/// Fills every matrix and embedding uniformly on [-scale, scale]; biases stay zero.
void init_uniform(RecurrentWeights& weights, Rng& rng, double scale = kInitScale);
void init_uniform(CellParams& params, Rng& rng, double scale = kInitScale);

/// Activations cached by one forward step.
struct StepRecord {
    CellVariant kind = CellVariant::gru;
    Vector x;       // w_t
    Vector h_prev;  // h_{t-1}
    Vector z;       // interpolation gate
    Vector r;       // gate on h_{t-1} inside the candidate
    Vector rh;      // h_{t-1} * r_t
    Vector h_cand;  // candidate activation
    Vector h;       // h_t
};

StepRecord rnn_step(const RecurrentWeights& w, std::span<const double> x,
                    std::span<const double> h_prev);
StepRecord gru_step(const RecurrentWeights& w, std::span<const double> x,
                    std::span<const double> h_prev);
StepRecord pse_step(const RecurrentWeights& w, std::span<const double> x,
                    std::span<const double> h_prev, std::span<const double> u_i);
StepRecord pce_step(const RecurrentWeights& w, std::span<const double> x,
                    std::span<const double> h_prev, std::span<const double> u_i,
                    std::span<const double> u_j);

/// Dispatches on `kind`; u_i / u_j are ignored by the kinds that do not use them.
StepRecord cell_step(CellVariant kind, const RecurrentWeights& w, std::span<const double> x,
                     std::span<const double> h_prev, std::span<const double> u_i,
                     std::span<const double> u_j);

struct StepGrads {
    Vector d_x;
    Vector d_h_prev;
};

/// Reverse-mode through one step. Weight gradients accumulate into `grads`; person gradients
/// accumulate into d_u_i / d_u_j (ignored when the step kind does not use them).
StepGrads step_backward(const RecurrentWeights& w, const StepRecord& rec,
                        std::span<const double> u_i, std::span<const double> u_j,
                        std::span<const double> d_h, RecurrentWeights& grads,
                        std::span<double> d_u_i, std::span<double> d_u_j);

/// logits = h out_proj + out_bias
Vector project_logits(const CellParams& params, std::span<const double> h);

/// Forward pass over one token sequence: consumes tokens[0..n-2] and predicts tokens[1..n-1].
struct SequenceTape {
    CellVariant kind = CellVariant::gru;
    std::vector<TokenId> tokens;
    Vector u_i;
    Vector u_j;
    Vector h0;
    std::vector<StepRecord> steps;
    std::vector<Vector> probs;
    double loss = 0.0;  // mean cross-entropy over the predictions

    std::size_t size() const { return steps.size(); }
};

SequenceTape run_sequence(const CellParams& params, std::span<const TokenId> tokens,
                          std::span<const double> u_i = {}, std::span<const double> u_j = {},
                          std::span<const double> h0 = {});

/// Gradient of the mean cross-entropy w.r.t. each step's logits: (p_t - onehot) / n.
std::vector<Vector> loss_logit_grads(const SequenceTape& tape);

struct CellGrads {
    RecurrentWeights cell;
    std::map<TokenId, Vector> word_emb_rows;
    Matrix out_proj;
    Vector out_bias;
    Vector d_u_i;  // empty for rnn / gru
    Vector d_u_j;  // empty unless pce
    Vector d_h0;

    static CellGrads zeros_like(const CellParams& params, CellVariant kind);
};

/// Exact reverse-mode gradients of the sequence loss given d(loss)/d(logits) for every step and
/// an extra gradient arriving at the final hidden state.
CellGrads cell_backward(const CellParams& params, const SequenceTape& tape,
                        std::span<const double> d_h_final, std::span<const Vector> d_logits);

/// rows[token] += grad, creating the row on first touch.
void accumulate_word_row(std::map<TokenId, Vector>& rows, TokenId token,
                         std::span<const double> grad);

}  // namespace dyadic
