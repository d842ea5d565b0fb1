#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dyadic/cells.hpp"
#include "dyadic/corpus.hpp"
#include "dyadic/tensor.hpp"

namespace dyadic {

/// pse: personal language model over individual utterances.
/// pre: GRU message encoder feeding a speaker-conditioned decoder.
/// pce: pre with the addressee embedding also entering the decoder gates.
enum class ModelVariant { pse, pre, pce };

std::string_view to_string(ModelVariant v);
ModelVariant model_variant_from_string(std::string_view name);

struct TrainingConfig {
    std::size_t dim = 50;
    double learning_rate = 0.01;
    std::size_t max_epochs = 100;
    std::size_t vocab_cap = kDefaultVocabCap;
    double grad_clip = 5.0;
    std::uint64_t seed = 0;
    double convergence_tol = 1e-4;

    void validate() const;
    bool operator==(const TrainingConfig&) const = default;
};

/// One embedding per individual, shared by the speaker and addressee roles.
class PersonTable {
public:
    PersonTable() = default;
    PersonTable(std::vector<std::string> ids, std::size_t dim);

    std::size_t size() const { return ids_.size(); }
    std::size_t dim() const { return table_.cols(); }
    const std::vector<std::string>& ids() const { return ids_; }
    bool contains(const std::string& id) const { return index_.contains(id); }
    /// Throws UnknownIndividual.
    std::size_t index_of(const std::string& id) const;

    std::span<double> row(std::size_t i) { return table_.row(i); }
    std::span<const double> row(std::size_t i) const { return table_.row(i); }
    std::span<const double> get(const std::string& id) const { return row(index_of(id)); }

    Matrix& table() { return table_; }
    const Matrix& table() const { return table_; }

private:
    std::vector<std::string> ids_;
    std::map<std::string, std::size_t> index_;
    Matrix table_;
};

using EmbeddingMap = std::map<std::string, Vector>;

struct Model {
    ModelVariant variant = ModelVariant::pce;
    TrainingConfig config;
    Vocabulary vocab;
    CellParams decoder;  // owns the word embeddings shared with the encoder
    std::optional<RecurrentWeights> encoder;
    PersonTable persons;
    std::vector<double> loss_history;

    std::size_t dim() const { return decoder.dim(); }

    /// Fresh model, every matrix and embedding uniform on [-0.08, 0.08] from the "init" stream.
    static Model create(ModelVariant variant, const TrainingConfig& config, Vocabulary vocab,
                        std::vector<std::string> individuals);
};

inline constexpr std::size_t kNoPerson = std::numeric_limits<std::size_t>::max();

/// Token spans point into the corpus the sample was built from.
struct TrainingSample {
    std::span<const TokenId> message;  // empty for pse
    std::span<const TokenId> response;
    std::size_t responder = kNoPerson;
    std::size_t addressee = kNoPerson;
};

/// pse: every utterance in the corpus; pre / pce: every exchange.
std::vector<TrainingSample> training_samples(const Model& model, const Corpus& corpus);

/// Final hidden state of the plain GRU encoder run from zero over every message token.
Vector encode_message(const Model& model, std::span<const TokenId> message);

struct ExchangeTape {
    std::vector<TokenId> message;
    std::vector<StepRecord> encoder_steps;
    SequenceTape decoder;
    std::size_t responder = kNoPerson;
    std::size_t addressee = kNoPerson;
    double loss = 0.0;
};

ExchangeTape forward_sample(const Model& model, const TrainingSample& sample);

/// Throws UnknownIndividual naming the first id the model lacks.
ExchangeTape forward_exchange(const Model& model, const Exchange& exchange);

struct Gradients {
    RecurrentWeights decoder;
    std::optional<RecurrentWeights> encoder;
    std::map<TokenId, Vector> word_emb_rows;
    Matrix out_proj;
    Vector out_bias;
    std::map<std::size_t, Vector> persons;

    static Gradients zeros_like(const Model& model);
    void accumulate(const Gradients& other);
    double global_norm() const;
};

Gradients backward_exchange(const Model& model, const ExchangeTape& tape);

/// theta <- theta - lr * g after clipping g to global norm model.config.grad_clip. Only the
/// touched embedding rows change.
void sgd_update(Model& model, const Gradients& grads, double learning_rate);

/// Called after each epoch with (epoch index, mean loss).
using EpochObserver = std::function<void(std::size_t, double)>;

/// Per-sample SGD over seeded-shuffled epochs until max_epochs or the relative improvement of
/// the mean epoch loss falls below convergence_tol.
Model train(ModelVariant variant, const Corpus& corpus, const Vocabulary& vocab,
            const TrainingConfig& config, const EpochObserver& observer = {});

/// Continues training an existing model in place (same stopping rule).
void train_model(Model& model, const Corpus& corpus, const EpochObserver& observer = {});

/// Mean loss over the given samples without updating anything.
double evaluate_loss(const Model& model, std::span<const TrainingSample> samples);

Vector get_embedding(const Model& model, const std::string& id);
EmbeddingMap embeddings(const Model& model);

}  // namespace dyadic
