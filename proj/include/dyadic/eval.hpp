#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "dyadic/baselines.hpp"
#include "dyadic/checkpoint.hpp"
#include "dyadic/corpus.hpp"
#include "dyadic/personality.hpp"
#include "dyadic/seq2seq.hpp"

#include "json.hpp"

namespace dyadic {

/// A prediction or split member has no label.
class MissingLabel : public std::runtime_error {
public:
    explicit MissingLabel(const std::string& id)
        : std::runtime_error("no label for individual '" + id + "'"), id_(id) {}
    const std::string& id() const { return id_; }

private:
    std::string id_;
};

struct AccuracyReport {
    std::array<double, kNumTraits> per_trait{};
    double overall = 0.0;  // unweighted mean of per_trait
    std::size_t n_individuals = 0;
};

using Predictions = std::map<std::string, TraitBits>;

AccuracyReport accuracy(const Predictions& predictions, const LabelSet& labels);

/// The one distance used by retrieval and by the consistency nearest-neighbour search.
double embedding_distance(std::span<const double> a, std::span<const double> b);

struct Neighbor {
    std::string id;
    double distance = 0.0;
};

/// k nearest by Euclidean distance, query excluded, ties by id ascending; k clamps to n - 1.
std::vector<Neighbor> retrieve(const EmbeddingMap& embeddings, const std::string& query,
                               std::size_t k);

struct ConsistencyReport {
    double recall = 0.0;
    std::optional<double> rmse;  // absent for BoW features
    std::size_t n_individuals = 0;
};

/// For every id present in both maps: is its nearest `second` entry (ties by id) its own?
/// rmse = sqrt(mean over ids and dimensions of (first - second)^2).
ConsistencyReport consistency_from_pairs(const EmbeddingMap& first, const EmbeddingMap& second,
                                         bool with_rmse = true);

inline std::string first_half_slot(const std::string& id) { return id + "#a"; }
inline std::string second_half_slot(const std::string& id) { return id + "#b"; }

/// Each individual with >= min_sentences utterances is split into two identities, id#a for the
/// first chronological half of their utterances and id#b for the rest.
struct HalvesCorpus {
    Corpus corpus;
    std::vector<std::string> qualifying;
};

HalvesCorpus relabel_halves(const Corpus& corpus, std::size_t min_sentences);

/// One model over the relabeled corpus so both halves share a latent space.
ConsistencyReport consistency_eval(const Corpus& corpus, const Vocabulary& vocab,
                                   ModelVariant variant, const TrainingConfig& config,
                                   std::size_t min_sentences = kDefaultConsistencyMinSentences);

/// Same nearest-neighbour rule over BoW vectors of the halves, using the k most frequent
/// vocabulary words.
ConsistencyReport bow_consistency(const Corpus& corpus, const Vocabulary& vocab,
                                  std::size_t min_sentences = kDefaultConsistencyMinSentences,
                                  std::size_t k = kBowWords);

struct CompareConfig {
    TrainingConfig train;
    HeadConfig head;
    BowConfig bow;
    double split_ratio = 0.8;
    std::uint64_t seed = 0;
    std::vector<std::string> methods = {"bow", "pse", "pre", "pce"};
};

struct CompareReport {
    std::uint64_t seed = 0;
    std::size_t n_train = 0;
    std::size_t n_test = 0;
    std::map<std::string, AccuracyReport> methods;
};

/// Embedding models are trained unsupervised on the whole corpus; heads and the BoW classifier
/// see only training labels; accuracy is measured on the held-out individuals.
CompareReport compare_methods(const Corpus& corpus, const Vocabulary& vocab,
                              const LabelSet& labels, const CompareConfig& config);

/// Embedding-based accuracy for one trained model (used by eval on a checkpoint).
AccuracyReport evaluate_embeddings(const EmbeddingMap& embeddings, const LabelSet& labels,
                                   std::span<const std::string> train_ids,
                                   std::span<const std::string> test_ids,
                                   const HeadConfig& head_config, HeadParams* head_out = nullptr);

nlohmann::json to_json(const AccuracyReport& report);
nlohmann::json to_json(const ConsistencyReport& report);
nlohmann::json to_json(const CompareConfig& config);
nlohmann::json to_json(const CompareReport& report, const CompareConfig& config);

std::string format_table(const std::map<std::string, AccuracyReport>& methods);

}  // namespace dyadic
