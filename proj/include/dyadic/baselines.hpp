#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "dyadic/corpus.hpp"
#include "dyadic/tensor.hpp"

namespace dyadic {

inline constexpr std::size_t kBowWords = 300;

/// Sample Pearson correlation; 0 when either input has zero variance.
double pearson(std::span<const double> x, std::span<const double> y);

/// Raw count of every vocabulary id in the individual's utterances (BOS/EOS excluded).
std::vector<double> word_counts(const Corpus& corpus, const std::string& id, std::size_t vocab_size);

/// Scores each candidate word by max over traits of |pearson(per-individual count, label)|
/// across the labeled (training) individuals; returns the top k, ties by id ascending.
/// Candidates are the non-special ids used at least once by a labeled individual.
std::vector<TokenId> select_words(const Corpus& corpus, const LabelSet& train_labels,
                                  std::size_t vocab_size, std::size_t k = kBowWords);

/// Counts of each selected word over the individual's utterances divided by their utterance
/// count.
Vector bow_features(const Corpus& corpus, const std::string& id,
                    std::span<const TokenId> selected_words);

struct BowConfig {
    double learning_rate = 0.5;
    std::size_t epochs = 2000;
    double l2 = 1e-4;
    bool standardize = false;  // z-score features on the training individuals
};

/// Five independent logistic regressions. With standardization off, feature_mean is 0 and
/// feature_scale is 1 so standardize() is the identity.
struct BowModel {
    std::vector<TokenId> words;
    Vector feature_mean;
    Vector feature_scale;
    Matrix weights;  // k x 5
    Vector bias;     // 5

    Vector standardize(std::span<const double> features) const;
    Vector predict_proba(std::span<const double> features) const;
};

/// Full-batch gradient descent on mean binary cross-entropy + l2/2 ||W||^2.
BowModel bow_train(const std::map<std::string, Vector>& features, const LabelSet& labels,
                   std::vector<TokenId> words, const BowConfig& config = {});
TraitBits bow_infer(const BowModel& model, std::span<const double> features);

/// select_words + bow_features + bow_train over the given training individuals.
BowModel bow_fit(const Corpus& corpus, const LabelSet& train_labels, std::size_t vocab_size,
                 const BowConfig& config = {}, std::size_t k = kBowWords);

}  // namespace dyadic
