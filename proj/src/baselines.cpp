#include "dyadic/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace dyadic {

double pearson(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) {
        throw std::invalid_argument("pearson: length mismatch " + std::to_string(x.size()) +
                                    " vs " + std::to_string(y.size()));
    }
    if (x.size() < 2) throw std::invalid_argument("pearson: need at least two observations");
    const double n = static_cast<double>(x.size());
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
    const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double dx = x[i] - mx;
        const double dy = y[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx == 0.0 || syy == 0.0) return 0.0;
    return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

std::vector<double> word_counts(const Corpus& corpus, const std::string& id,
                                std::size_t vocab_size) {
    std::vector<double> counts(vocab_size, 0.0);
    for (const auto& utt : corpus.utterances_of(id)) {
        for (TokenId tok : utt.tokens) {
            if (tok == kBos || tok == kEos) continue;
            if (tok < vocab_size) counts[tok] += 1.0;
        }
    }
    return counts;
}

std::vector<TokenId> select_words(const Corpus& corpus, const LabelSet& train_labels,
                                  std::size_t vocab_size, std::size_t k) {
    if (train_labels.size() < 2) {
        throw std::invalid_argument("select_words: need at least two labeled individuals");
    }
    std::vector<std::vector<double>> counts;
    std::array<std::vector<double>, kNumTraits> traits;
    for (const auto& [id, bits] : train_labels) {
        if (!corpus.has_individual(id)) throw UnknownIndividual(id);
        counts.push_back(word_counts(corpus, id, vocab_size));
        for (std::size_t t = 0; t < kNumTraits; ++t) traits[t].push_back(bits[t]);
    }

    std::vector<std::pair<double, TokenId>> scored;
    std::vector<double> column(counts.size());
    for (TokenId w = kUnk; w < vocab_size; ++w) {
        bool used = false;
        for (std::size_t i = 0; i < counts.size(); ++i) {
            column[i] = counts[i][w];
            used = used || column[i] > 0.0;
        }
        if (!used) continue;
        double score = 0.0;
        for (const auto& labels : traits) score = std::max(score, std::abs(pearson(column, labels)));
        scored.emplace_back(score, w);
    }
    std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
        return a.first != b.first ? a.first > b.first : a.second < b.second;
    });
    if (scored.size() > k) scored.resize(k);
    std::vector<TokenId> out;
    out.reserve(scored.size());
    for (const auto& [score, w] : scored) out.push_back(w);
    return out;
}

Vector bow_features(const Corpus& corpus, const std::string& id,
                    std::span<const TokenId> selected_words) {
    const auto utterances = corpus.utterances_of(id);
    std::map<TokenId, std::size_t> position;
    for (std::size_t i = 0; i < selected_words.size(); ++i) position.emplace(selected_words[i], i);
    Vector features(selected_words.size(), 0.0);
    for (const auto& utt : utterances) {
        for (TokenId tok : utt.tokens) {
            auto it = position.find(tok);
            if (it != position.end()) features[it->second] += 1.0;
        }
    }
    if (!utterances.empty()) {
        for (double& f : features) f /= static_cast<double>(utterances.size());
    }
    return features;
}

Vector BowModel::standardize(std::span<const double> features) const {
    if (features.size() != words.size()) {
        throw ShapeError("bow: expected " + std::to_string(words.size()) + " features, got " +
                         std::to_string(features.size()));
    }
    Vector z(features.size());
    for (std::size_t i = 0; i < z.size(); ++i) {
        z[i] = (features[i] - feature_mean[i]) / feature_scale[i];
    }
    return z;
}

Vector BowModel::predict_proba(std::span<const double> features) const {
    Vector a = bias;
    vecmat_accumulate(standardize(features), weights, a);
    return sigmoid(a);
}

BowModel bow_train(const std::map<std::string, Vector>& features, const LabelSet& labels,
                   std::vector<TokenId> words, const BowConfig& config) {
    if (labels.empty()) throw std::invalid_argument("bow_train: empty training set");
    const std::size_t k = words.size();
    BowModel model;
    model.words = std::move(words);
    model.feature_mean.assign(k, 0.0);
    model.feature_scale.assign(k, 1.0);
    model.weights = Matrix(k, kNumTraits);
    model.bias.assign(kNumTraits, 0.0);

    std::vector<const Vector*> xs;
    std::vector<const TraitBits*> ys;
    for (const auto& [id, bits] : labels) {
        auto it = features.find(id);
        if (it == features.end()) throw UnknownIndividual(id);
        if (it->second.size() != k) throw ShapeError("bow_train: feature length mismatch");
        xs.push_back(&it->second);
        ys.push_back(&bits);
    }
    const double n = static_cast<double>(xs.size());
    for (const Vector* x : xs) axpy(1.0 / n, *x, model.feature_mean);
    Vector var(k, 0.0);
    for (const Vector* x : xs) {
        for (std::size_t i = 0; i < k; ++i) {
            const double dv = (*x)[i] - model.feature_mean[i];
            var[i] += dv * dv / n;
        }
    }
    for (std::size_t i = 0; i < k; ++i) {
        if (var[i] > 0.0) model.feature_scale[i] = std::sqrt(var[i]);
    }
    if (!config.standardize) {
        std::fill(model.feature_mean.begin(), model.feature_mean.end(), 0.0);
        std::fill(model.feature_scale.begin(), model.feature_scale.end(), 1.0);
    }
    std::vector<Vector> zs;
    zs.reserve(xs.size());
    for (const Vector* x : xs) zs.push_back(model.standardize(*x));

    Matrix grad_w(k, kNumTraits);
    Vector grad_b(kNumTraits);
    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        std::fill(grad_w.data().begin(), grad_w.data().end(), 0.0);
        std::fill(grad_b.begin(), grad_b.end(), 0.0);
        for (std::size_t s = 0; s < zs.size(); ++s) {
            Vector a = model.bias;
            vecmat_accumulate(zs[s], model.weights, a);
            Vector err(kNumTraits);
            for (std::size_t t = 0; t < kNumTraits; ++t) {
                err[t] = (sigmoid(a[t]) - static_cast<double>((*ys[s])[t])) / n;
            }
            add_outer(grad_w, zs[s], err);
            axpy(1.0, err, grad_b);
        }
        axpy(config.l2, model.weights.data(), grad_w.data());
        axpy(-config.learning_rate, grad_w.data(), model.weights.data());
        axpy(-config.learning_rate, grad_b, model.bias);
    }
    return model;
}

TraitBits bow_infer(const BowModel& model, std::span<const double> features) {
    const Vector p = model.predict_proba(features);
    TraitBits bits{};
    for (std::size_t t = 0; t < kNumTraits; ++t) bits[t] = p[t] >= 0.5 ? 1 : 0;
    return bits;
}

BowModel bow_fit(const Corpus& corpus, const LabelSet& train_labels, std::size_t vocab_size,
                 const BowConfig& config, std::size_t k) {
    auto words = select_words(corpus, train_labels, vocab_size, k);
    std::map<std::string, Vector> features;
    for (const auto& [id, bits] : train_labels) features.emplace(id, bow_features(corpus, id, words));
    return bow_train(features, train_labels, std::move(words), config);
}

}  // namespace dyadic
