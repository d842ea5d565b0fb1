#include "dyadic/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace dyadic {

using nlohmann::json;

AccuracyReport accuracy(const Predictions& predictions, const LabelSet& labels) {
    AccuracyReport report;
    report.n_individuals = predictions.size();
    if (predictions.empty()) return report;
    std::array<std::size_t, kNumTraits> correct{};
    for (const auto& [id, bits] : predictions) {
        auto it = labels.find(id);
        if (it == labels.end()) throw MissingLabel(id);
        for (std::size_t k = 0; k < kNumTraits; ++k) correct[k] += bits[k] == it->second[k];
    }
    const double n = static_cast<double>(predictions.size());
    double sum = 0.0;
    for (std::size_t k = 0; k < kNumTraits; ++k) {
        report.per_trait[k] = static_cast<double>(correct[k]) / n;
        sum += report.per_trait[k];
    }
    report.overall = sum / static_cast<double>(kNumTraits);
    return report;
}

double embedding_distance(std::span<const double> a, std::span<const double> b) {
    return euclidean_distance(a, b);
}

std::vector<Neighbor> retrieve(const EmbeddingMap& embeddings, const std::string& query,
                               std::size_t k) {
    auto q = embeddings.find(query);
    if (q == embeddings.end()) throw UnknownIndividual(query);
    if (k == 0) throw std::invalid_argument("retrieve: k must be >= 1");
    std::vector<Neighbor> all;
    all.reserve(embeddings.size());
    for (const auto& [id, vec] : embeddings) {
        if (id == query) continue;
        all.push_back(Neighbor{id, embedding_distance(q->second, vec)});
    }
    const std::size_t keep = std::min(k, all.size());
    // map order is id order, so a stable partial order on distance keeps ids ascending on ties
    std::stable_sort(all.begin(), all.end(),
                     [](const Neighbor& a, const Neighbor& b) { return a.distance < b.distance; });
    all.resize(keep);
    return all;
}

ConsistencyReport consistency_from_pairs(const EmbeddingMap& first, const EmbeddingMap& second,
                                         bool with_rmse) {
    std::vector<std::string> ids;
    for (const auto& [id, vec] : first) {
        if (second.contains(id)) ids.push_back(id);
    }
    if (ids.size() < 2) {
        throw std::invalid_argument("consistency needs at least 2 qualifying individuals");
    }
    ConsistencyReport report;
    report.n_individuals = ids.size();
    std::size_t hits = 0;
    double sq = 0.0;
    std::size_t count = 0;
    for (const auto& id : ids) {
        const Vector& a = first.at(id);
        std::string best;
        double best_dist = 0.0;
        for (const auto& other : ids) {
            const double dist = embedding_distance(a, second.at(other));
            if (best.empty() || dist < best_dist) {
                best = other;
                best_dist = dist;
            }
        }
        hits += best == id;
        if (with_rmse) {
            sq += squared_distance(a, second.at(id));
            count += a.size();
        }
    }
    report.recall = static_cast<double>(hits) / static_cast<double>(ids.size());
    if (with_rmse) report.rmse = count ? std::sqrt(sq / static_cast<double>(count)) : 0.0;
    return report;
}

HalvesCorpus relabel_halves(const Corpus& corpus, std::size_t min_sentences) {
    HalvesCorpus out;
    // slot[dialogue][turn] = new speaker id
    std::vector<std::vector<std::string>> slots;
    for (const auto& dialogue : corpus.dialogues()) {
        std::vector<std::string> names;
        for (const auto& turn : dialogue.turns) names.push_back(turn.speaker);
        slots.push_back(std::move(names));
    }
    for (const auto& id : corpus.individuals()) {
        const auto halves = chronological_halves(corpus, id, min_sentences);
        if (!halves) continue;
        out.qualifying.push_back(id);
        for (const auto& u : halves->first) slots[u.dialogue][u.ordinal] = first_half_slot(id);
        for (const auto& u : halves->second) slots[u.dialogue][u.ordinal] = second_half_slot(id);
    }
    // An individual speaking twice in a row across their own half boundary would pair with
    // themselves here; alternating dialogues never produce that.
    std::vector<Dialogue> dialogues = corpus.dialogues();
    for (std::size_t d = 0; d < dialogues.size(); ++d) {
        for (std::size_t t = 0; t < dialogues[d].turns.size(); ++t) {
            dialogues[d].turns[t].speaker = slots[d][t];
        }
    }
    out.corpus = Corpus(std::move(dialogues));
    return out;
}

ConsistencyReport consistency_eval(const Corpus& corpus, const Vocabulary& vocab,
                                   ModelVariant variant, const TrainingConfig& config,
                                   std::size_t min_sentences) {
    const HalvesCorpus halves = relabel_halves(corpus, min_sentences);
    if (halves.qualifying.size() < 2) {
        throw std::invalid_argument("consistency: fewer than 2 individuals with >= " +
                                    std::to_string(min_sentences) + " utterances");
    }
    const Model model = train(variant, halves.corpus, vocab, config);
    EmbeddingMap first, second;
    for (const auto& id : halves.qualifying) {
        first.emplace(id, get_embedding(model, first_half_slot(id)));
        second.emplace(id, get_embedding(model, second_half_slot(id)));
    }
    return consistency_from_pairs(first, second, true);
}

ConsistencyReport bow_consistency(const Corpus& corpus, const Vocabulary& vocab,
                                  std::size_t min_sentences, std::size_t k) {
    const HalvesCorpus halves = relabel_halves(corpus, min_sentences);
    if (halves.qualifying.size() < 2) {
        throw std::invalid_argument("consistency: fewer than 2 individuals with >= " +
                                    std::to_string(min_sentences) + " utterances");
    }
    // vocabulary ids after the specials are in descending corpus frequency
    std::vector<TokenId> words;
    for (TokenId w = kUnk + 1; w < vocab.size() && words.size() < k; ++w) words.push_back(w);
    EmbeddingMap first, second;
    for (const auto& id : halves.qualifying) {
        first.emplace(id, bow_features(halves.corpus, first_half_slot(id), words));
        second.emplace(id, bow_features(halves.corpus, second_half_slot(id), words));
    }
    return consistency_from_pairs(first, second, false);
}

AccuracyReport evaluate_embeddings(const EmbeddingMap& embeddings, const LabelSet& labels,
                                   std::span<const std::string> train_ids,
                                   std::span<const std::string> test_ids,
                                   const HeadConfig& head_config, HeadParams* head_out) {
    LabelSet train_labels;
    for (const auto& id : train_ids) {
        auto it = labels.find(id);
        if (it == labels.end()) throw MissingLabel(id);
        train_labels.emplace(id, it->second);
    }
    const HeadParams head = head_train(embeddings, train_labels, head_config);
    Predictions predictions;
    for (const auto& id : test_ids) {
        if (!labels.contains(id)) throw MissingLabel(id);
        auto it = embeddings.find(id);
        if (it == embeddings.end()) throw UnknownIndividual(id);
        predictions.emplace(id, infer(head, it->second));
    }
    if (head_out) *head_out = head;
    return accuracy(predictions, labels);
}

CompareReport compare_methods(const Corpus& corpus, const Vocabulary& vocab,
                              const LabelSet& labels, const CompareConfig& config) {
    const auto [train_ids, test_ids] = split_individuals(corpus, config.split_ratio, config.seed);
    for (const auto& id : test_ids) {
        if (!labels.contains(id)) throw MissingLabel(id);
    }
    LabelSet train_labels;
    for (const auto& id : train_ids) {
        auto it = labels.find(id);
        if (it == labels.end()) throw MissingLabel(id);
        train_labels.emplace(id, it->second);
    }

    CompareReport report;
    report.seed = config.seed;
    report.n_train = train_ids.size();
    report.n_test = test_ids.size();

    TrainingConfig train_config = config.train;
    train_config.seed = config.seed;
    HeadConfig head_config = config.head;
    head_config.seed = config.seed;

    for (const auto& method : config.methods) {
        if (method == "bow") {
            const BowModel bow = bow_fit(corpus, train_labels, vocab.size(), config.bow);
            Predictions predictions;
            for (const auto& id : test_ids) {
                predictions.emplace(id, bow_infer(bow, bow_features(corpus, id, bow.words)));
            }
            report.methods.emplace(method, accuracy(predictions, labels));
        } else {
            const Model model = train(model_variant_from_string(method), corpus, vocab, train_config);
            report.methods.emplace(method, evaluate_embeddings(embeddings(model), labels, train_ids,
                                                               test_ids, head_config));
        }
    }
    return report;
}

json to_json(const AccuracyReport& report) {
    json per_trait = json::object();
    for (std::size_t k = 0; k < kNumTraits; ++k) per_trait[kTraitNames[k]] = report.per_trait[k];
    return json{{"per_trait", std::move(per_trait)},
                {"overall", report.overall},
                {"n_individuals", report.n_individuals}};
}

json to_json(const ConsistencyReport& report) {
    json j{{"recall", report.recall}, {"n_individuals", report.n_individuals}};
    j["rmse"] = report.rmse ? json(*report.rmse) : json(nullptr);
    return j;
}

json to_json(const CompareConfig& config) {
    return json{{"train", to_json(config.train)},
                {"head", {{"learning_rate", config.head.learning_rate},
                          {"epochs", config.head.epochs}}},
                {"bow", {{"learning_rate", config.bow.learning_rate},
                         {"epochs", config.bow.epochs},
                         {"l2", config.bow.l2},
                         {"standardize", config.bow.standardize}}},
                {"split_ratio", config.split_ratio},
                {"methods", config.methods}};
}

json to_json(const CompareReport& report, const CompareConfig& config) {
    json methods = json::object();
    for (const auto& [name, acc] : report.methods) methods[name] = to_json(acc);
    return json{{"seed", report.seed},
                {"config", to_json(config)},
                {"n_train", report.n_train},
                {"n_test", report.n_test},
                {"methods", std::move(methods)}};
}

std::string format_table(const std::map<std::string, AccuracyReport>& methods) {
    std::ostringstream out;
    char buf[128];
    std::snprintf(buf, sizeof(buf), "%-8s", "method");
    out << buf;
    for (const char* trait : kTraitNames) {
        std::snprintf(buf, sizeof(buf), " %7s", trait);
        out << buf;
    }
    std::snprintf(buf, sizeof(buf), " %8s\n", "overall");
    out << buf;
    for (const auto& [name, acc] : methods) {
        std::snprintf(buf, sizeof(buf), "%-8s", name.c_str());
        out << buf;
        for (double a : acc.per_trait) {
            std::snprintf(buf, sizeof(buf), " %7.4f", a);
            out << buf;
        }
        std::snprintf(buf, sizeof(buf), " %8.4f\n", acc.overall);
        out << buf;
    }
    return out.str();
}

}  // namespace dyadic
