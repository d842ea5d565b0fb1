#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "dyadic/baselines.hpp"
#include "dyadic/checkpoint.hpp"
#include "dyadic/corpus.hpp"
#include "dyadic/eval.hpp"
#include "dyadic/gradcheck.hpp"
#include "dyadic/personality.hpp"
#include "dyadic/seq2seq.hpp"

namespace py = pybind11;
using namespace dyadic;

namespace {

std::string report_json(const GradcheckResult& r) {
    nlohmann::json j{{"groups", r.max_rel_error}, {"worst", r.worst}, {"passed", r.passed()}};
    return j.dump();
}

GradcheckOptions gradcheck_options(std::size_t dim, std::size_t vocab, std::size_t length,
                                   std::uint64_t seed) {
    GradcheckOptions o;
    o.dim = dim;
    o.vocab = vocab;
    o.message_length = length;
    o.response_length = length;
    o.seed = seed;
    return o;
}

}  // namespace

PYBIND11_MODULE(_dyadic, m) {
    m.doc() = "Personal conversational embeddings (PSE / PRE / PCE) with hand-derived gradients";

    py::register_exception<ParseError>(m, "ParseError", PyExc_ValueError);
    py::register_exception<UnknownIndividual>(m, "UnknownIndividual", PyExc_KeyError);
    py::register_exception<CheckpointError>(m, "CheckpointError", PyExc_ValueError);
    py::register_exception<MissingLabel>(m, "MissingLabel", PyExc_KeyError);

    m.def("tokenize", &tokenize, py::arg("text"));

    py::class_<Vocabulary>(m, "Vocabulary")
        .def_static("load", &Vocabulary::load)
        .def("save", &Vocabulary::save)
        .def("id", [](const Vocabulary& v, const std::string& t) { return v.id(t); })
        .def("token", &Vocabulary::token)
        .def_property_readonly("tokens", &Vocabulary::tokens)
        .def("__len__", &Vocabulary::size);

    py::class_<Corpus>(m, "Corpus")
        .def_property_readonly("individuals", &Corpus::individuals)
        .def_property_readonly("n_exchanges", [](const Corpus& c) { return c.exchanges().size(); })
        .def_property_readonly("n_dialogues", [](const Corpus& c) { return c.dialogues().size(); })
        .def_property_readonly("skipped_dialogues", &Corpus::skipped_dialogues)
        .def("utterance_count", &Corpus::utterance_count);

    m.def(
        "load_corpus",
        [](const std::filesystem::path& path, std::size_t vocab_cap) {
            return load_corpus(path, std::nullopt, vocab_cap);
        },
        py::arg("path"), py::arg("vocab_cap") = kDefaultVocabCap);
    m.def("read_labels", py::overload_cast<const std::filesystem::path&>(&read_labels), py::arg("path"));

    m.def(
        "synth_corpus",
        [](std::size_t individuals, std::size_t dialogues, std::size_t turns, std::size_t vocab,
           double signal, std::uint64_t seed) {
            SynthSpec spec;
            spec.n_individuals = individuals;
            spec.n_dialogues = dialogues;
            spec.turns_per_dialogue = turns;
            spec.vocab_size = vocab;
            spec.signal_strength = signal;
            spec.seed = seed;
            SynthCorpus s = synth_corpus(spec);
            return py::make_tuple(std::move(s.corpus), std::move(s.vocab), std::move(s.labels));
        },
        py::arg("individuals") = 20, py::arg("dialogues") = 60, py::arg("turns") = 10,
        py::arg("vocab") = 100, py::arg("signal") = 0.8, py::arg("seed") = 0,
        "Returns (corpus, vocabulary, labels).");

    py::class_<TrainingConfig>(m, "TrainingConfig")
        .def(py::init<>())
        .def_readwrite("dim", &TrainingConfig::dim)
        .def_readwrite("learning_rate", &TrainingConfig::learning_rate)
        .def_readwrite("max_epochs", &TrainingConfig::max_epochs)
        .def_readwrite("vocab_cap", &TrainingConfig::vocab_cap)
        .def_readwrite("grad_clip", &TrainingConfig::grad_clip)
        .def_readwrite("seed", &TrainingConfig::seed)
        .def_readwrite("convergence_tol", &TrainingConfig::convergence_tol);

    py::class_<Model>(m, "Model")
        .def_property_readonly("variant", [](const Model& mdl) { return std::string(to_string(mdl.variant)); })
        .def_property_readonly("dim", &Model::dim)
        .def_readonly("loss_history", &Model::loss_history)
        .def_property_readonly("individuals", [](const Model& mdl) { return mdl.persons.ids(); })
        .def("embedding", &get_embedding, py::arg("id"))
        .def("embeddings", &embeddings)
        .def("corpus_loss", [](const Model& mdl, const Corpus& corpus) {
            const auto samples = training_samples(mdl, corpus);
            return evaluate_loss(mdl, samples);
        });

    m.def(
        "train",
        [](const std::string& variant, const Corpus& corpus, const Vocabulary& vocab,
           const TrainingConfig& config) {
            py::gil_scoped_release release;
            return train(model_variant_from_string(variant), corpus, vocab, config);
        },
        py::arg("variant"), py::arg("corpus"), py::arg("vocab"), py::arg("config") = TrainingConfig{});

    m.def("save_checkpoint", [](const std::filesystem::path& p, const Model& mdl) { save_checkpoint(p, mdl); });
    m.def("load_checkpoint", [](const std::filesystem::path& p) { return load_checkpoint(p).model; });

    m.def(
        "retrieve",
        [](const EmbeddingMap& emb, const std::string& query, std::size_t k) {
            std::vector<std::pair<std::string, double>> out;
            for (const auto& n : retrieve(emb, query, k)) out.emplace_back(n.id, n.distance);
            return out;
        },
        py::arg("embeddings"), py::arg("query"), py::arg("k"));

    m.def(
        "consistency",
        [](const EmbeddingMap& first, const EmbeddingMap& second) {
            const auto r = consistency_from_pairs(first, second, true);
            return py::make_tuple(r.recall, *r.rmse, r.n_individuals);
        },
        py::arg("first"), py::arg("second"), "Returns (recall, rmse, n).");

    m.def("pearson", [](const std::vector<double>& x, const std::vector<double>& y) { return pearson(x, y); });

    m.def(
        "head_forward",
        [](const std::vector<double>& u) { return head_forward(HeadParams::zeros(u.size()), u).y; },
        py::arg("u"), "Trait probabilities of an all-zero head (each 0.5).");

    m.def(
        "_compare_json",
        [](const Corpus& corpus, const Vocabulary& vocab, const LabelSet& labels,
           const TrainingConfig& train_config, std::uint64_t seed, std::vector<std::string> methods,
           std::size_t head_epochs) {
            CompareConfig cfg;
            cfg.train = train_config;
            cfg.seed = seed;
            cfg.methods = std::move(methods);
            cfg.head.epochs = head_epochs;
            CompareReport rep;
            {
                py::gil_scoped_release release;
                rep = compare_methods(corpus, vocab, labels, cfg);
            }
            return to_json(rep, cfg).dump();
        },
        py::arg("corpus"), py::arg("vocab"), py::arg("labels"), py::arg("config"), py::arg("seed"),
        py::arg("methods"), py::arg("head_epochs"));

    m.def(
        "_gradcheck_json",
        [](const std::string& variant, std::size_t dim, std::size_t vocab, std::size_t length,
           std::uint64_t seed) {
            const GradcheckOptions o = gradcheck_options(dim, vocab, length, seed);
            if (variant == "rnn" || variant == "gru") return report_json(gradcheck_cell(cell_variant_from_string(variant), o));
            if (variant == "head") return report_json(gradcheck_head(o));
            return report_json(gradcheck_model(model_variant_from_string(variant), o));
        },
        py::arg("variant"), py::arg("dim"), py::arg("vocab"), py::arg("length"), py::arg("seed"));
}
