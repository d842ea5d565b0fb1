#include "dyadic/checkpoint.hpp"

#include <fstream>
#include <string>

namespace dyadic {

using nlohmann::json;

json to_json(const TrainingConfig& c) {
    return json{{"dim", c.dim},
                {"learning_rate", c.learning_rate},
                {"max_epochs", c.max_epochs},
                {"vocab_cap", c.vocab_cap},
                {"grad_clip", c.grad_clip},
                {"seed", c.seed},
                {"convergence_tol", c.convergence_tol}};
}

TrainingConfig training_config_from_json(const json& j) {
    TrainingConfig c;
    c.dim = j.at("dim").get<std::size_t>();
    c.learning_rate = j.at("learning_rate").get<double>();
    c.max_epochs = j.at("max_epochs").get<std::size_t>();
    c.vocab_cap = j.at("vocab_cap").get<std::size_t>();
    c.grad_clip = j.at("grad_clip").get<double>();
    c.seed = j.at("seed").get<std::uint64_t>();
    c.convergence_tol = j.at("convergence_tol").get<double>();
    return c;
}

json matrix_to_json(const Matrix& m) {
    return json{{"rows", m.rows()}, {"cols", m.cols()}, {"data", m.data()}};
}

Matrix matrix_from_json(const json& j) {
    return Matrix(j.at("rows").get<std::size_t>(), j.at("cols").get<std::size_t>(),
                  j.at("data").get<std::vector<double>>());
}

namespace {

Matrix as_row(const Vector& v) { return Matrix(1, v.size(), v); }

Vector from_row(const Matrix& m, std::size_t expected, const std::string& name) {
    if (m.rows() != 1 || m.cols() != expected) {
        throw CheckpointError("matrix '" + name + "' has shape " + m.shape_string() +
                              ", expected [1x" + std::to_string(expected) + "]");
    }
    return m.data();
}

void expect_shape(const Matrix& m, std::size_t rows, std::size_t cols, const std::string& name) {
    if (m.rows() != rows || m.cols() != cols) {
        throw CheckpointError("matrix '" + name + "' has shape " + m.shape_string() +
                              ", expected [" + std::to_string(rows) + "x" + std::to_string(cols) +
                              "]");
    }
}

json head_to_json(const HeadParams& head) {
    return json{{"W1", matrix_to_json(head.w1)},
                {"c1", head.c1},
                {"W2", matrix_to_json(head.w2)},
                {"c2", head.c2}};
}

HeadParams head_from_json(const json& j) {
    HeadParams h{matrix_from_json(j.at("W1")), j.at("c1").get<Vector>(),
                 matrix_from_json(j.at("W2")), j.at("c2").get<Vector>()};
    const std::size_t d = h.w1.rows();
    expect_shape(h.w1, d, d, "head.W1");
    expect_shape(h.w2, d, kNumTraits, "head.W2");
    if (h.c1.size() != d || h.c2.size() != kNumTraits) {
        throw CheckpointError("head bias vectors have the wrong length");
    }
    return h;
}

}  // namespace

json checkpoint_to_json(const Model& model, const HeadParams* head) {
    json matrices = json::object();
    matrices["word_emb"] = matrix_to_json(model.decoder.word_emb);
    matrices["out_proj"] = matrix_to_json(model.decoder.out_proj);
    matrices["out_bias"] = matrix_to_json(as_row(model.decoder.out_bias));
    model.decoder.cell.for_each([&](Weight k, const Matrix& m) {
        matrices["decoder." + std::string(weight_name(k))] = matrix_to_json(m);
    });
    if (model.encoder) {
        model.encoder->for_each([&](Weight k, const Matrix& m) {
            matrices["encoder." + std::string(weight_name(k))] = matrix_to_json(m);
        });
    }
    json persons = json::object();
    for (std::size_t i = 0; i < model.persons.size(); ++i) {
        const auto row = model.persons.row(i);
        persons[model.persons.ids()[i]] = Vector(row.begin(), row.end());
    }
    json doc{{"format_version", kCheckpointFormatVersion},
             {"variant", std::string(to_string(model.variant))},
             {"d", model.dim()},
             {"vocab", model.vocab.tokens()},
             {"config", to_json(model.config)},
             {"matrices", std::move(matrices)},
             {"persons", std::move(persons)},
             {"loss_history", model.loss_history}};
    if (head) doc["head"] = head_to_json(*head);
    return doc;
}

Checkpoint checkpoint_from_json(const json& j) {
    try {
        const int version = j.at("format_version").get<int>();
        if (version != kCheckpointFormatVersion) {
            throw CheckpointError("unsupported checkpoint format_version " +
                                  std::to_string(version));
        }
        Model m;
        m.variant = model_variant_from_string(j.at("variant").get<std::string>());
        m.config = training_config_from_json(j.at("config"));
        const auto d = j.at("d").get<std::size_t>();
        m.vocab = Vocabulary::from_tokens(j.at("vocab").get<std::vector<std::string>>(),
                                          m.config.vocab_cap);
        const std::size_t v = m.vocab.size();

        const json& mats = j.at("matrices");
        const CellVariant dec_kind = m.variant == ModelVariant::pce ? CellVariant::pce
                                                                    : CellVariant::pse;
        m.decoder = CellParams::zeros(dec_kind, d, v);
        m.decoder.word_emb = matrix_from_json(mats.at("word_emb"));
        expect_shape(m.decoder.word_emb, v, d, "word_emb");
        m.decoder.out_proj = matrix_from_json(mats.at("out_proj"));
        expect_shape(m.decoder.out_proj, d, v, "out_proj");
        m.decoder.out_bias = from_row(matrix_from_json(mats.at("out_bias")), v, "out_bias");

        auto load_cell = [&](RecurrentWeights& w, const std::string& prefix) {
            w.for_each([&](Weight k, Matrix& target) {
                const std::string name = prefix + std::string(weight_name(k));
                target = matrix_from_json(mats.at(name));
                expect_shape(target, d, d, name);
            });
        };
        load_cell(m.decoder.cell, "decoder.");
        if (m.variant != ModelVariant::pse) {
            m.encoder = RecurrentWeights::zeros(CellVariant::gru, d);
            load_cell(*m.encoder, "encoder.");
        }

        std::vector<std::string> ids;
        for (const auto& [id, vec] : j.at("persons").items()) ids.push_back(id);
        m.persons = PersonTable(ids, d);
        for (std::size_t i = 0; i < ids.size(); ++i) {
            const auto vec = j.at("persons").at(ids[i]).get<Vector>();
            if (vec.size() != d) throw CheckpointError("person '" + ids[i] + "' has wrong length");
            std::copy(vec.begin(), vec.end(), m.persons.row(i).begin());
        }
        m.loss_history = j.at("loss_history").get<std::vector<double>>();

        Checkpoint out{std::move(m), std::nullopt};
        if (j.contains("head")) out.head = head_from_json(j.at("head"));
        return out;
    } catch (const json::exception& e) {
        throw CheckpointError(std::string("malformed checkpoint: ") + e.what());
    } catch (const ShapeError& e) {
        throw CheckpointError(std::string("malformed checkpoint: ") + e.what());
    }
}

void save_checkpoint(const std::filesystem::path& path, const Model& model,
                     const HeadParams* head) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write checkpoint " + path.string());
    out << checkpoint_to_json(model, head).dump() << '\n';
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open checkpoint " + path.string());
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& e) {
        throw CheckpointError(std::string("malformed checkpoint: ") + e.what());
    }
    return checkpoint_from_json(j);
}

}  // namespace dyadic
