#include "dyadic/seq2seq.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

#include "dyadic/rng.hpp"

namespace dyadic {

std::string_view to_string(ModelVariant v) {
    switch (v) {
        case ModelVariant::pse: return "pse";
        case ModelVariant::pre: return "pre";
        case ModelVariant::pce: return "pce";
    }
    return "?";
}

ModelVariant model_variant_from_string(std::string_view name) {
    if (name == "pse") return ModelVariant::pse;
    if (name == "pre") return ModelVariant::pre;
    if (name == "pce") return ModelVariant::pce;
    throw std::invalid_argument("unknown model variant '" + std::string(name) + "'");
}

void TrainingConfig::validate() const {
    if (dim == 0) throw std::invalid_argument("dim must be positive");
    if (!(learning_rate >= 0.0)) throw std::invalid_argument("learning_rate must be >= 0");
    if (vocab_cap < 3) throw std::invalid_argument("vocab_cap must be >= 3");
    if (!(grad_clip > 0.0)) throw std::invalid_argument("grad_clip must be positive");
    if (!(convergence_tol >= 0.0)) throw std::invalid_argument("convergence_tol must be >= 0");
}

PersonTable::PersonTable(std::vector<std::string> ids, std::size_t dim)
    : ids_(std::move(ids)), table_(ids_.size(), dim) {
    for (std::size_t i = 0; i < ids_.size(); ++i) {
        if (!index_.emplace(ids_[i], i).second) {
            throw std::invalid_argument("duplicate individual '" + ids_[i] + "'");
        }
    }
}

std::size_t PersonTable::index_of(const std::string& id) const {
    auto it = index_.find(id);
    if (it == index_.end()) throw UnknownIndividual(id);
    return it->second;
}

namespace {

CellVariant decoder_cell(ModelVariant v) {
    return v == ModelVariant::pce ? CellVariant::pce : CellVariant::pse;
}

}  // namespace

Model Model::create(ModelVariant variant, const TrainingConfig& config, Vocabulary vocab,
                    std::vector<std::string> individuals) {
    config.validate();
    Model m;
    m.variant = variant;
    m.config = config;
    m.decoder = CellParams::zeros(decoder_cell(variant), config.dim, vocab.size());
    m.vocab = std::move(vocab);
    if (variant != ModelVariant::pse) {
        m.encoder = RecurrentWeights::zeros(CellVariant::gru, config.dim);
    }
    m.persons = PersonTable(std::move(individuals), config.dim);

    Rng rng(config.seed, "init");
    init_uniform(m.decoder, rng);
    if (m.encoder) init_uniform(*m.encoder, rng);
    for (double& x : m.persons.table().data()) x = rng.uniform(-kInitScale, kInitScale);
    return m;
}

std::vector<TrainingSample> training_samples(const Model& model, const Corpus& corpus) {
    std::vector<TrainingSample> out;
    if (model.variant == ModelVariant::pse) {
        for (const auto& dialogue : corpus.dialogues()) {
            for (const auto& turn : dialogue.turns) {
                out.push_back(TrainingSample{{}, turn.tokens, model.persons.index_of(turn.speaker),
                                             kNoPerson});
            }
        }
    } else {
        for (const auto& ex : corpus.exchanges()) {
            out.push_back(TrainingSample{ex.message.tokens, ex.response.tokens,
                                         model.persons.index_of(ex.response.speaker),
                                         model.persons.index_of(ex.message.speaker)});
        }
    }
    return out;
}

namespace {

std::vector<StepRecord> run_encoder(const Model& model, std::span<const TokenId> message) {
    if (!model.encoder) throw std::logic_error("model has no message encoder");
    if (message.empty()) throw std::invalid_argument("encode_message: empty message");
    std::vector<StepRecord> steps;
    steps.reserve(message.size());
    Vector h(model.dim(), 0.0);
    for (TokenId tok : message) {
        if (tok >= model.decoder.vocab()) {
            throw std::out_of_range("encode_message: token id outside vocabulary");
        }
        steps.push_back(gru_step(*model.encoder, model.decoder.word_emb.row(tok), h));
        h = steps.back().h;
    }
    return steps;
}

}  // namespace

Vector encode_message(const Model& model, std::span<const TokenId> message) {
    return run_encoder(model, message).back().h;
}

ExchangeTape forward_sample(const Model& model, const TrainingSample& sample) {
    ExchangeTape tape;
    tape.responder = sample.responder;
    tape.addressee = sample.addressee;
    if (sample.responder >= model.persons.size()) {
        throw std::out_of_range("forward: responder index outside person table");
    }
    const auto u_i = model.persons.row(sample.responder);
    std::span<const double> u_j;
    if (model.variant == ModelVariant::pce) {
        if (sample.addressee >= model.persons.size()) {
            throw std::out_of_range("forward: addressee index outside person table");
        }
        u_j = model.persons.row(sample.addressee);
    }

    Vector h0;
    if (model.variant != ModelVariant::pse) {
        tape.message.assign(sample.message.begin(), sample.message.end());
        tape.encoder_steps = run_encoder(model, sample.message);
        h0 = tape.encoder_steps.back().h;
    }
    tape.decoder = run_sequence(model.decoder, sample.response, u_i, u_j, h0);
    tape.loss = tape.decoder.loss;
    return tape;
}

ExchangeTape forward_exchange(const Model& model, const Exchange& exchange) {
    TrainingSample sample{exchange.message.tokens, exchange.response.tokens,
                          model.persons.index_of(exchange.response.speaker), kNoPerson};
    if (model.variant == ModelVariant::pce) {
        sample.addressee = model.persons.index_of(exchange.message.speaker);
    }
    return forward_sample(model, sample);
}

Gradients Gradients::zeros_like(const Model& model) {
    Gradients g;
    g.decoder = RecurrentWeights::zeros(model.decoder.cell.variant, model.dim());
    if (model.encoder) g.encoder = RecurrentWeights::zeros(CellVariant::gru, model.dim());
    g.out_proj = Matrix(model.decoder.out_proj.rows(), model.decoder.out_proj.cols());
    g.out_bias.assign(model.decoder.out_bias.size(), 0.0);
    return g;
}

namespace {

void add_matrix(Matrix& dst, const Matrix& src) { axpy(1.0, src.data(), dst.data()); }

double sum_squares(std::span<const double> v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return s;
}

void add_person(std::map<std::size_t, Vector>& persons, std::size_t index,
                std::span<const double> grad) {
    auto [it, inserted] = persons.try_emplace(index, grad.begin(), grad.end());
    if (!inserted) axpy(1.0, grad, it->second);
}

}  // namespace

void Gradients::accumulate(const Gradients& other) {
    for (Weight k : kAllWeights) {
        if (decoder.has(k)) add_matrix(decoder[k], other.decoder[k]);
    }
    if (encoder && other.encoder) {
        for (Weight k : kAllWeights) {
            if (encoder->has(k)) add_matrix((*encoder)[k], (*other.encoder)[k]);
        }
    }
    for (const auto& [tok, row] : other.word_emb_rows) accumulate_word_row(word_emb_rows, tok, row);
    add_matrix(out_proj, other.out_proj);
    axpy(1.0, other.out_bias, out_bias);
    for (const auto& [idx, row] : other.persons) add_person(persons, idx, row);
}

double Gradients::global_norm() const {
    double s = 0.0;
    decoder.for_each([&](Weight, const Matrix& m) { s += sum_squares(m.data()); });
    if (encoder) encoder->for_each([&](Weight, const Matrix& m) { s += sum_squares(m.data()); });
    for (const auto& [tok, row] : word_emb_rows) s += sum_squares(row);
    s += sum_squares(out_proj.data());
    s += sum_squares(out_bias);
    for (const auto& [idx, row] : persons) s += sum_squares(row);
    return std::sqrt(s);
}

Gradients backward_exchange(const Model& model, const ExchangeTape& tape) {
    Gradients g;
    const auto d_logits = loss_logit_grads(tape.decoder);
    CellGrads cg = cell_backward(model.decoder, tape.decoder, {}, d_logits);

    g.decoder = std::move(cg.cell);
    g.word_emb_rows = std::move(cg.word_emb_rows);
    g.out_proj = std::move(cg.out_proj);
    g.out_bias = std::move(cg.out_bias);
    if (!cg.d_u_i.empty()) add_person(g.persons, tape.responder, cg.d_u_i);
    if (!cg.d_u_j.empty()) add_person(g.persons, tape.addressee, cg.d_u_j);

    if (model.encoder) {
        g.encoder = RecurrentWeights::zeros(CellVariant::gru, model.dim());
        Vector d_h = std::move(cg.d_h0);
        for (std::size_t t = tape.encoder_steps.size(); t-- > 0;) {
            StepGrads sg = step_backward(*model.encoder, tape.encoder_steps[t], {}, {}, d_h,
                                         *g.encoder, {}, {});
            accumulate_word_row(g.word_emb_rows, tape.message[t], sg.d_x);
            d_h = std::move(sg.d_h_prev);
        }
    }
    return g;
}

void sgd_update(Model& model, const Gradients& grads, double learning_rate) {
    const double norm = grads.global_norm();
    double step = learning_rate;
    if (norm > model.config.grad_clip) step *= model.config.grad_clip / norm;
    if (step == 0.0) return;

    auto apply = [step](Matrix& param, const Matrix& grad) {
        axpy(-step, grad.data(), param.data());
    };
    for (Weight k : kAllWeights) {
        if (model.decoder.cell.has(k)) apply(model.decoder.cell[k], grads.decoder[k]);
    }
    if (model.encoder && grads.encoder) {
        for (Weight k : kAllWeights) {
            if (model.encoder->has(k)) apply((*model.encoder)[k], (*grads.encoder)[k]);
        }
    }
    for (const auto& [tok, row] : grads.word_emb_rows) {
        axpy(-step, row, model.decoder.word_emb.row(tok));
    }
    apply(model.decoder.out_proj, grads.out_proj);
    axpy(-step, grads.out_bias, model.decoder.out_bias);
    for (const auto& [idx, row] : grads.persons) axpy(-step, row, model.persons.row(idx));
}

double evaluate_loss(const Model& model, std::span<const TrainingSample> samples) {
    if (samples.empty()) return 0.0;
    double total = 0.0;
    for (const auto& s : samples) total += forward_sample(model, s).loss;
    return total / static_cast<double>(samples.size());
}

void train_model(Model& model, const Corpus& corpus, const EpochObserver& observer) {
    const auto samples = training_samples(model, corpus);
    if (samples.empty()) throw std::invalid_argument("train: empty training set");

    std::vector<std::size_t> order(samples.size());
    for (std::size_t epoch = 0; epoch < model.config.max_epochs; ++epoch) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        Rng rng(model.config.seed, "shuffle", model.loss_history.size());
        rng.shuffle(std::span(order));

        double total = 0.0;
        for (std::size_t idx : order) {
            const ExchangeTape tape = forward_sample(model, samples[idx]);
            total += tape.loss;
            sgd_update(model, backward_exchange(model, tape), model.config.learning_rate);
        }
        const double mean = total / static_cast<double>(samples.size());
        model.loss_history.push_back(mean);
        if (observer) observer(model.loss_history.size() - 1, mean);

        if (model.loss_history.size() >= 2) {
            const double prev = model.loss_history[model.loss_history.size() - 2];
            if ((prev - mean) / prev < model.config.convergence_tol) break;
        }
    }
}

Model train(ModelVariant variant, const Corpus& corpus, const Vocabulary& vocab,
            const TrainingConfig& config, const EpochObserver& observer) {
    Model model = Model::create(variant, config, vocab, corpus.individuals());
    train_model(model, corpus, observer);
    return model;
}

Vector get_embedding(const Model& model, const std::string& id) {
    const auto row = model.persons.get(id);
    return Vector(row.begin(), row.end());
}

EmbeddingMap embeddings(const Model& model) {
    EmbeddingMap out;
    for (std::size_t i = 0; i < model.persons.size(); ++i) {
        const auto row = model.persons.row(i);
        out.emplace(model.persons.ids()[i], Vector(row.begin(), row.end()));
    }
    return out;
}

}  // namespace dyadic
