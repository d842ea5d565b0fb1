#include <cstdio>
#include <filesystem>
#include <fstream>
#include <future>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "dyadic/baselines.hpp"
#include "dyadic/checkpoint.hpp"
#include "dyadic/corpus.hpp"
#include "dyadic/eval.hpp"
#include "dyadic/gradcheck.hpp"
#include "dyadic/personality.hpp"
#include "dyadic/seq2seq.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace dyadic;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

/// Config files are INI-style key=value lines unless the first non-blank character is '{'.
class KeyValueOrJson : public CLI::ConfigBase {
public:
    std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
        std::string text((std::istreambuf_iterator<char>(input)), std::istreambuf_iterator<char>());
        const auto first = text.find_first_not_of(" \t\r\n");
        if (first == std::string::npos || text[first] != '{') {
            std::istringstream again(text);
            std::vector<CLI::ConfigItem> items;
            for (auto& item : CLI::ConfigBase::from_config(again)) {
                if (item.name != "++" && item.name != "--") items.push_back(std::move(item));
            }
            return items;
        }
        std::vector<CLI::ConfigItem> items;
        flatten(json::parse(text), {}, items);
        return items;
    }

private:
    static void flatten(const json& j, const std::vector<std::string>& parents,
                        std::vector<CLI::ConfigItem>& items) {
        for (const auto& [key, value] : j.items()) {
            if (value.is_object()) {
                auto next = parents;
                next.push_back(key);
                flatten(value, next, items);
                continue;
            }
            CLI::ConfigItem item;
            item.parents = parents;
            item.name = key;
            if (value.is_array()) {
                for (const auto& v : value) item.inputs.push_back(scalar(v));
            } else {
                item.inputs.push_back(scalar(value));
            }
            items.push_back(std::move(item));
        }
    }

    static std::string scalar(const json& v) {
        if (v.is_string()) return v.get<std::string>();
        if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
        return v.dump();
    }
};

struct Globals {
    std::uint64_t seed = 0;
    std::string config;
    std::string out = ".";
    bool quiet_table = false;
};

/// Values from --config fill every option the command line left unset.
void apply_config(CLI::App& app, CLI::App& sub, const std::string& path) {
    std::ifstream in(path);
    if (!in) throw CLI::FileError::Missing(path);
    std::vector<CLI::ConfigItem> items;
    try {
        items = KeyValueOrJson().from_config(in);
    } catch (const json::exception& e) {
        throw CLI::ConversionError("config file " + path + ": " + e.what());
    }
    for (const auto& item : items) {
        if (!item.parents.empty() && item.parents != std::vector<std::string>{sub.get_name()}) {
            if (!app.get_subcommand_no_throw(item.parents.front())) {
                throw CLI::ConfigError::Extras(item.fullname());
            }
            continue;
        }
        CLI::Option* opt = nullptr;
        for (CLI::App* scope : {&sub, &app}) {
            opt = scope->get_option_no_throw("--" + item.name);
            if (opt) break;
        }
        if (!opt) {
            bool known_elsewhere = false;
            for (const CLI::App* other : app.get_subcommands({})) {
                known_elsewhere = known_elsewhere || other->get_option_no_throw("--" + item.name);
            }
            if (!known_elsewhere) throw CLI::ConfigError::Extras(item.fullname());
            continue;
        }
        if (opt->count() > 0 || opt->get_name() == "--config") continue;
        for (const auto& value : item.inputs) opt->add_result(value);
        opt->run_callback();
    }
}

void ensure_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir)) {
        throw std::runtime_error("cannot create output directory " + dir.string());
    }
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << text;
    if (!out) throw std::runtime_error("failed writing " + path.string());
}

void write_json(const fs::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

std::string fmt_double(double x) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

void emit(const Globals& g, const json& report, const std::string& table) {
    std::cout << report.dump(2) << "\n";
    if (!g.quiet_table && !table.empty()) std::cout << "\n" << table;
}

// ---------------------------------------------------------------------------------------------

struct TrainFlags {
    std::string variant = "pce";
    std::string corpus;
    std::size_t dim = 50;
    double lr = 0.01;
    std::size_t epochs = 100;
    std::size_t vocab = kDefaultVocabCap;
    double clip = 5.0;
    double tol = 1e-4;
    bool verbose = false;

    TrainingConfig config(std::uint64_t seed) const {
        TrainingConfig c;
        c.dim = dim;
        c.learning_rate = lr;
        c.max_epochs = epochs;
        c.vocab_cap = vocab;
        c.grad_clip = clip;
        c.convergence_tol = tol;
        c.seed = seed;
        return c;
    }
};

void add_training_options(CLI::App* cmd, TrainFlags& f) {
    cmd->add_option("--dim", f.dim, "Embedding and hidden dimensionality")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    cmd->add_option("--lr", f.lr, "SGD learning rate")->capture_default_str()->check(CLI::NonNegativeNumber);
    cmd->add_option("--epochs", f.epochs, "Maximum number of epochs")->capture_default_str();
    cmd->add_option("--vocab", f.vocab, "Vocabulary cap including specials")
        ->capture_default_str()
        ->check(CLI::Range(std::size_t{3}, std::size_t{1} << 24));
    cmd->add_option("--clip", f.clip, "Global gradient-norm clipping threshold")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    cmd->add_option("--tol", f.tol, "Relative epoch-loss improvement that stops training")
        ->capture_default_str()
        ->check(CLI::NonNegativeNumber);
    cmd->add_flag("--verbose", f.verbose, "Log per-epoch loss to stderr");
}

json train_flags_json(const TrainFlags& f) {
    return json{{"dim", f.dim}, {"lr", f.lr},   {"epochs", f.epochs},
                {"vocab", f.vocab}, {"clip", f.clip}, {"tol", f.tol}};
}

EpochObserver progress(bool verbose, const std::string& tag) {
    if (!verbose) return {};
    return [tag](std::size_t epoch, double loss) {
        std::fprintf(stderr, "[%s] epoch %zu loss %.6f\n", tag.c_str(), epoch, loss);
    };
}

// ---------------------------------------------------------------------------------------------

struct SynthFlags {
    std::size_t individuals = 20;
    std::size_t dialogues = 60;
    std::size_t turns = 10;
    std::size_t vocab = 100;
    double signal = 0.8;
};

int cmd_synth(const Globals& g, const SynthFlags& f) {
    SynthSpec spec;
    spec.n_individuals = f.individuals;
    spec.n_dialogues = f.dialogues;
    spec.turns_per_dialogue = f.turns;
    spec.vocab_size = f.vocab;
    spec.signal_strength = f.signal;
    spec.seed = g.seed;
    const SynthCorpus s = synth_corpus(spec);

    const fs::path out(g.out);
    ensure_dir(out);
    {
        std::ofstream corpus(out / "corpus.jsonl", std::ios::binary);
        if (!corpus) throw std::runtime_error("cannot write " + (out / "corpus.jsonl").string());
        write_jsonl(corpus, s.raw);
    }
    {
        std::ofstream labels(out / "labels.csv", std::ios::binary);
        if (!labels) throw std::runtime_error("cannot write " + (out / "labels.csv").string());
        write_labels(labels, s.labels);
    }
    const json config{{"command", "synth"},       {"seed", g.seed},
                      {"individuals", f.individuals}, {"dialogues", f.dialogues},
                      {"turns", f.turns},         {"vocab", f.vocab},
                      {"signal", f.signal}};
    write_json(out / "config.json", config);
    emit(g,
         json{{"corpus", (out / "corpus.jsonl").string()},
              {"labels", (out / "labels.csv").string()},
              {"dialogues", s.raw.size()},
              {"individuals", s.corpus.individuals().size()},
              {"exchanges", s.corpus.exchanges().size()},
              {"labeled", s.labels.size()}},
         "");
    return kExitOk;
}

// ---------------------------------------------------------------------------------------------

std::pair<Corpus, Vocabulary> read_corpus(const std::string& path, std::size_t vocab_cap) {
    auto loaded = load_corpus(path, std::nullopt, vocab_cap);
    if (loaded.first.skipped_dialogues() > 0) {
        std::fprintf(stderr, "warning: skipped %zu dialogue(s) with fewer than 2 turns\n",
                     loaded.first.skipped_dialogues());
    }
    return loaded;
}

int cmd_train(const Globals& g, const TrainFlags& f) {
    const ModelVariant variant = model_variant_from_string(f.variant);
    const auto [corpus, vocab] = read_corpus(f.corpus, f.vocab);
    const Model model = train(variant, corpus, vocab, f.config(g.seed), progress(f.verbose, f.variant));

    const fs::path out(g.out);
    ensure_dir(out);
    save_checkpoint(out / "model.json", model);
    vocab.save(out / "vocab.txt");
    std::string csv = "epoch,loss\n";
    for (std::size_t e = 0; e < model.loss_history.size(); ++e) {
        csv += std::to_string(e) + "," + fmt_double(model.loss_history[e]) + "\n";
    }
    write_text(out / "loss_history.csv", csv);
    json config = train_flags_json(f);
    config["command"] = "train";
    config["variant"] = f.variant;
    config["corpus"] = f.corpus;
    config["seed"] = g.seed;
    write_json(out / "config.json", config);

    emit(g,
         json{{"variant", f.variant},
              {"checkpoint", (out / "model.json").string()},
              {"epochs_run", model.loss_history.size()},
              {"initial_loss", model.loss_history.front()},
              {"final_loss", model.loss_history.back()},
              {"individuals", model.persons.size()},
              {"vocab_size", vocab.size()}},
         "");
    return kExitOk;
}

// ---------------------------------------------------------------------------------------------

struct HeadFlags {
    double lr = 0.05;
    std::size_t epochs = 500;
};

void add_head_options(CLI::App* cmd, HeadFlags& h) {
    cmd->add_option("--head-lr", h.lr, "Personality head learning rate")->capture_default_str();
    cmd->add_option("--head-epochs", h.epochs, "Personality head epochs")->capture_default_str();
}

struct EvalFlags {
    std::string checkpoint;
    std::string labels;
    std::optional<std::uint64_t> split_seed;
    double split_ratio = 0.8;
    HeadFlags head;
};

int cmd_eval(const Globals& g, const EvalFlags& f) {
    const Checkpoint ckpt = load_checkpoint(f.checkpoint);
    const LabelSet labels = read_labels(fs::path(f.labels));
    const std::uint64_t split_seed = f.split_seed.value_or(g.seed);
    const auto [train_ids, test_ids] =
        split_individuals(std::span<const std::string>(ckpt.model.persons.ids()), f.split_ratio, split_seed);
    HeadConfig hc;
    hc.learning_rate = f.head.lr;
    hc.epochs = f.head.epochs;
    hc.seed = g.seed;
    HeadParams head;
    const AccuracyReport report =
        evaluate_embeddings(embeddings(ckpt.model), labels, train_ids, test_ids, hc, &head);

    const fs::path out(g.out);
    ensure_dir(out);
    const std::string variant(to_string(ckpt.model.variant));
    json j{{"variant", variant},
           {"split_seed", split_seed},
           {"n_train", train_ids.size()},
           {"n_test", test_ids.size()},
           {"test_ids", test_ids},
           {"accuracy", to_json(report)}};
    write_json(out / "eval_report.json", j);
    save_checkpoint(out / "model_with_head.json", ckpt.model, &head);
    write_json(out / "config.json",
               json{{"command", "eval"},
                    {"checkpoint", f.checkpoint},
                    {"labels", f.labels},
                    {"split_seed", split_seed},
                    {"split_ratio", f.split_ratio},
                    {"head_lr", f.head.lr},
                    {"head_epochs", f.head.epochs},
                    {"seed", g.seed}});
    emit(g, j, format_table({{variant, report}}));
    return kExitOk;
}

// ---------------------------------------------------------------------------------------------

struct CompareFlags {
    std::string corpus;
    std::string labels;
    std::size_t seeds = 1;
    std::vector<std::string> methods = {"bow", "pse", "pre", "pce"};
    double split_ratio = 0.8;
    std::size_t jobs = 1;
    TrainFlags train;
    HeadFlags head;
};

int cmd_compare(const Globals& g, const CompareFlags& f) {
    const auto [corpus, vocab] = read_corpus(f.corpus, f.train.vocab);
    const LabelSet labels = read_labels(fs::path(f.labels));

    CompareConfig base;
    base.train = f.train.config(g.seed);
    base.head.learning_rate = f.head.lr;
    base.head.epochs = f.head.epochs;
    base.split_ratio = f.split_ratio;
    base.methods = f.methods;

    std::vector<CompareReport> reports(f.seeds);
    std::vector<CompareConfig> configs(f.seeds, base);
    for (std::size_t i = 0; i < f.seeds; ++i) configs[i].seed = g.seed + i;

    // each seed is an independent job; results land in their own slot
    const std::size_t jobs = std::max<std::size_t>(1, f.jobs);
    for (std::size_t start = 0; start < f.seeds; start += jobs) {
        std::vector<std::future<CompareReport>> batch;
        for (std::size_t i = start; i < std::min(f.seeds, start + jobs); ++i) {
            batch.push_back(std::async(jobs > 1 ? std::launch::async : std::launch::deferred,
                                       [&, i] { return compare_methods(corpus, vocab, labels, configs[i]); }));
        }
        for (std::size_t k = 0; k < batch.size(); ++k) {
            reports[start + k] = batch[k].get();
            if (f.train.verbose) std::fprintf(stderr, "seed %zu done\n", start + k);
        }
    }

    std::map<std::string, AccuracyReport> mean;
    json runs = json::array();
    for (std::size_t i = 0; i < f.seeds; ++i) {
        runs.push_back(to_json(reports[i], configs[i]));
        for (const auto& [name, acc] : reports[i].methods) {
            AccuracyReport& m = mean[name];
            for (std::size_t k = 0; k < kNumTraits; ++k) {
                m.per_trait[k] += acc.per_trait[k] / static_cast<double>(f.seeds);
            }
            m.overall += acc.overall / static_cast<double>(f.seeds);
            m.n_individuals = acc.n_individuals;
        }
    }
    json mean_json = json::object();
    for (const auto& [name, acc] : mean) mean_json[name] = to_json(acc);

    std::vector<std::uint64_t> seed_list;
    for (const auto& c : configs) seed_list.push_back(c.seed);
    const json report{{"seeds", seed_list},
                      {"config", to_json(base)},
                      {"runs", std::move(runs)},
                      {"mean", std::move(mean_json)}};

    const fs::path out(g.out);
    ensure_dir(out);
    write_json(out / "compare_report.json", report);
    json config = train_flags_json(f.train);
    config.update(json{{"command", "compare"},
                       {"corpus", f.corpus},
                       {"labels", f.labels},
                       {"seeds", f.seeds},
                       {"seed", g.seed},
                       {"methods", f.methods},
                       {"split_ratio", f.split_ratio},
                       {"head_lr", f.head.lr},
                       {"head_epochs", f.head.epochs}});
    write_json(out / "config.json", config);
    emit(g, report, format_table(mean));
    return kExitOk;
}

// ---------------------------------------------------------------------------------------------

struct RetrieveFlags {
    std::string checkpoint;
    std::string query;
    std::size_t k = 5;
};

int cmd_retrieve(const Globals& g, const RetrieveFlags& f) {
    const Checkpoint ckpt = load_checkpoint(f.checkpoint);
    const auto neighbors = retrieve(embeddings(ckpt.model), f.query, f.k);
    json list = json::array();
    std::string table = "rank  id                    distance\n";
    for (std::size_t i = 0; i < neighbors.size(); ++i) {
        list.push_back(json{{"id", neighbors[i].id}, {"distance", neighbors[i].distance}});
        char buf[128];
        std::snprintf(buf, sizeof(buf), "%4zu  %-20s %10.6f\n", i + 1, neighbors[i].id.c_str(),
                      neighbors[i].distance);
        table += buf;
    }
    const json report{{"query", f.query}, {"k", f.k}, {"neighbors", std::move(list)}};
    const fs::path out(g.out);
    ensure_dir(out);
    write_json(out / "retrieve_report.json", report);
    write_json(out / "config.json", json{{"command", "retrieve"},
                                         {"checkpoint", f.checkpoint},
                                         {"query", f.query},
                                         {"k", f.k}});
    emit(g, report, table);
    return kExitOk;
}

// ---------------------------------------------------------------------------------------------

struct ConsistencyFlags {
    std::size_t min_sentences = kDefaultConsistencyMinSentences;
    TrainFlags train;
};

int cmd_consistency(const Globals& g, const ConsistencyFlags& f) {
    const auto [corpus, vocab] = read_corpus(f.train.corpus, f.train.vocab);
    ConsistencyReport report;
    if (f.train.variant == "bow") {
        report = bow_consistency(corpus, vocab, f.min_sentences);
    } else {
        report = consistency_eval(corpus, vocab, model_variant_from_string(f.train.variant),
                                  f.train.config(g.seed), f.min_sentences);
    }
    const json j{{"variant", f.train.variant}, {"consistency", to_json(report)}};
    const fs::path out(g.out);
    ensure_dir(out);
    write_json(out / "consistency_report.json", j);
    json config = train_flags_json(f.train);
    config.update(json{{"command", "consistency"},
                       {"corpus", f.train.corpus},
                       {"variant", f.train.variant},
                       {"min_sentences", f.min_sentences},
                       {"seed", g.seed}});
    write_json(out / "config.json", config);

    char buf[160];
    std::snprintf(buf, sizeof(buf), "variant  recall    rmse      n\n%-8s %.4f    %-9s %zu\n",
                  f.train.variant.c_str(), report.recall,
                  report.rmse ? fmt_double(*report.rmse).substr(0, 8).c_str() : "-", report.n_individuals);
    emit(g, j, buf);
    return kExitOk;
}

// ---------------------------------------------------------------------------------------------

struct GradcheckFlags {
    std::string variant = "all";
    std::size_t dim = 3;
    std::size_t vocab = 6;
    std::size_t length = 4;
    bool inject_fault = false;
};

int cmd_gradcheck(const Globals& g, const GradcheckFlags& f) {
    GradcheckOptions o;
    o.dim = f.dim;
    o.vocab = f.vocab;
    o.message_length = f.length;
    o.response_length = f.length;
    o.seed = g.seed;

    std::vector<std::string> variants;
    if (f.variant == "all") {
        variants = {"rnn", "gru", "pse", "pre", "pce", "head"};
    } else {
        variants = {f.variant};
    }
    const GradientFault fault = f.inject_fault ? GradientFault([](Gradients& grads) {
        for (double& x : grads.out_proj.data()) x *= 1.01;
    })
                                               : GradientFault{};

    json results = json::object();
    bool passed = true;
    std::string table = "variant  group            max_rel_error\n";
    for (const auto& v : variants) {
        GradcheckResult r;
        if (v == "rnn" || v == "gru") {
            r = gradcheck_cell(cell_variant_from_string(v), o);
        } else if (v == "head") {
            r = gradcheck_head(o);
        } else {
            r = gradcheck_model(model_variant_from_string(v), o, fault);
        }
        passed = passed && r.passed();
        json groups = json::object();
        for (const auto& [name, err] : r.max_rel_error) {
            groups[name] = err;
            char buf[128];
            std::snprintf(buf, sizeof(buf), "%-8s %-16s %.3e%s\n", v.c_str(), name.c_str(), err,
                          err <= kGradcheckTolerance ? "" : "  FAIL");
            table += buf;
        }
        results[v] = json{{"groups", std::move(groups)}, {"worst", r.worst}, {"passed", r.passed()}};
    }
    const json report{{"epsilon", kGradcheckEpsilon},
                      {"tolerance", kGradcheckTolerance},
                      {"dim", f.dim},
                      {"seed", g.seed},
                      {"results", std::move(results)},
                      {"passed", passed}};
    emit(g, report, table);
    return passed ? kExitOk : kExitRuntime;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Personal conversational embeddings: training, evaluation and gradient checks"};
    app.require_subcommand(1);
    app.fallthrough();
    app.option_defaults()->always_capture_default();

    Globals g;
    std::vector<std::pair<CLI::App*, CLI::Option*>> needed;  // may also come from --config, so checked after it
    app.add_option("--seed", g.seed, "Master random seed")->capture_default_str();
    app.add_option("--config", g.config, "key=value or JSON file with option defaults")
        ->check(CLI::ExistingFile);
    app.add_option("--out", g.out, "Output directory")->capture_default_str();
    app.add_flag("--no-table", g.quiet_table, "Print only the JSON report");

    SynthFlags synth;
    auto* c_synth = app.add_subcommand("synth", "Generate a synthetic labeled corpus");
    c_synth->add_option("--individuals", synth.individuals)->capture_default_str()->check(CLI::Range(2, 1000000));
    c_synth->add_option("--dialogues", synth.dialogues)->capture_default_str()->check(CLI::PositiveNumber);
    c_synth->add_option("--turns", synth.turns)->capture_default_str()->check(CLI::PositiveNumber);
    c_synth->add_option("--vocab", synth.vocab)->capture_default_str()->check(CLI::Range(20, 1000000));
    c_synth->add_option("--signal", synth.signal, "Signal strength in [0, 1]")
        ->capture_default_str()
        ->check(CLI::Range(0.0, 1.0));

    TrainFlags train_flags;
    auto* c_train = app.add_subcommand("train", "Train a PSE, PRE or PCE model");
    c_train->add_option("--variant", train_flags.variant)
        ->capture_default_str()
        ->check(CLI::IsMember({"pse", "pre", "pce"}));
    needed.emplace_back(c_train, c_train->add_option("--corpus", train_flags.corpus, "Corpus JSONL file"));
    add_training_options(c_train, train_flags);

    EvalFlags eval_flags;
    auto* c_eval = app.add_subcommand("eval", "Train a personality head on a checkpoint and score it");
    needed.emplace_back(c_eval, c_eval->add_option("--checkpoint", eval_flags.checkpoint));
    needed.emplace_back(c_eval, c_eval->add_option("--labels", eval_flags.labels));
    c_eval->add_option("--split-seed", eval_flags.split_seed, "Defaults to --seed");
    c_eval->add_option("--split-ratio", eval_flags.split_ratio)
        ->capture_default_str()
        ->check(CLI::Range(0.0, 1.0));
    add_head_options(c_eval, eval_flags.head);

    CompareFlags cmp;
    auto* c_compare = app.add_subcommand("compare", "Compare BoW, PSE, PRE and PCE across seeds");
    needed.emplace_back(c_compare, c_compare->add_option("--corpus", cmp.corpus));
    needed.emplace_back(c_compare, c_compare->add_option("--labels", cmp.labels));
    c_compare->add_option("--seeds", cmp.seeds, "Number of consecutive seeds from --seed")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    c_compare->add_option("--methods", cmp.methods)
        ->capture_default_str()
        ->delimiter(',')
        ->check(CLI::IsMember({"bow", "pse", "pre", "pce"}));
    c_compare->add_option("--split-ratio", cmp.split_ratio)->capture_default_str()->check(CLI::Range(0.0, 1.0));
    c_compare->add_option("--jobs", cmp.jobs, "Seeds trained in parallel")->capture_default_str();
    add_training_options(c_compare, cmp.train);
    add_head_options(c_compare, cmp.head);

    RetrieveFlags ret;
    auto* c_retrieve = app.add_subcommand("retrieve", "Nearest individuals by embedding distance");
    needed.emplace_back(c_retrieve, c_retrieve->add_option("--checkpoint", ret.checkpoint));
    needed.emplace_back(c_retrieve, c_retrieve->add_option("--query", ret.query));
    c_retrieve->add_option("--k", ret.k)->capture_default_str()->check(CLI::PositiveNumber);

    ConsistencyFlags cons;
    cons.train.variant = "pce";
    auto* c_cons = app.add_subcommand("consistency", "Chronological-halves embedding consistency");
    needed.emplace_back(c_cons, c_cons->add_option("--corpus", cons.train.corpus));
    c_cons->add_option("--variant", cons.train.variant)
        ->capture_default_str()
        ->check(CLI::IsMember({"bow", "pse", "pre", "pce"}));
    c_cons->add_option("--min-sentences", cons.min_sentences)->capture_default_str();
    add_training_options(c_cons, cons.train);

    GradcheckFlags gc;
    auto* c_grad = app.add_subcommand("gradcheck", "Finite-difference gradient checks");
    c_grad->add_option("--variant", gc.variant)
        ->capture_default_str()
        ->check(CLI::IsMember({"all", "rnn", "gru", "pse", "pre", "pce", "head"}));
    c_grad->add_option("--dim", gc.dim)->capture_default_str()->check(CLI::Range(1, 16));
    c_grad->add_option("--vocab", gc.vocab)->capture_default_str()->check(CLI::Range(4, 64));
    c_grad->add_option("--length", gc.length)->capture_default_str()->check(CLI::Range(2, 16));
    c_grad->add_flag("--inject-fault", gc.inject_fault)->group("");

    try {
        app.parse(argc, argv);
        CLI::App* sub = app.get_subcommands().front();
        if (!g.config.empty()) apply_config(app, *sub, g.config);
        for (const auto& [owner, opt] : needed) {
            if (owner == sub && opt->count() == 0) throw CLI::RequiredError(opt->get_name());
        }
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (c_synth->parsed()) return cmd_synth(g, synth);
        if (c_train->parsed()) return cmd_train(g, train_flags);
        if (c_eval->parsed()) return cmd_eval(g, eval_flags);
        if (c_compare->parsed()) return cmd_compare(g, cmp);
        if (c_retrieve->parsed()) return cmd_retrieve(g, ret);
        if (c_cons->parsed()) return cmd_consistency(g, cons);
        if (c_grad->parsed()) return cmd_gradcheck(g, gc);
    } catch (const ParseError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitRuntime;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitRuntime;
    }
    return kExitUsage;
}
