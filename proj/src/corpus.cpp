#include "dyadic/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"

#include "dyadic/rng.hpp"

namespace dyadic {

using nlohmann::json;

namespace {

constexpr std::string_view kPunctuation = ".,!?;:'\"";
constexpr std::array<const char*, 3> kSpecialTokens = {"<bos>", "<eos>", "<unk>"};

}  // namespace

std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> out;
    std::string current;
    auto flush = [&] {
        if (!current.empty()) out.push_back(std::move(current));
        current.clear();
    };
    for (char ch : text) {
        const auto c = static_cast<unsigned char>(ch);
        if (std::isspace(c)) {
            flush();
        } else if (kPunctuation.find(ch) != std::string_view::npos) {
            flush();
            out.emplace_back(1, ch);
        } else {
            current.push_back(static_cast<char>(std::tolower(c)));
        }
    }
    flush();
    return out;
}

// ---------------------------------------------------------------------------------------------
// Vocabulary

Vocabulary::Vocabulary(std::size_t cap) : cap_(std::max<std::size_t>(cap, 3)) {
    tokens_.assign(kSpecialTokens.begin(), kSpecialTokens.end());
    index_tokens();
}

void Vocabulary::index_tokens() {
    ids_.clear();
    for (std::size_t i = 0; i < tokens_.size(); ++i) {
        auto [it, inserted] = ids_.emplace(tokens_[i], static_cast<TokenId>(i));
        if (!inserted) throw ParseError("duplicate vocabulary token '" + tokens_[i] + "'", i + 1);
    }
}

Vocabulary Vocabulary::build(std::span<const std::vector<std::string>> tokenized_sentences,
                             std::size_t cap) {
    Vocabulary vocab(cap);
    std::map<std::string, std::size_t> freq;
    for (const auto& sentence : tokenized_sentences) {
        for (const auto& tok : sentence) ++freq[tok];
    }
    for (const char* special : kSpecialTokens) freq.erase(special);

    std::vector<std::pair<std::string, std::size_t>> ranked(freq.begin(), freq.end());
    // map iteration is already lexicographic, so a stable sort on count keeps the tie order
    std::stable_sort(ranked.begin(), ranked.end(),
                     [](const auto& a, const auto& b) { return a.second > b.second; });
    const std::size_t keep = std::min(ranked.size(), vocab.cap_ - 3);
    for (std::size_t i = 0; i < keep; ++i) vocab.tokens_.push_back(ranked[i].first);
    vocab.index_tokens();
    return vocab;
}

Vocabulary Vocabulary::from_tokens(std::vector<std::string> tokens, std::size_t cap) {
    if (tokens.size() < 3 || tokens[0] != kSpecialTokens[0] || tokens[1] != kSpecialTokens[1] ||
        tokens[2] != kSpecialTokens[2]) {
        throw ParseError("vocabulary must start with <bos>, <eos>, <unk>", 0);
    }
    Vocabulary vocab(std::max(cap, tokens.size()));
    vocab.tokens_ = std::move(tokens);
    vocab.index_tokens();
    return vocab;
}

Vocabulary Vocabulary::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open vocabulary file " + path.string());
    std::vector<std::string> tokens;
    for (std::string line; std::getline(in, line);) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        tokens.push_back(line);
    }
    return from_tokens(std::move(tokens));
}

void Vocabulary::save(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write vocabulary file " + path.string());
    for (const auto& tok : tokens_) out << tok << '\n';
}

TokenId Vocabulary::id(std::string_view token) const {
    auto it = ids_.find(std::string(token));
    return it == ids_.end() ? kUnk : it->second;
}

const std::string& Vocabulary::token(TokenId id) const {
    if (id >= tokens_.size()) {
        throw std::out_of_range("token id " + std::to_string(id) + " outside vocabulary of size " +
                                std::to_string(tokens_.size()));
    }
    return tokens_[id];
}

std::vector<TokenId> Vocabulary::encode(std::span<const std::string> tokens) const {
    std::vector<TokenId> ids;
    ids.reserve(tokens.size());
    for (const auto& tok : tokens) ids.push_back(id(tok));
    return ids;
}

std::vector<TokenId> Vocabulary::encode_sentence(std::span<const std::string> tokens) const {
    std::vector<TokenId> ids;
    ids.reserve(tokens.size() + 2);
    ids.push_back(kBos);
    for (const auto& tok : tokens) ids.push_back(id(tok));
    ids.push_back(kEos);
    return ids;
}

std::vector<std::string> Vocabulary::decode(std::span<const TokenId> ids) const {
    std::vector<std::string> out;
    out.reserve(ids.size());
    for (TokenId id : ids) out.push_back(token(id));
    return out;
}

// ---------------------------------------------------------------------------------------------
// Dialogues and exchanges

std::vector<Exchange> pair_exchanges(const Dialogue& dialogue, std::size_t dialogue_index) {
    std::vector<Exchange> out;
    const auto& turns = dialogue.turns;
    for (std::size_t t = 0; t + 1 < turns.size(); ++t) {
        const Turn& msg = turns[t];
        const Turn& rsp = turns[t + 1];
        if (msg.speaker == rsp.speaker) continue;
        out.push_back(Exchange{
            Utterance{msg.speaker, rsp.speaker, msg.tokens, t, dialogue_index},
            Utterance{rsp.speaker, msg.speaker, rsp.tokens, t + 1, dialogue_index},
        });
    }
    return out;
}

Corpus::Corpus(std::vector<Dialogue> dialogues, std::size_t skipped_dialogues)
    : dialogues_(std::move(dialogues)), skipped_(skipped_dialogues) {
    for (std::size_t d = 0; d < dialogues_.size(); ++d) {
        for (const Turn& turn : dialogues_[d].turns) ++counts_[turn.speaker];
        auto ex = pair_exchanges(dialogues_[d], d);
        exchanges_.insert(exchanges_.end(), std::make_move_iterator(ex.begin()),
                          std::make_move_iterator(ex.end()));
    }
    individuals_.reserve(counts_.size());
    for (const auto& [id, n] : counts_) individuals_.push_back(id);
}

std::size_t Corpus::utterance_count(const std::string& id) const {
    auto it = counts_.find(id);
    return it == counts_.end() ? 0 : it->second;
}

std::size_t Corpus::total_utterances() const {
    std::size_t n = 0;
    for (const auto& [id, c] : counts_) n += c;
    return n;
}

namespace {

std::string addressee_of(const std::vector<Turn>& turns, std::size_t t) {
    if (t + 1 < turns.size() && turns[t + 1].speaker != turns[t].speaker) {
        return turns[t + 1].speaker;
    }
    if (t > 0 && turns[t - 1].speaker != turns[t].speaker) return turns[t - 1].speaker;
    return {};
}

}  // namespace

std::vector<Utterance> Corpus::utterances_of(const std::string& id) const {
    if (!has_individual(id)) throw UnknownIndividual(id);
    std::vector<Utterance> out;
    out.reserve(utterance_count(id));
    for (std::size_t d = 0; d < dialogues_.size(); ++d) {
        const auto& turns = dialogues_[d].turns;
        for (std::size_t t = 0; t < turns.size(); ++t) {
            if (turns[t].speaker != id) continue;
            out.push_back(Utterance{id, addressee_of(turns, t), turns[t].tokens, t, d});
        }
    }
    return out;
}

std::vector<Utterance> Corpus::all_utterances() const {
    std::vector<Utterance> out;
    out.reserve(total_utterances());
    for (std::size_t d = 0; d < dialogues_.size(); ++d) {
        const auto& turns = dialogues_[d].turns;
        for (std::size_t t = 0; t < turns.size(); ++t) {
            out.push_back(Utterance{turns[t].speaker, addressee_of(turns, t), turns[t].tokens, t, d});
        }
    }
    return out;
}

// ---------------------------------------------------------------------------------------------
// JSONL I/O

std::vector<RawDialogue> parse_jsonl(std::istream& in) {
    std::vector<RawDialogue> out;
    std::size_t line_no = 0;
    for (std::string line; std::getline(in, line);) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        json doc;
        try {
            doc = json::parse(line);
        } catch (const json::parse_error& e) {
            throw ParseError(std::string("malformed JSON: ") + e.what(), line_no);
        }
        if (!doc.is_object()) throw ParseError("expected a JSON object", line_no);
        RawDialogue dialogue;
        bool has_turns = false;
        for (const auto& [key, value] : doc.items()) {
            if (key == "dialogue_id") {
                if (!value.is_string()) throw ParseError("dialogue_id must be a string", line_no);
                dialogue.id = value.get<std::string>();
            } else if (key == "turns") {
                if (!value.is_array()) throw ParseError("turns must be an array", line_no);
                has_turns = true;
                for (const auto& turn : value) {
                    if (!turn.is_object()) throw ParseError("turn must be an object", line_no);
                    RawTurn raw;
                    bool has_speaker = false, has_text = false;
                    for (const auto& [tkey, tval] : turn.items()) {
                        if (!tval.is_string()) {
                            throw ParseError("turn field '" + tkey + "' must be a string", line_no);
                        }
                        if (tkey == "speaker") {
                            raw.speaker = tval.get<std::string>();
                            has_speaker = true;
                        } else if (tkey == "text") {
                            raw.text = tval.get<std::string>();
                            has_text = true;
                        } else {
                            throw ParseError("unknown turn field '" + tkey + "'", line_no);
                        }
                    }
                    if (!has_speaker || !has_text) {
                        throw ParseError("turn requires 'speaker' and 'text'", line_no);
                    }
                    if (raw.speaker.empty()) throw ParseError("empty speaker id", line_no);
                    dialogue.turns.push_back(std::move(raw));
                }
            } else {
                throw ParseError("unknown field '" + key + "'", line_no);
            }
        }
        if (!has_turns) throw ParseError("missing 'turns'", line_no);
        out.push_back(std::move(dialogue));
    }
    return out;
}

void write_jsonl(std::ostream& out, std::span<const RawDialogue> dialogues) {
    for (const auto& dialogue : dialogues) {
        json turns = json::array();
        for (const auto& turn : dialogue.turns) {
            turns.push_back(json{{"speaker", turn.speaker}, {"text", turn.text}});
        }
        out << json{{"dialogue_id", dialogue.id}, {"turns", std::move(turns)}}.dump() << '\n';
    }
}

std::vector<std::vector<std::string>> tokenize_all(std::span<const RawDialogue> raw) {
    std::vector<std::vector<std::string>> out;
    for (const auto& dialogue : raw) {
        for (const auto& turn : dialogue.turns) out.push_back(tokenize(turn.text));
    }
    return out;
}

std::pair<Corpus, Vocabulary> build_corpus(std::span<const RawDialogue> raw,
                                           const std::optional<Vocabulary>& vocab,
                                           std::size_t vocab_cap) {
    std::vector<const RawDialogue*> kept;
    std::size_t skipped = 0;
    for (const auto& dialogue : raw) {
        if (dialogue.turns.size() < 2) {
            ++skipped;
        } else {
            kept.push_back(&dialogue);
        }
    }
    std::vector<std::vector<std::string>> tokenized;
    for (const RawDialogue* dialogue : kept) {
        for (const auto& turn : dialogue->turns) tokenized.push_back(tokenize(turn.text));
    }
    Vocabulary v = vocab ? *vocab : Vocabulary::build(tokenized, vocab_cap);

    std::vector<Dialogue> dialogues;
    dialogues.reserve(kept.size());
    std::size_t sentence = 0;
    for (const RawDialogue* dialogue : kept) {
        Dialogue d{dialogue->id, {}};
        for (const auto& turn : dialogue->turns) {
            d.turns.push_back(Turn{turn.speaker, v.encode_sentence(tokenized[sentence++])});
        }
        dialogues.push_back(std::move(d));
    }
    return {Corpus(std::move(dialogues), skipped), std::move(v)};
}

std::pair<Corpus, Vocabulary> load_corpus(const std::filesystem::path& path,
                                          const std::optional<Vocabulary>& vocab,
                                          std::size_t vocab_cap) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open corpus file " + path.string());
    const auto raw = parse_jsonl(in);
    return build_corpus(raw, vocab, vocab_cap);
}

// ---------------------------------------------------------------------------------------------
// Labels

LabelSet read_labels(std::istream& in) {
    LabelSet labels;
    std::string line;
    std::size_t line_no = 0;
    auto next_line = [&]() -> bool {
        while (std::getline(in, line)) {
            ++line_no;
            if (!line.empty() && line.back() == '\r') line.pop_back();
            if (!line.empty()) return true;
        }
        return false;
    };
    if (!next_line() || line != "individual,E,A,C,N,O") {
        throw ParseError("labels header must be 'individual,E,A,C,N,O'", line_no ? line_no : 1);
    }
    while (next_line()) {
        std::vector<std::string> fields;
        std::stringstream ss(line);
        for (std::string field; std::getline(ss, field, ',');) fields.push_back(field);
        if (fields.size() != 1 + kNumTraits) {
            throw ParseError("expected 6 comma-separated fields", line_no);
        }
        TraitBits bits{};
        for (std::size_t k = 0; k < kNumTraits; ++k) {
            if (fields[k + 1] != "0" && fields[k + 1] != "1") {
                throw ParseError("trait values must be 0 or 1", line_no);
            }
            bits[k] = fields[k + 1] == "1" ? 1 : 0;
        }
        if (!labels.emplace(fields[0], bits).second) {
            throw ParseError("duplicate individual '" + fields[0] + "'", line_no);
        }
    }
    return labels;
}

LabelSet read_labels(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open labels file " + path.string());
    return read_labels(in);
}

void write_labels(std::ostream& out, const LabelSet& labels) {
    out << "individual,E,A,C,N,O\n";
    for (const auto& [id, bits] : labels) {
        out << id;
        for (int b : bits) out << ',' << b;
        out << '\n';
    }
}

void validate_labels(const LabelSet& labels, const Corpus& corpus) {
    for (const auto& [id, bits] : labels) {
        if (!corpus.has_individual(id)) throw UnknownIndividual(id);
    }
}

// ---------------------------------------------------------------------------------------------
// Splits

std::pair<std::vector<std::string>, std::vector<std::string>> split_individuals(
    std::span<const std::string> individuals, double ratio, std::uint64_t seed) {
    if (!(ratio > 0.0 && ratio < 1.0)) {
        throw std::invalid_argument("split ratio must lie strictly between 0 and 1");
    }
    if (individuals.size() < 2) {
        throw std::invalid_argument("need at least 2 individuals to split");
    }
    std::vector<std::string> ids(individuals.begin(), individuals.end());
    std::sort(ids.begin(), ids.end());
    Rng rng(seed, "split");
    rng.shuffle(std::span(ids));
    // 1e-9 absorbs representation error, e.g. 0.8 * 10
    auto n_train = static_cast<std::size_t>(std::ceil(ratio * ids.size() - 1e-9));
    n_train = std::clamp<std::size_t>(n_train, 1, ids.size() - 1);
    std::vector<std::string> train(ids.begin(), ids.begin() + n_train);
    std::vector<std::string> test(ids.begin() + n_train, ids.end());
    return {std::move(train), std::move(test)};
}

std::pair<std::vector<std::string>, std::vector<std::string>> split_individuals(
    const Corpus& corpus, double ratio, std::uint64_t seed) {
    return split_individuals(corpus.individuals(), ratio, seed);
}

std::optional<std::pair<std::vector<Utterance>, std::vector<Utterance>>> chronological_halves(
    const Corpus& corpus, const std::string& id, std::size_t min_sentences) {
    auto all = corpus.utterances_of(id);
    if (all.size() < min_sentences || all.size() < 2) return std::nullopt;
    const std::size_t first = (all.size() + 1) / 2;
    std::vector<Utterance> half2(std::make_move_iterator(all.begin() + first),
                                 std::make_move_iterator(all.end()));
    all.resize(first);
    return std::make_pair(std::move(all), std::move(half2));
}

// ---------------------------------------------------------------------------------------------
// Synthetic corpora

namespace {

constexpr double kSpeakerPoolWeight = 0.7;
constexpr std::size_t kMinContentTokens = 4;
constexpr std::size_t kMaxContentTokens = 10;

std::size_t pool_size(std::size_t vocab_size) { return std::max<std::size_t>(1, vocab_size / 20); }

std::string synth_word(std::size_t index) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "w%04zu", index);
    return buf;
}

std::string synth_individual(std::size_t index) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "p%03zu", index);
    return buf;
}

}  // namespace

int synth_pool_of(std::string_view token, std::size_t vocab_size) {
    if (token.size() != 5 || token[0] != 'w') return -1;
    std::size_t index = 0;
    for (char c : token.substr(1)) {
        if (!std::isdigit(static_cast<unsigned char>(c))) return -1;
        index = index * 10 + static_cast<std::size_t>(c - '0');
    }
    const std::size_t p = pool_size(vocab_size);
    if (index >= 2 * kNumTraits * p) return -1;
    return static_cast<int>(index / p);
}

SynthCorpus synth_corpus(const SynthSpec& spec) {
    if (spec.n_individuals < 2 || spec.n_dialogues < 1 || spec.turns_per_dialogue < 1) {
        throw std::invalid_argument("synth: need >= 2 individuals, >= 1 dialogue and >= 1 turn");
    }
    if (spec.vocab_size < 20) throw std::invalid_argument("synth: vocab_size must be >= 20");
    if (!(spec.signal_strength >= 0.0 && spec.signal_strength <= 1.0)) {
        throw std::invalid_argument("synth: signal_strength must lie in [0, 1]");
    }

    Rng rng(spec.seed, "synth");
    const std::size_t p = pool_size(spec.vocab_size);
    const std::size_t n_pool_words = 2 * kNumTraits * p;
    const std::size_t n_background = spec.vocab_size - n_pool_words;

    std::vector<std::string> ids;
    LabelSet labels;
    for (std::size_t i = 0; i < spec.n_individuals; ++i) {
        ids.push_back(synth_individual(i));
        TraitBits bits{};
        for (int& b : bits) b = rng.bernoulli(0.5) ? 1 : 0;
        labels.emplace(ids.back(), bits);
    }

    // Zipfian background: cumulative weights 1/(rank+1).
    std::vector<double> background_cdf(n_background);
    double total = 0.0;
    for (std::size_t r = 0; r < n_background; ++r) {
        total += 1.0 / static_cast<double>(r + 1);
        background_cdf[r] = total;
    }
    auto draw_background = [&] {
        const double x = rng.uniform() * total;
        const auto it = std::upper_bound(background_cdf.begin(), background_cdf.end(), x);
        const auto r = static_cast<std::size_t>(
            std::min<std::ptrdiff_t>(it - background_cdf.begin(), n_background - 1));
        return n_pool_words + r;
    };
    auto draw_pool = [&](const TraitBits& traits) {
        const std::size_t trait = rng.index(kNumTraits);
        const std::size_t pool = trait * 2 + static_cast<std::size_t>(traits[trait]);
        return pool * p + rng.index(p);
    };

    std::vector<RawDialogue> raw;
    raw.reserve(spec.n_dialogues);
    for (std::size_t d = 0; d < spec.n_dialogues; ++d) {
        const std::size_t a = rng.index(spec.n_individuals);
        std::size_t b = rng.index(spec.n_individuals - 1);
        if (b >= a) ++b;
        RawDialogue dialogue{"d" + std::to_string(d), {}};
        std::vector<std::size_t> previous;
        for (std::size_t t = 0; t < spec.turns_per_dialogue; ++t) {
            const std::size_t speaker = t % 2 == 0 ? a : b;
            const std::size_t addressee = t % 2 == 0 ? b : a;
            const std::size_t length =
                kMinContentTokens + rng.index(kMaxContentTokens - kMinContentTokens + 1);
            std::vector<std::size_t> words(length);
            for (auto& w : words) {
                if (rng.bernoulli(spec.signal_strength)) {
                    const bool own = rng.bernoulli(kSpeakerPoolWeight);
                    w = draw_pool(labels.at(ids[own ? speaker : addressee]));
                } else {
                    w = draw_background();
                }
            }
            if (t > 0 && rng.bernoulli(0.5 * spec.signal_strength)) {
                words[rng.index(words.size())] = previous[rng.index(previous.size())];
            }
            std::string text;
            for (std::size_t i = 0; i < words.size(); ++i) {
                if (i) text.push_back(' ');
                text += synth_word(words[i]);
            }
            dialogue.turns.push_back(RawTurn{ids[speaker], std::move(text)});
            previous = std::move(words);
        }
        raw.push_back(std::move(dialogue));
    }

    auto [corpus, vocab] = build_corpus(raw);
    // individuals who never spoke carry no data; keep labels aligned with the corpus
    std::erase_if(labels, [&](const auto& kv) { return !corpus.has_individual(kv.first); });
    return SynthCorpus{std::move(raw), std::move(corpus), std::move(vocab), std::move(labels)};
}

}  // namespace dyadic
