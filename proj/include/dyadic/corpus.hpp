#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace dyadic {

using TokenId = std::uint32_t;

inline constexpr TokenId kBos = 0;
inline constexpr TokenId kEos = 1;
inline constexpr TokenId kUnk = 2;
inline constexpr std::size_t kDefaultVocabCap = 5000;
inline constexpr std::size_t kNumTraits = 5;

/// Input file could not be parsed. `line()` is 1-based, 0 when not line-oriented.
class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& what, std::size_t line)
        : std::runtime_error(line ? "line " + std::to_string(line) + ": " + what : what),
          line_(line) {}
    std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

/// An individual id was referenced that the corpus, model or label set does not know.
class UnknownIndividual : public std::out_of_range {
public:
    explicit UnknownIndividual(const std::string& id)
        : std::out_of_range("unknown individual '" + id + "'"), id_(id) {}
    const std::string& id() const { return id_; }

private:
    std::string id_;
};

/// Lowercases, splits on whitespace and detaches each of .,!?;:'" as its own token.
std::vector<std::string> tokenize(std::string_view text);

class Vocabulary {
public:
    /// Specials only.
    explicit Vocabulary(std::size_t cap = kDefaultVocabCap);

    /// Keeps the (cap - 3) most frequent types; ties broken lexicographically.
    static Vocabulary build(std::span<const std::vector<std::string>> tokenized_sentences,
                            std::size_t cap = kDefaultVocabCap);

    /// From an id-ordered token list whose first three entries are the specials.
    static Vocabulary from_tokens(std::vector<std::string> tokens,
                                  std::size_t cap = kDefaultVocabCap);

    static Vocabulary load(const std::filesystem::path& path);
    void save(const std::filesystem::path& path) const;

    TokenId id(std::string_view token) const;
    const std::string& token(TokenId id) const;
    std::size_t size() const { return tokens_.size(); }
    std::size_t cap() const { return cap_; }
    const std::vector<std::string>& tokens() const { return tokens_; }

    /// Maps tokens to ids, wrapping in BOS/EOS.
    std::vector<TokenId> encode_sentence(std::span<const std::string> tokens) const;
    std::vector<TokenId> encode(std::span<const std::string> tokens) const;
    std::vector<std::string> decode(std::span<const TokenId> ids) const;

    bool operator==(const Vocabulary& other) const { return tokens_ == other.tokens_; }

private:
    void index_tokens();

    std::size_t cap_;
    std::vector<std::string> tokens_;
    std::unordered_map<std::string, TokenId> ids_;
};

struct Turn {
    std::string speaker;
    std::vector<TokenId> tokens;  // BOS ... EOS
};

struct Dialogue {
    std::string id;
    std::vector<Turn> turns;
};

struct Utterance {
    std::string speaker;
    std::string addressee;
    std::vector<TokenId> tokens;
    std::size_t ordinal = 0;
    std::size_t dialogue = 0;
};

/// message spoken by u_j, response by u_i.
struct Exchange {
    Utterance message;
    Utterance response;
};

/// Every adjacent pair of turns with distinct speakers yields one exchange.
std::vector<Exchange> pair_exchanges(const Dialogue& dialogue, std::size_t dialogue_index = 0);

class Corpus {
public:
    Corpus() = default;
    explicit Corpus(std::vector<Dialogue> dialogues, std::size_t skipped_dialogues = 0);

    const std::vector<Dialogue>& dialogues() const { return dialogues_; }
    const std::vector<Exchange>& exchanges() const { return exchanges_; }
    /// Sorted ids of everyone who speaks at least once.
    const std::vector<std::string>& individuals() const { return individuals_; }
    bool has_individual(const std::string& id) const { return counts_.contains(id); }
    std::size_t utterance_count(const std::string& id) const;
    std::size_t total_utterances() const;
    std::size_t skipped_dialogues() const { return skipped_; }

    /// All utterances spoken by `id`, ordered by (dialogue index, ordinal). The addressee is the
    /// speaker of the following turn when distinct, else of the preceding one.
    std::vector<Utterance> utterances_of(const std::string& id) const;

    /// Every utterance in the corpus, in dialogue order.
    std::vector<Utterance> all_utterances() const;

private:
    std::vector<Dialogue> dialogues_;
    std::vector<Exchange> exchanges_;
    std::vector<std::string> individuals_;
    std::map<std::string, std::size_t> counts_;
    std::size_t skipped_ = 0;
};

/// One dialogue as it appears in the JSONL corpus file, before tokenization.
struct RawTurn {
    std::string speaker;
    std::string text;
};

struct RawDialogue {
    std::string id;
    std::vector<RawTurn> turns;
};

std::vector<RawDialogue> parse_jsonl(std::istream& in);
void write_jsonl(std::ostream& out, std::span<const RawDialogue> dialogues);

/// Tokenizes and id-encodes raw dialogues, building a vocabulary when none is given.
/// Dialogues with fewer than two turns are skipped and counted.
std::pair<Corpus, Vocabulary> build_corpus(std::span<const RawDialogue> raw,
                                           const std::optional<Vocabulary>& vocab = std::nullopt,
                                           std::size_t vocab_cap = kDefaultVocabCap);

std::pair<Corpus, Vocabulary> load_corpus(const std::filesystem::path& path,
                                          const std::optional<Vocabulary>& vocab = std::nullopt,
                                          std::size_t vocab_cap = kDefaultVocabCap);

/// Convenience: the token lists of every turn, for vocabulary building.
std::vector<std::vector<std::string>> tokenize_all(std::span<const RawDialogue> raw);

/// Binary Big Five labels ordered (E, A, C, N, O).
using TraitBits = std::array<int, kNumTraits>;
using LabelSet = std::map<std::string, TraitBits>;

inline constexpr std::array<const char*, kNumTraits> kTraitNames = {"E", "A", "C", "N", "O"};

LabelSet read_labels(std::istream& in);
LabelSet read_labels(const std::filesystem::path& path);
void write_labels(std::ostream& out, const LabelSet& labels);

/// Throws UnknownIndividual for the first labeled id that the corpus lacks.
void validate_labels(const LabelSet& labels, const Corpus& corpus);

/// Deterministic shuffle of the sorted ids; the first ceil(ratio * n) become the training set.
std::pair<std::vector<std::string>, std::vector<std::string>> split_individuals(
    std::span<const std::string> individuals, double ratio, std::uint64_t seed);
std::pair<std::vector<std::string>, std::vector<std::string>> split_individuals(
    const Corpus& corpus, double ratio, std::uint64_t seed);

inline constexpr std::size_t kDefaultInclusionMinSentences = 50;
inline constexpr std::size_t kDefaultConsistencyMinSentences = 100;

/// First ceil(n/2) utterances vs the rest; nullopt when the individual has fewer than
/// `min_sentences` utterances.
std::optional<std::pair<std::vector<Utterance>, std::vector<Utterance>>> chronological_halves(
    const Corpus& corpus, const std::string& id,
    std::size_t min_sentences = kDefaultConsistencyMinSentences);

struct SynthSpec {
    std::size_t n_individuals = 20;
    std::size_t n_dialogues = 60;
    std::size_t turns_per_dialogue = 10;
    std::size_t vocab_size = 100;
    double signal_strength = 0.8;
    std::uint64_t seed = 0;
};

struct SynthCorpus {
    std::vector<RawDialogue> raw;
    Corpus corpus;
    Vocabulary vocab;
    LabelSet labels;
};

/// Dyadic corpus with planted persona signal. Each individual draws five fair-coin traits;
/// with probability signal_strength a token comes from a trait word pool of the speaker (0.7)
/// or the addressee (0.3), otherwise from a Zipfian background. Responses copy one message
/// content token with probability 0.5 * signal_strength.
SynthCorpus synth_corpus(const SynthSpec& spec);

/// The word pool index a synthetic token belongs to: trait * 2 + value, or -1 for background.
int synth_pool_of(std::string_view token, std::size_t vocab_size);

}  // namespace dyadic
