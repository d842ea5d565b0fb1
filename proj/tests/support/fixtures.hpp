#pragma once

#include <string>
#include <utility>
#include <vector>

#include "dyadic/corpus.hpp"

namespace fixtures {

/// One dialogue per entry; each turn is "speaker: text".
inline std::vector<dyadic::RawDialogue> dialogues(
    const std::vector<std::vector<std::pair<std::string, std::string>>>& spec) {
    std::vector<dyadic::RawDialogue> out;
    for (std::size_t d = 0; d < spec.size(); ++d) {
        dyadic::RawDialogue dlg{"d" + std::to_string(d), {}};
        for (const auto& [speaker, text] : spec[d]) dlg.turns.push_back({speaker, text});
        out.push_back(std::move(dlg));
    }
    return out;
}

inline std::pair<dyadic::Corpus, dyadic::Vocabulary> corpus(
    const std::vector<std::vector<std::pair<std::string, std::string>>>& spec) {
    const auto raw = dialogues(spec);
    return dyadic::build_corpus(raw);
}

/// Two speakers alternating through the given lines, starting with A.
inline std::pair<dyadic::Corpus, dyadic::Vocabulary> alternating(
    const std::vector<std::string>& lines) {
    std::vector<std::pair<std::string, std::string>> turns;
    for (std::size_t i = 0; i < lines.size(); ++i) turns.emplace_back(i % 2 ? "B" : "A", lines[i]);
    return corpus({turns});
}

}  // namespace fixtures
