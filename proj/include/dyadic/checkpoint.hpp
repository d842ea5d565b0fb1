#pragma once

#include <filesystem>
#include <optional>
#include <stdexcept>

#include "dyadic/personality.hpp"
#include "dyadic/seq2seq.hpp"

#include "json.hpp"

namespace dyadic {

inline constexpr int kCheckpointFormatVersion = 1;

class CheckpointError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

nlohmann::json to_json(const TrainingConfig& config);
TrainingConfig training_config_from_json(const nlohmann::json& j);

nlohmann::json matrix_to_json(const Matrix& m);
Matrix matrix_from_json(const nlohmann::json& j);

struct Checkpoint {
    Model model;
    std::optional<HeadParams> head;
};

/// {"format_version": 1, "variant", "d", "vocab", "config", "matrices", "persons",
///  "loss_history"[, "head"]}. Doubles are written shortest-round-trip so a reload reproduces
/// forward passes bit for bit.
nlohmann::json checkpoint_to_json(const Model& model, const HeadParams* head = nullptr);
Checkpoint checkpoint_from_json(const nlohmann::json& j);

void save_checkpoint(const std::filesystem::path& path, const Model& model,
                     const HeadParams* head = nullptr);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace dyadic
