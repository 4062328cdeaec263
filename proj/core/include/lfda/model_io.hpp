#pragma once

#include "lfda/lfda.hpp"

#include <filesystem>
#include <string>

namespace lfda {

inline constexpr int kModelFormatVersion = 1;

/// JSON document holding everything predict and rank need: hyperparameters,
/// preprocessing statistics, the projection, per-class mixtures and selected
/// clusters, the labeled reference set and the convergence trace. Doubles are
/// written with round-trip precision.
std::string model_to_json(const TrainedModel& model);

/// Throws FormatError on malformed documents or an unsupported version.
TrainedModel model_from_json(const std::string& text);

void save_model(const TrainedModel& model, const std::filesystem::path& path);
TrainedModel load_model(const std::filesystem::path& path);

}  // namespace lfda
