#pragma once

#include <ostream>

#include "app/run_config.hpp"

namespace ginet::app {

/// Augmented copies per scene used when sizing the training set.
inline constexpr int kAugmentMultiplicity = 10;

inline constexpr const char* kPredictionSchema = "ginet-predictions/1";

/// Runs one command. Results go to `out`, progress and the resolved
/// configuration to `log`. Failures throw ginet::Error.
void run_command(const RunConfig& config, std::ostream& out, std::ostream& log);

}  // namespace ginet::app
