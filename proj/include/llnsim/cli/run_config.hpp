#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>

#include "llnsim/sim/scenario.hpp"

namespace llnsim::cli {

enum class Verbosity { quiet, normal, verbose };

struct RunConfig {
    std::filesystem::path scenario;
    std::optional<std::uint64_t> seed;
    std::optional<double> duration_s;
    std::filesystem::path out_dir = "out";
    std::optional<std::uint16_t> serve_port;
    Verbosity verbosity = Verbosity::normal;
};

/// Loads the scenario file and applies the seed/duration overrides.
/// Throws sim::ScenarioError.
sim::Scenario prepare_scenario(const RunConfig& config);

}  // namespace llnsim::cli
