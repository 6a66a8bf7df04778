#pragma once

#include <atomic>
#include <ostream>

#include "llnsim/cli/run_config.hpp"

namespace llnsim::cli {

/// Runs the scenario to its duration, writes every report into
/// config.out_dir and prints the summary. If `stop` becomes true the run
/// ends early and the reports reflect the virtual time reached. Returns the
/// process exit status; nothing is written when the scenario fails to load.
int run_batch(const RunConfig& config, std::ostream& out, std::ostream& err, const std::atomic<bool>* stop = nullptr);

}  // namespace llnsim::cli
