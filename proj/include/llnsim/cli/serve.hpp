#pragma once

#include <atomic>
#include <ostream>

#include "llnsim/cli/run_config.hpp"

namespace llnsim::cli {

/// Serves the live control protocol on 127.0.0.1:config.serve_port until
/// `stop` is set, then writes the reports to config.out_dir. Returns the
/// process exit status (nonzero if the port cannot be bound).
int serve(const RunConfig& config, std::ostream& out, std::ostream& err, const std::atomic<bool>& stop);

}  // namespace llnsim::cli
