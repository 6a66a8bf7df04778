#pragma once

#include <filesystem>
#include <ostream>
#include <string>

#include "llnsim/lowpan/codec.hpp"

namespace llnsim::cli {

struct CodecToolContext {
    lowpan::MacContext mac;
    bool intra_network = true;
};

/// {"src_mac": "00:12:74:00:00:00:00:02", "dst_mac": "...", "shared_prefix": "fe80::", "intra_network": true}.
/// MACs also accept "0x..." hex. Throws std::runtime_error.
CodecToolContext parse_codec_context(const std::string& text);

/// Compresses every header (one 80-hex-digit line each, '#' comments
/// allowed) and prints one line per header plus a size summary.
int run_codec_tool(const std::filesystem::path& headers, const std::filesystem::path& context, std::ostream& out,
                   std::ostream& err);

}  // namespace llnsim::cli
