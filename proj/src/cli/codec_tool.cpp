#include "llnsim/cli/codec_tool.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include <fmt/format.h>
#include <json.hpp>

namespace llnsim::cli {

namespace {

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error(fmt::format("cannot read '{}'", path.string()));
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::uint64_t parse_hex64(std::string s, const char* what) {
    if (s.rfind("0x", 0) == 0 || s.rfind("0X", 0) == 0) s = s.substr(2);
    std::string digits;
    for (char c : s) {
        if (c == ':' || c == '-') continue;
        if (!std::isxdigit(static_cast<unsigned char>(c))) throw std::runtime_error(fmt::format("{}: bad hex digit '{}'", what, c));
        digits += c;
    }
    if (digits.empty() || digits.size() > 16) throw std::runtime_error(fmt::format("{}: expected up to 64 bits of hex", what));
    return std::stoull(digits, nullptr, 16);
}

// "fe80::" or "fe80:0:0:0" (the upper 64 bits), or raw "0x..." hex.
std::uint64_t parse_prefix(const std::string& s) {
    if (s.rfind("0x", 0) == 0) return parse_hex64(s, "shared_prefix");
    std::string head = s.substr(0, s.find("::"));
    std::uint64_t value = 0;
    int groups = 0;
    std::stringstream ss(head);
    std::string group;
    while (std::getline(ss, group, ':')) {
        if (group.empty() || group.size() > 4 || groups == 4) throw std::runtime_error("shared_prefix: malformed");
        value = (value << 16) | std::stoull(group, nullptr, 16);
        ++groups;
    }
    if (groups < 4 && s.find("::") == std::string::npos) throw std::runtime_error("shared_prefix: malformed");
    return value << (16 * (4 - groups));
}

std::vector<std::uint8_t> parse_hex_bytes(const std::string& line) {
    std::string digits;
    for (char c : line) {
        if (std::isspace(static_cast<unsigned char>(c))) continue;
        if (!std::isxdigit(static_cast<unsigned char>(c))) {
            throw std::runtime_error(fmt::format("bad hex digit '{}'", c));
        }
        digits += c;
    }
    if (digits.size() != 2 * lowpan::kIpv6HeaderSize) {
        throw std::runtime_error(fmt::format("expected {} hex digits, got {}", 2 * lowpan::kIpv6HeaderSize, digits.size()));
    }
    std::vector<std::uint8_t> bytes;
    for (std::size_t i = 0; i < digits.size(); i += 2) {
        bytes.push_back(static_cast<std::uint8_t>(std::stoul(digits.substr(i, 2), nullptr, 16)));
    }
    return bytes;
}

std::string hex(const std::vector<std::uint8_t>& bytes) {
    std::string out;
    for (auto b : bytes) out += fmt::format("{:02x}", b);
    return out;
}

}  // namespace

CodecToolContext parse_codec_context(const std::string& text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw std::runtime_error(fmt::format("context parse error: {}", e.what()));
    }
    if (!doc.is_object()) throw std::runtime_error("context: expected an object");
    CodecToolContext ctx;
    for (const char* key : {"src_mac", "dst_mac"}) {
        if (!doc.contains(key) || !doc[key].is_string()) throw std::runtime_error(fmt::format("context: '{}' must be a string", key));
    }
    ctx.mac.src_mac = {parse_hex64(doc["src_mac"].get<std::string>(), "src_mac")};
    ctx.mac.dst_mac = {parse_hex64(doc["dst_mac"].get<std::string>(), "dst_mac")};
    if (doc.contains("shared_prefix")) {
        if (!doc["shared_prefix"].is_string()) throw std::runtime_error("context: 'shared_prefix' must be a string");
        ctx.mac.shared_prefix = parse_prefix(doc["shared_prefix"].get<std::string>());
    }
    if (doc.contains("intra_network")) {
        if (!doc["intra_network"].is_boolean()) throw std::runtime_error("context: 'intra_network' must be a boolean");
        ctx.intra_network = doc["intra_network"].get<bool>();
    }
    return ctx;
}

int run_codec_tool(const std::filesystem::path& headers, const std::filesystem::path& context, std::ostream& out,
                   std::ostream& err) {
    CodecToolContext ctx;
    std::string text;
    try {
        ctx = parse_codec_context(read_file(context));
        text = read_file(headers);
    } catch (const std::exception& e) {
        err << "llnsim codec: " << e.what() << '\n';
        return 2;
    }

    std::size_t count = 0, compressed_total = 0, line_no = 0, failures = 0;
    std::stringstream lines(text);
    std::string line;
    while (std::getline(lines, line)) {
        ++line_no;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            const auto raw = parse_hex_bytes(line);
            const auto header = lowpan::parse_ipv6_header(raw);
            const auto c = lowpan::compress(header, ctx.mac, ctx.intra_network);
            lowpan::MacContext rx = ctx.mac;
            rx.frame_payload_length = c.size() + header.payload_length;
            const bool round_trip = lowpan::decompress(c, rx) == header;
            out << fmt::format("{} {} {}{}\n", hex(c.inline_bytes), lowpan::to_string(c.mode), c.size(),
                               round_trip ? "" : " ROUND-TRIP-MISMATCH");
            if (!round_trip) ++failures;
            ++count;
            compressed_total += c.size();
        } catch (const std::exception& e) {
            err << "llnsim codec: line " << line_no << ": " << e.what() << '\n';
            ++failures;
        }
    }
    const std::size_t raw_total = count * lowpan::kIpv6HeaderSize;
    out << fmt::format("# {} headers, {} -> {} octets", count, raw_total, compressed_total);
    if (count) {
        out << fmt::format(", mean {:.2f} octets per header, ratio {:.4f}", static_cast<double>(compressed_total) / count,
                           static_cast<double>(compressed_total) / static_cast<double>(raw_total));
    }
    out << '\n';
    return failures ? 1 : 0;
}

}  // namespace llnsim::cli
