#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "llnsim/lowpan/ipv6_header.hpp"

namespace llnsim::lowpan {

/*
 * Stateless IPv6 header compression.
 *
 * Encoding: one dispatch octet followed by inline fields in fixed order.
 *
 *   dispatch:  bit 7..6  address mode (see Mode)
 *              bit 5     TF: traffic class and flow label elided (both zero)
 *              bit 4     NH: next header elided (implies UDP, 17)
 *              bit 3..0  reserved, must be zero
 *
 *   inline:    [traffic class (1) | 0000 + flow label (20 bits) (3)]   if TF = 0
 *              [next header (1)]                                       if NH = 0
 *              hop limit (1)                                           always
 *              [source address (16)]                                   unless elided by mode
 *              [destination address (16)]                              unless elided by mode
 *
 * Version is always 6 and never carried. Payload length is recovered from
 * the link-layer frame payload length minus the compressed header size.
 * Elided addresses are prefix || IID(MAC), with the prefix from MacContext.
 */

enum class Mode : std::uint8_t {
    uncompressed = 0b00,      // both addresses inline
    partly_src = 0b01,        // source elided, destination inline
    partly_dst = 0b10,        // destination elided, source inline
    fully_compressed = 0b11,  // both addresses elided
};

const char* to_string(Mode m);

struct MacContext {
    MacAddress src_mac;
    MacAddress dst_mac;
    /// Octets following the MAC header: compressed IPv6 header plus payload.
    std::size_t frame_payload_length = 0;
    std::uint64_t shared_prefix = kLinkLocalPrefix;
};

struct ElidedFields {
    bool version = true;
    bool payload_length = true;
    bool traffic_class_flow_label = false;
    bool next_header = false;
    bool src_iid = false;
    bool dst_iid = false;
};

struct CompressedHeader {
    Mode mode = Mode::uncompressed;
    /// Full encoding, dispatch octet first.
    std::vector<std::uint8_t> inline_bytes;
    ElidedFields elided;

    std::size_t size() const { return inline_bytes.size(); }
};

class CodecError : public std::runtime_error {
public:
    enum class Kind { malformed_header, truncated, length_mismatch, reserved_bits };

    CodecError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    Kind kind() const { return kind_; }

private:
    Kind kind_;
};

Mode select_mode(const Ipv6Address& src, const Ipv6Address& dst, const MacContext& ctx, bool intra_network);

/// Throws CodecError(malformed_header) if version != 6 or flow label exceeds 20 bits.
CompressedHeader compress(const Ipv6Header& header, const MacContext& ctx, bool intra_network = true);

/// Result of decoding a compressed header at the front of a frame payload.
struct Decoded {
    Ipv6Header header;
    std::size_t consumed = 0;  // compressed header size in octets
};

/// Decodes the compressed header at the start of `octets`; trailing octets
/// are the IPv6 payload. Throws CodecError on any malformed input.
Decoded decompress(std::span<const std::uint8_t> octets, const MacContext& ctx);

Ipv6Header decompress(const CompressedHeader& c, const MacContext& ctx);

}  // namespace llnsim::lowpan
