#pragma once

#include <array>
#include <cstdint>
#include <span>

#include "llnsim/lowpan/address.hpp"

namespace llnsim::lowpan {

inline constexpr std::size_t kIpv6HeaderSize = 40;
inline constexpr std::uint8_t kNextHeaderUdp = 17;
inline constexpr std::uint8_t kNextHeaderIcmpv6 = 58;

struct Ipv6Header {
    std::uint8_t version = 6;
    std::uint8_t traffic_class = 0;
    std::uint32_t flow_label = 0;  // 20 bits
    std::uint16_t payload_length = 0;
    std::uint8_t next_header = kNextHeaderUdp;
    std::uint8_t hop_limit = 64;
    Ipv6Address src;
    Ipv6Address dst;

    friend bool operator==(const Ipv6Header&, const Ipv6Header&) = default;
};

/// RFC 8200 wire layout. Throws CodecError if flow_label exceeds 20 bits
/// or version exceeds 4 bits.
std::array<std::uint8_t, kIpv6HeaderSize> serialize(const Ipv6Header& header);

/// Parses exactly 40 octets. Throws CodecError on wrong length.
Ipv6Header parse_ipv6_header(std::span<const std::uint8_t> octets);

}  // namespace llnsim::lowpan
