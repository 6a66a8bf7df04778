#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <string>

#include "llnsim/common/types.hpp"

namespace llnsim::lowpan {

/// 64-bit IEEE 802.15.4 extended address.
struct MacAddress {
    std::uint64_t value = 0;

    auto operator<=>(const MacAddress&) const = default;
};

inline constexpr MacAddress kBroadcastMac{0xffff'ffff'ffff'ffffULL};

/// fe80::/64, shared by every mote of a simulated network.
inline constexpr std::uint64_t kLinkLocalPrefix = 0xfe80'0000'0000'0000ULL;

struct Ipv6Address {
    std::array<std::uint8_t, 16> bytes{};

    auto operator<=>(const Ipv6Address&) const = default;

    std::uint64_t prefix() const;
    std::uint64_t iid() const;
    bool is_multicast() const { return bytes[0] == 0xff; }

    static Ipv6Address from_parts(std::uint64_t prefix, std::uint64_t iid);

    /// Full, uncompressed hex groups ("fe80:0:0:0:212:7400:0:5" style).
    std::string to_string() const;
};

/// ff02::1a, the all-RPL-nodes link-local multicast group.
Ipv6Address all_rpl_nodes();

/// EUI-64 interface identifier: the MAC with the universal/local bit flipped.
constexpr std::uint64_t iid_from_mac(MacAddress mac) { return mac.value ^ 0x0200'0000'0000'0000ULL; }
constexpr MacAddress mac_from_iid(std::uint64_t iid) { return MacAddress{iid ^ 0x0200'0000'0000'0000ULL}; }

inline Ipv6Address address_from_mac(std::uint64_t prefix, MacAddress mac) {
    return Ipv6Address::from_parts(prefix, iid_from_mac(mac));
}

/// True when the address is exactly prefix || IID(mac).
inline bool derivable_from_mac(const Ipv6Address& addr, std::uint64_t prefix, MacAddress mac) {
    return addr.prefix() == prefix && addr.iid() == iid_from_mac(mac);
}

/// Extended address assigned to a simulated mote.
constexpr MacAddress mac_for_mote(MoteId id) { return MacAddress{0x0012'7400'0000'0000ULL | id}; }

inline Ipv6Address address_for_mote(MoteId id) { return address_from_mac(kLinkLocalPrefix, mac_for_mote(id)); }

}  // namespace llnsim::lowpan
