#include "llnsim/lowpan/address.hpp"

#include <fmt/format.h>

namespace llnsim::lowpan {

namespace {

std::uint64_t load_be64(const std::uint8_t* p) {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v = (v << 8) | p[i];
    return v;
}

void store_be64(std::uint8_t* p, std::uint64_t v) {
    for (int i = 7; i >= 0; --i) {
        p[i] = static_cast<std::uint8_t>(v & 0xff);
        v >>= 8;
    }
}

}  // namespace

std::uint64_t Ipv6Address::prefix() const { return load_be64(bytes.data()); }
std::uint64_t Ipv6Address::iid() const { return load_be64(bytes.data() + 8); }

Ipv6Address Ipv6Address::from_parts(std::uint64_t prefix, std::uint64_t iid) {
    Ipv6Address a;
    store_be64(a.bytes.data(), prefix);
    store_be64(a.bytes.data() + 8, iid);
    return a;
}

std::string Ipv6Address::to_string() const {
    std::string out;
    for (int g = 0; g < 8; ++g) {
        if (g) out += ':';
        out += fmt::format("{:x}", (bytes[2 * g] << 8) | bytes[2 * g + 1]);
    }
    return out;
}

Ipv6Address all_rpl_nodes() { return Ipv6Address::from_parts(0xff02'0000'0000'0000ULL, 0x1a); }

}  // namespace llnsim::lowpan
