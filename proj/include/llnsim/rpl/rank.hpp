#pragma once

#include <cstdint>
#include <optional>

namespace llnsim::rpl {

using Rank = std::uint16_t;

inline constexpr Rank kRootRank = 0;
/// Rank units per unit of link ETX.
inline constexpr Rank kRankUnit = 128;
inline constexpr Rank kInfiniteRank = 0xffff;

/// parent_rank + round(link_etx * kRankUnit). Returns nullopt if the result
/// reaches kInfiniteRank (path unusable). Throws std::invalid_argument if
/// link_etx < 1.
std::optional<Rank> compute_rank(Rank parent_rank, double link_etx);

/// 8-bit serial-number comparison: true when `a` is newer than `b`
/// ((a - b) mod 256 in [1, 127]).
constexpr bool version_newer(std::uint8_t a, std::uint8_t b) {
    const std::uint8_t diff = static_cast<std::uint8_t>(a - b);
    return diff != 0 && diff < 128;
}

}  // namespace llnsim::rpl
