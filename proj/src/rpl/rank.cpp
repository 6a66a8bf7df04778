#include "llnsim/rpl/rank.hpp"

#include <cmath>
#include <stdexcept>

namespace llnsim::rpl {

std::optional<Rank> compute_rank(Rank parent_rank, double link_etx) {
    if (!(link_etx >= 1.0)) throw std::invalid_argument("link ETX must be >= 1");
    const double increase = std::round(link_etx * kRankUnit);
    const double rank = static_cast<double>(parent_rank) + increase;
    if (rank >= static_cast<double>(kInfiniteRank)) return std::nullopt;
    return static_cast<Rank>(rank);
}

}  // namespace llnsim::rpl
