#include "llnsim/rpl/objective.hpp"

#include <tuple>

namespace llnsim::rpl {

namespace {

// Strict "a is better than b".
bool better(const Candidate& a, const Candidate& b, const ObjectiveFunction& of) {
    if (const auto* energy = std::get_if<EnergyOf>(&of)) {
        if (energy->prefer_mains) {
            const bool am = a.status.power == PowerSource::mains;
            const bool bm = b.status.power == PowerSource::mains;
            if (am != bm) return am;
        }
        if (a.status.ee != b.status.ee) return a.status.ee > b.status.ee;
    }
    return std::tie(a.path_rank, a.id) < std::tie(b.path_rank, b.id);
}

}  // namespace

std::optional<MoteId> select_parent(std::span<const Candidate> candidates, const ObjectiveFunction& of) {
    const Candidate* best = nullptr;
    for (const auto& c : candidates) {
        if (!best || better(c, *best, of)) best = &c;
    }
    if (!best) return std::nullopt;
    return best->id;
}

}  // namespace llnsim::rpl
