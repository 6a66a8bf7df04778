#pragma once

#include <optional>
#include <span>
#include <variant>

#include "llnsim/common/types.hpp"
#include "llnsim/rpl/rank.hpp"

namespace llnsim::rpl {

/// Minimise path ETX (candidate rank).
struct EtxOf {};

/// Prefer mains-powered parents, then the highest energy estimate, then
/// the lowest candidate rank.
struct EnergyOf {
    bool prefer_mains = true;
};

using ObjectiveFunction = std::variant<EtxOf, EnergyOf>;

/// Power type and energy estimate advertised by a neighbour.
struct NodeStatus {
    PowerSource power = PowerSource::mains;
    double ee = 1.0;

    friend bool operator==(const NodeStatus&, const NodeStatus&) = default;
};

struct Candidate {
    MoteId id = 0;
    Rank advertised_rank = kInfiniteRank;
    /// Rank this node would take through the candidate.
    Rank path_rank = kInfiniteRank;
    NodeStatus status;
};

/// Deterministic choice among candidates; ties go to the lowest mote id.
/// Returns nullopt for an empty set.
std::optional<MoteId> select_parent(std::span<const Candidate> candidates, const ObjectiveFunction& of);

}  // namespace llnsim::rpl
