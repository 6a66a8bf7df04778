#pragma once

#include <optional>
#include <ostream>
#include <vector>

#include "llnsim/rpl/node.hpp"

namespace llnsim::rpl {

struct DodagVertex {
    MoteId id = 0;
    Role role = Role::router;
    bool joined = false;
    Rank rank = kInfiniteRank;
    std::optional<MoteId> parent;
};

DodagVertex vertex_of(const Node& node);

/// DOT digraph, one edge child -> preferred parent, rank as the node label.
void write_dodag_dot(std::ostream& out, const std::vector<DodagVertex>& vertices, std::uint8_t version);

/// True if following preferred parents from any vertex never revisits a vertex.
bool parent_graph_acyclic(const std::vector<DodagVertex>& vertices);

/// Hops from `id` to the root along preferred parents; nullopt if the chain
/// does not end at a root or loops.
std::optional<unsigned> depth_of(const std::vector<DodagVertex>& vertices, MoteId id);

}  // namespace llnsim::rpl
