#include "llnsim/rpl/dodag_export.hpp"

#include <map>
#include <set>

#include <fmt/format.h>

namespace llnsim::rpl {

DodagVertex vertex_of(const Node& node) {
    const auto& s = node.state();
    return {node.config().id, node.config().role, s.joined, s.rank, s.preferred_parent};
}

void write_dodag_dot(std::ostream& out, const std::vector<DodagVertex>& vertices, std::uint8_t version) {
    out << fmt::format("digraph dodag {{\n  label=\"version {}\";\n", version);
    for (const auto& v : vertices) {
        const std::string rank = v.joined ? std::to_string(v.rank) : "inf";
        const char* shape = v.role == Role::root ? "doublecircle" : (v.role == Role::leaf ? "box" : "circle");
        out << fmt::format("  n{} [label=\"{}\\nrank {}\", shape={}];\n", v.id, v.id, rank, shape);
    }
    for (const auto& v : vertices) {
        if (v.parent) out << fmt::format("  n{} -> n{};\n", v.id, *v.parent);
    }
    out << "}\n";
}

namespace {

std::map<MoteId, const DodagVertex*> index(const std::vector<DodagVertex>& vertices) {
    std::map<MoteId, const DodagVertex*> by_id;
    for (const auto& v : vertices) by_id[v.id] = &v;
    return by_id;
}

}  // namespace

bool parent_graph_acyclic(const std::vector<DodagVertex>& vertices) {
    const auto by_id = index(vertices);
    for (const auto& start : vertices) {
        std::set<MoteId> seen;
        const DodagVertex* v = &start;
        while (v && v->parent) {
            if (!seen.insert(v->id).second) return false;
            auto it = by_id.find(*v->parent);
            v = it == by_id.end() ? nullptr : it->second;
        }
    }
    return true;
}

std::optional<unsigned> depth_of(const std::vector<DodagVertex>& vertices, MoteId id) {
    const auto by_id = index(vertices);
    auto it = by_id.find(id);
    unsigned hops = 0;
    while (it != by_id.end()) {
        const DodagVertex& v = *it->second;
        if (v.role == Role::root) return hops;
        if (!v.parent || hops > vertices.size()) return std::nullopt;
        ++hops;
        it = by_id.find(*v.parent);
    }
    return std::nullopt;
}

}  // namespace llnsim::rpl
