#include "llnsim/rpl/node.hpp"

#include <algorithm>
#include <stdexcept>

namespace llnsim::rpl {

const char* to_string(Role r) {
    switch (r) {
        case Role::root: return "root";
        case Role::router: return "router";
        case Role::leaf: return "leaf";
    }
    return "?";
}

const char* to_string(TimerKind k) {
    switch (k) {
        case TimerKind::trickle_fire: return "trickle_fire";
        case TimerKind::trickle_end: return "trickle_end";
        case TimerKind::dis: return "dis";
        case TimerKind::dao_retransmit: return "dao_retransmit";
    }
    return "?";
}

Node::Node(NodeConfig config)
    : config_(config), address_(lowpan::address_for_mote(config.id)), trickle_(config.trickle) {}

Actions Node::start(SimTime now, Rng& rng) {
    Actions out;
    if (config_.role == Role::root) {
        state_.joined = true;
        state_.rank = kRootRank;
        state_.lowest_rank = kRootRank;
        state_.has_version = true;
        state_.dodag_id = address_;
        reset_trickle(now, rng, out);
    } else {
        arm_dis(now + rng.uniform_int(1, kMicrosPerSecond), out);
    }
    return out;
}

std::vector<Candidate> Node::candidates(SimTime now) const {
    std::vector<Candidate> out;
    const SimTime stale_after = 3 * config_.trickle.imax_us();
    for (const auto& [id, entry] : state_.parent_set) {
        if (now - entry.last_heard > stale_after) continue;
        if (entry.advertised_rank >= state_.lowest_rank) continue;
        auto link = links_.find(id);
        const double etx = link == links_.end() ? metrics::kEtxInitial : link->second.live_etx();
        if (etx >= metrics::kEtxCeiling) continue;
        auto path = compute_rank(entry.advertised_rank, etx);
        if (!path) continue;
        out.push_back({id, entry.advertised_rank, *path, entry.status});
    }
    return out;
}

void Node::reselect(SimTime now, Rng& rng, Actions& out) {
    if (config_.role == Role::root) return;

    auto cands = candidates(now);
    // Drop entries that are no longer usable so the parent set only holds candidates.
    std::erase_if(state_.parent_set, [&](const auto& kv) {
        return std::none_of(cands.begin(), cands.end(), [&](const Candidate& c) { return c.id == kv.first; });
    });

    const auto chosen = select_parent(cands, config_.objective);
    if (!chosen) {
        if (state_.joined) detach(now, out);
        return;
    }

    const Candidate& best = *std::find_if(cands.begin(), cands.end(), [&](const Candidate& c) { return c.id == *chosen; });
    const auto old = state_.preferred_parent;
    state_.preferred_parent = *chosen;
    state_.rank = best.path_rank;
    state_.lowest_rank = std::min(state_.lowest_rank, state_.rank);
    std::erase_if(state_.parent_set, [&](const auto& kv) { return kv.second.advertised_rank >= state_.lowest_rank; });

    if (!state_.joined) {
        join(now, rng, out);
    } else if (old != chosen) {
        ++counters_.parent_changes;
        out.push_back(ParentChanged{old, chosen});
        if (emits_dio()) reset_trickle(now, rng, out);
        const SimTime when = now + rng.uniform_int(0, config_.dao_delay);
        if (old) withdraw_subtree(*old, when, out);
        advertise_subtree(*chosen, when, out);
    }
}

void Node::join(SimTime now, Rng& rng, Actions& out) {
    state_.joined = true;
    ++counters_.parent_changes;
    out.push_back(ParentChanged{std::nullopt, state_.preferred_parent});
    ++dis_token_;  // cancels any pending DIS
    if (emits_dio()) reset_trickle(now, rng, out);
    advertise_subtree(*state_.preferred_parent, now + rng.uniform_int(0, config_.dao_delay), out);
}

void Node::detach(SimTime now, Actions& out) {
    out.push_back(ParentChanged{state_.preferred_parent, std::nullopt});
    ++counters_.parent_changes;
    state_.joined = false;
    state_.preferred_parent.reset();
    state_.rank = kInfiniteRank;
    state_.routing_table.clear();
    pending_daos_.clear();
    trickle_.stop();
    arm_dis(now + config_.detach_dis_delay, out);
}

void Node::reset_membership() {
    state_.joined = false;
    state_.preferred_parent.reset();
    state_.rank = kInfiniteRank;
    state_.lowest_rank = kInfiniteRank;
    state_.parent_set.clear();
    state_.routing_table.clear();
    pending_daos_.clear();
    seen_daos_.clear();
    trickle_.stop();
}

void Node::reset_trickle(SimTime now, Rng& rng, Actions& out) {
    trickle_.hear_inconsistent(now, rng);
    ++counters_.trickle_resets;
    out.push_back(TrickleReset{now});
    arm_trickle(out);
}

void Node::arm_trickle(Actions& out) const {
    out.push_back(ArmTimer{TimerKind::trickle_fire, trickle_.fire_at(), trickle_.generation()});
    out.push_back(ArmTimer{TimerKind::trickle_end, trickle_.interval_end(), trickle_.generation()});
}

void Node::arm_dis(SimTime at, Actions& out) { out.push_back(ArmTimer{TimerKind::dis, at, ++dis_token_}); }

void Node::send_dao(MoteId to, const lowpan::Ipv6Address& target, bool no_path, SimTime not_before, Actions& out) {
    const std::uint8_t seq = ++state_.dao_sequence;
    out.push_back(SendControl{to, DaoMessage{kInstanceId, config_.id, target, seq, no_path}, not_before});
    ++counters_.dao_sent;
    if (no_path) return;
    const std::uint64_t token = next_token_++;
    pending_daos_[seq] = PendingDao{to, target, 0, token};
    out.push_back(ArmTimer{TimerKind::dao_retransmit, not_before + config_.dao_ack_timeout, token});
}

void Node::advertise_subtree(MoteId to, SimTime not_before, Actions& out) {
    send_dao(to, address_, false, not_before, out);
    for (const auto& [target, hop] : state_.routing_table) send_dao(to, target, false, not_before, out);
}

void Node::withdraw_subtree(MoteId from, SimTime not_before, Actions& out) {
    send_dao(from, address_, true, not_before, out);
    for (const auto& [target, hop] : state_.routing_table) send_dao(from, target, true, not_before, out);
}

Actions Node::handle_dio(const DioMessage& dio, MoteId sender, NodeStatus sender_status, SimTime now, Rng& rng) {
    Actions out;
    if (dio.rpl_instance_id != kInstanceId) {
        ++counters_.ignored_dio_unknown_instance;
        return out;
    }

    if (config_.role == Role::root) {
        if (dio.version_number == state_.version_number) {
            trickle_.hear_consistent();
        } else {
            reset_trickle(now, rng, out);
        }
        return out;
    }

    const auto parent_before = state_.preferred_parent;
    const bool was_joined = state_.joined;
    bool version_reset = false;

    if (state_.has_version) {
        if (version_newer(state_.version_number, dio.version_number)) {
            // Stale DODAG version: the sender needs to hear ours.
            if (state_.joined && emits_dio()) reset_trickle(now, rng, out);
            return out;
        }
        if (version_newer(dio.version_number, state_.version_number)) {
            if (parent_before) {
                out.push_back(ParentChanged{parent_before, std::nullopt});
                ++counters_.parent_changes;
            }
            reset_membership();
            state_.version_number = dio.version_number;
            version_reset = true;
        }
    } else {
        state_.has_version = true;
        state_.version_number = dio.version_number;
    }
    if (!state_.joined) state_.dodag_id = dio.dodag_id;

    // Loop avoidance: never consider a sender whose rank is not below ours.
    if (dio.rank == kInfiniteRank || dio.rank >= state_.lowest_rank) {
        state_.parent_set.erase(sender);
    } else {
        state_.parent_set[sender] = ParentEntry{sender, dio.rank, sender_status, now};
    }

    reselect(now, rng, out);

    if (was_joined && state_.joined && !version_reset && state_.preferred_parent == parent_before && emits_dio() &&
        trickle_.running()) {
        trickle_.hear_consistent();
    }
    return out;
}

Actions Node::handle_dis(const DisMessage&, MoteId sender, SimTime now, Rng& rng) {
    Actions out;
    if (!state_.joined || !emits_dio()) {
        ++counters_.ignored_dis;
        return out;
    }
    out.push_back(SendControl{sender, make_dio(), now + rng.uniform_int(0, config_.dis_response_jitter)});
    ++counters_.dio_sent;
    reset_trickle(now, rng, out);
    return out;
}

Actions Node::handle_dao(const DaoMessage& dao, MoteId sender, SimTime now, Rng&) {
    Actions out;
    if (dao.rpl_instance_id != kInstanceId || config_.role == Role::leaf || !state_.joined ||
        state_.preferred_parent == sender) {
        ++counters_.ignored_dao;
        return out;
    }

    if (dao.no_path) {
        auto it = state_.routing_table.find(dao.target);
        if (it != state_.routing_table.end() && it->second == sender) {
            state_.routing_table.erase(it);
            if (config_.role != Role::root) send_dao(*state_.preferred_parent, dao.target, true, now, out);
        }
        return out;
    }

    const auto key = std::make_pair(sender, dao.sequence);
    auto seen = seen_daos_.find(key);
    auto route = state_.routing_table.find(dao.target);
    const bool duplicate = seen != seen_daos_.end() && seen->second == dao.target &&
                           route != state_.routing_table.end() && route->second == sender;

    out.push_back(SendControl{sender, DaoAckMessage{kInstanceId, config_.id, dao.sequence, 0}, now});
    ++counters_.dao_ack_sent;
    if (duplicate) return out;

    state_.routing_table[dao.target] = sender;
    seen_daos_[key] = dao.target;
    if (config_.role != Role::root) send_dao(*state_.preferred_parent, dao.target, false, now, out);
    return out;
}

Actions Node::handle_dao_ack(const DaoAckMessage& ack, MoteId sender, SimTime, Rng&) {
    auto it = pending_daos_.find(ack.sequence);
    if (it != pending_daos_.end() && it->second.to == sender) pending_daos_.erase(it);
    return {};
}

Actions Node::on_link_outcome(MoteId neighbor, bool acked, SimTime now, Rng& rng) {
    Actions out;
    links_[neighbor].record(acked);
    if (state_.parent_set.contains(neighbor)) reselect(now, rng, out);
    return out;
}

Actions Node::on_timer(TimerKind kind, std::uint64_t token, SimTime now, Rng& rng) {
    Actions out;
    switch (kind) {
        case TimerKind::trickle_fire:
            if (!trickle_.running() || token != trickle_.generation() || !state_.joined) break;
            if (trickle_.fire()) {
                ++counters_.dio_sent;
                out.push_back(SendControl{std::nullopt, make_dio(), now});
            } else {
                ++counters_.dio_suppressed;
            }
            break;
        case TimerKind::trickle_end:
            if (!trickle_.running() || token != trickle_.generation()) break;
            trickle_.end_interval(now, rng);
            arm_trickle(out);
            break;
        case TimerKind::dis:
            if (token != dis_token_ || state_.joined || config_.role == Role::root) break;
            ++counters_.dis_sent;
            out.push_back(SendControl{std::nullopt, DisMessage{config_.id, std::nullopt}, now});
            arm_dis(now + config_.dis_interval, out);
            break;
        case TimerKind::dao_retransmit: {
            auto it = std::find_if(pending_daos_.begin(), pending_daos_.end(),
                                   [&](const auto& kv) { return kv.second.token == token; });
            if (it == pending_daos_.end()) break;
            PendingDao pending = it->second;
            const std::uint8_t seq = it->first;
            if (!state_.joined || state_.preferred_parent != pending.to ||
                pending.retransmissions >= config_.dao_max_retransmissions) {
                pending_daos_.erase(it);
                break;
            }
            ++pending.retransmissions;
            pending.token = next_token_++;
            it->second = pending;
            ++counters_.dao_sent;
            out.push_back(SendControl{pending.to, DaoMessage{kInstanceId, config_.id, pending.target, seq, false}, now});
            out.push_back(ArmTimer{TimerKind::dao_retransmit, now + config_.dao_ack_timeout, pending.token});
            break;
        }
    }
    return out;
}

Actions Node::global_repair(SimTime now, Rng& rng) {
    if (config_.role != Role::root) throw std::logic_error("global repair can only be started by the DODAG root");
    Actions out;
    ++state_.version_number;
    ++state_.dtsn;
    state_.routing_table.clear();
    seen_daos_.clear();
    reset_trickle(now, rng, out);
    return out;
}

RouteDecision Node::route(const lowpan::Ipv6Address& destination) const {
    if (destination == address_) return {RouteDecision::Kind::local, config_.id};
    if (auto it = state_.routing_table.find(destination); it != state_.routing_table.end()) {
        return {RouteDecision::Kind::next_hop, it->second};
    }
    if (config_.role != Role::root && state_.joined && state_.preferred_parent) {
        return {RouteDecision::Kind::next_hop, *state_.preferred_parent};
    }
    return {RouteDecision::Kind::no_route, 0};
}

DioMessage Node::make_dio() const {
    DioMessage dio;
    dio.rpl_instance_id = kInstanceId;
    dio.version_number = state_.version_number;
    dio.rank = state_.joined ? state_.rank : kInfiniteRank;
    dio.grounded = true;
    dio.mop = Mop(kMopStoring);
    dio.prf = Prf(0);
    dio.dtsn = state_.dtsn;
    dio.dodag_id = state_.dodag_id;
    return dio;
}

}  // namespace llnsim::rpl
