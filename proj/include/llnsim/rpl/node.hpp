#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <utility>
#include <variant>
#include <vector>

#include "llnsim/common/rng.hpp"
#include "llnsim/common/types.hpp"
#include "llnsim/lowpan/address.hpp"
#include "llnsim/metrics/link_stats.hpp"
#include "llnsim/rpl/messages.hpp"
#include "llnsim/rpl/objective.hpp"
#include "llnsim/rpl/rank.hpp"
#include "llnsim/rpl/trickle.hpp"

namespace llnsim::rpl {

enum class Role { root, router, leaf };

const char* to_string(Role r);

/// Only one RPL instance is ever run.
inline constexpr std::uint8_t kInstanceId = 0;

struct NodeConfig {
    MoteId id = 0;
    Role role = Role::router;
    TrickleParams trickle;
    ObjectiveFunction objective = EtxOf{};
    SimTime dis_interval = 30 * kMicrosPerSecond;
    /// Delay before the first DIS after losing every parent.
    SimTime detach_dis_delay = 1 * kMicrosPerSecond;
    SimTime dao_ack_timeout = 2 * kMicrosPerSecond;
    unsigned dao_max_retransmissions = 3;
    /// DAOs triggered by a join or parent switch are spread over [0, dao_delay].
    SimTime dao_delay = 1 * kMicrosPerSecond;
    /// Unicast DIO replies to a DIS are spread over [0, dis_response_jitter].
    SimTime dis_response_jitter = 100 * kMicrosPerMilli;
};

struct ParentEntry {
    MoteId id = 0;
    Rank advertised_rank = kInfiniteRank;
    NodeStatus status;
    SimTime last_heard = 0;
};

struct NodeState {
    bool joined = false;
    Rank rank = kInfiniteRank;
    /// Lowest rank held in the current DODAG version; candidates must
    /// advertise strictly less than this to be admitted.
    Rank lowest_rank = kInfiniteRank;
    bool has_version = false;
    std::uint8_t version_number = 0;
    lowpan::Ipv6Address dodag_id;
    std::map<MoteId, ParentEntry> parent_set;
    std::optional<MoteId> preferred_parent;
    /// Storing-mode downward routes: target -> next hop.
    std::map<lowpan::Ipv6Address, MoteId> routing_table;
    std::uint8_t dtsn = 0;
    std::uint8_t dao_sequence = 0;
};

struct NodeCounters {
    std::uint64_t dio_sent = 0;
    std::uint64_t dio_suppressed = 0;
    std::uint64_t dis_sent = 0;
    std::uint64_t dao_sent = 0;
    std::uint64_t dao_ack_sent = 0;
    std::uint64_t ignored_dio_unknown_instance = 0;
    std::uint64_t ignored_dao = 0;
    std::uint64_t ignored_dis = 0;
    std::uint64_t parent_changes = 0;
    std::uint64_t trickle_resets = 0;
};

enum class TimerKind { trickle_fire, trickle_end, dis, dao_retransmit };

const char* to_string(TimerKind k);

/// Transmit a control message. `to` empty means link-local multicast.
struct SendControl {
    std::optional<MoteId> to;
    ControlMessage message;
    SimTime not_before = 0;
};

/// Ask the owner to call on_timer(kind, token) at `at`.
struct ArmTimer {
    TimerKind kind = TimerKind::trickle_fire;
    SimTime at = 0;
    std::uint64_t token = 0;
};

struct ParentChanged {
    std::optional<MoteId> from;
    std::optional<MoteId> to;
};

/// The trickle interval restarted at imin.
struct TrickleReset {
    SimTime at = 0;
};

using Action = std::variant<SendControl, ArmTimer, ParentChanged, TrickleReset>;
using Actions = std::vector<Action>;

struct RouteDecision {
    enum class Kind { local, next_hop, no_route } kind = Kind::no_route;
    MoteId next_hop = 0;
};

/// Per-mote RPL state machine (storing mode, single instance). All inputs
/// arrive through the handle_* / on_* methods; every side effect is
/// returned as an Action for the owner to carry out.
class Node {
public:
    explicit Node(NodeConfig config);

    /// Boot. The root forms the DODAG; other motes arm their first DIS.
    Actions start(SimTime now, Rng& rng);

    Actions handle_dio(const DioMessage& dio, MoteId sender, NodeStatus sender_status, SimTime now, Rng& rng);
    Actions handle_dis(const DisMessage& dis, MoteId sender, SimTime now, Rng& rng);
    Actions handle_dao(const DaoMessage& dao, MoteId sender, SimTime now, Rng& rng);
    Actions handle_dao_ack(const DaoAckMessage& ack, MoteId sender, SimTime now, Rng& rng);

    /// Link-layer result of one unicast attempt towards `neighbor`.
    Actions on_link_outcome(MoteId neighbor, bool acked, SimTime now, Rng& rng);

    Actions on_timer(TimerKind kind, std::uint64_t token, SimTime now, Rng& rng);

    /// Root only: bump the DODAG version and reset trickle. Throws
    /// std::logic_error on any other mote.
    Actions global_repair(SimTime now, Rng& rng);

    RouteDecision route(const lowpan::Ipv6Address& destination) const;

    DioMessage make_dio() const;

    const NodeConfig& config() const { return config_; }
    const NodeState& state() const { return state_; }
    const NodeCounters& counters() const { return counters_; }
    const TrickleTimer& trickle() const { return trickle_; }
    const std::map<MoteId, metrics::LinkEstimator>& links() const { return links_; }
    const lowpan::Ipv6Address& address() const { return address_; }
    bool emits_dio() const { return config_.role != Role::leaf; }

    /// Ranks the node could take through each current candidate.
    std::vector<Candidate> candidates(SimTime now) const;

private:
    struct PendingDao {
        MoteId to = 0;
        lowpan::Ipv6Address target;
        unsigned retransmissions = 0;
        std::uint64_t token = 0;
    };

    void reselect(SimTime now, Rng& rng, Actions& out);
    void detach(SimTime now, Actions& out);
    void reset_membership();
    void join(SimTime now, Rng& rng, Actions& out);
    void reset_trickle(SimTime now, Rng& rng, Actions& out);
    void arm_trickle(Actions& out) const;
    void arm_dis(SimTime at, Actions& out);
    void send_dao(MoteId to, const lowpan::Ipv6Address& target, bool no_path, SimTime not_before, Actions& out);
    void advertise_subtree(MoteId to, SimTime not_before, Actions& out);
    void withdraw_subtree(MoteId from, SimTime not_before, Actions& out);

    NodeConfig config_;
    lowpan::Ipv6Address address_;
    NodeState state_;
    NodeCounters counters_;
    TrickleTimer trickle_;
    std::map<MoteId, metrics::LinkEstimator> links_;
    std::map<std::uint8_t, PendingDao> pending_daos_;
    std::map<std::pair<MoteId, std::uint8_t>, lowpan::Ipv6Address> seen_daos_;
    std::uint64_t dis_token_ = 0;
    std::uint64_t next_token_ = 1;
};

}  // namespace llnsim::rpl
