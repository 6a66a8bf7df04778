#pragma once

#include <array>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <queue>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "llnsim/common/rng.hpp"
#include "llnsim/lowpan/ipv6_header.hpp"
#include "llnsim/metrics/delivery.hpp"
#include "llnsim/metrics/energy.hpp"
#include "llnsim/metrics/report.hpp"
#include "llnsim/metrics/timeline.hpp"
#include "llnsim/radio/medium.hpp"
#include "llnsim/rpl/dodag_export.hpp"
#include "llnsim/rpl/node.hpp"
#include "llnsim/sim/scenario.hpp"

namespace llnsim::sim {

enum class EventKind { timer, frame_delivery, traffic, control_command };

const char* to_string(EventKind k);

/// What step() reports about the event it dispatched.
struct FiredEvent {
    SimTime fire_at = 0;
    std::uint64_t sequence = 0;
    EventKind kind = EventKind::timer;
    MoteId target = 0;  // 0: the engine itself
};

/// IEEE 802.15.4 framing used for air-time and overhearing costs.
inline constexpr std::size_t kPhyOverheadBytes = 6;   // preamble, SFD, length
inline constexpr std::size_t kMacOverheadBytes = 23;  // FCF, seq, PAN, dst/src extended addresses, FCS
inline constexpr std::size_t kMacHeaderToDstBytes = 13;  // PHY + FCF + seq + PAN + dst address read before filtering
inline constexpr std::size_t kMaxPsduBytes = 127;
inline constexpr std::size_t kUdpHeaderBytes = 8;

struct EngineOptions {
    /// Keep serialized trace lines in memory (the observer is called either way).
    bool record_trace = true;
};

struct MoteSnapshot {
    MoteId id = 0;
    Vec2 position;
    rpl::Role role = rpl::Role::router;
    PowerSource power_source = PowerSource::mains;
    bool alive = true;
    bool joined = false;
    rpl::Rank rank = rpl::kInfiniteRank;
    std::optional<MoteId> parent;
    metrics::RadioState radio = metrics::RadioState::off;
    double ee = 1.0;
    double charge_mC = 0.0;
    double duty_cycle = 0.0;
};

struct Snapshot {
    SimTime now = 0;
    std::uint8_t version = 0;
    std::vector<MoteSnapshot> motes;
    std::array<std::uint64_t, 5> deliveries{};  // indexed like metrics::kAllFates
    std::uint64_t datagrams = 0;
};

class Engine {
public:
    using TraceObserver = std::function<void(const std::string& line)>;
    using DodagObserver = std::function<void()>;

    explicit Engine(Scenario scenario, EngineOptions options = {});

    Engine(const Engine&) = delete;
    Engine& operator=(const Engine&) = delete;

    /// Back to the loaded scenario: clock 0, fresh state, RNG reseeded,
    /// interactive changes and queued commands discarded.
    void reload();

    /// Dispatches the earliest event if it is due no later than the duration.
    std::optional<FiredEvent> step();

    /// Processes every event with fire_at <= min(t, duration), then moves the
    /// clock to that bound. Returns the number of events fired.
    std::size_t run_until(SimTime t);

    /// run_until(duration).
    std::size_t run() { return run_until(duration()); }

    bool finished() const;
    SimTime now() const { return now_; }
    SimTime duration() const { return scenario_.duration(); }
    std::optional<SimTime> next_event_time() const;
    std::uint64_t events_fired() const { return fired_; }

    /// Checks a command against the current scenario; throws
    /// std::invalid_argument (unknown mote, bad position, non-root repair target...).
    void check_command(const Command& c) const;

    /// Thread-safe. Validates, then queues the command; it becomes a
    /// control-command event at the next event boundary.
    void submit(const Command& c);

    void set_trace_observer(TraceObserver obs) { trace_observer_ = std::move(obs); }
    void set_timeline_observer(metrics::Timeline::Observer obs);
    void set_dodag_observer(DodagObserver obs) { dodag_observer_ = std::move(obs); }

    const Scenario& scenario() const { return scenario_; }
    const std::vector<std::string>& trace() const { return trace_; }
    std::string trace_text() const;
    const metrics::Timeline& timeline() const { return timeline_; }
    const metrics::DeliveryLedger& deliveries() const { return ledger_; }

    bool has_mote(MoteId id) const { return index_.contains(id); }
    const rpl::Node& node(MoteId id) const { return mote(id).node; }
    const metrics::EnergyAccount& energy(MoteId id) const { return mote(id).energy; }
    Vec2 position(MoteId id) const { return mote(id).position; }
    bool alive(MoteId id) const { return mote(id).alive; }
    std::vector<MoteId> mote_ids() const;

    std::vector<rpl::DodagVertex> dodag() const;
    std::uint8_t dodag_version() const;
    Snapshot snapshot() const;

    /// Report rows with energy accounts closed at the current clock.
    std::vector<metrics::MoteRow> mote_rows() const;
    std::vector<metrics::LinkRow> link_rows() const;
    std::string summary_text() const;

    /// Writes motes.csv, links.csv, delivery.csv, timeline.ndjson,
    /// trace.ndjson, dodag.dot and summary.txt into `dir` (created if
    /// needed). Throws std::runtime_error naming the failing path.
    void export_reports(const std::filesystem::path& dir) const;

private:
    struct Frame {
        MoteId src = 0;
        std::optional<MoteId> dst;  // empty: broadcast
        std::vector<std::uint8_t> payload;  // compressed IPv6 header + upper layer
        std::string label;
        std::optional<metrics::DatagramId> datagram;
    };

    struct Transmission {
        std::uint64_t id = 0;
        Frame frame;
        SimTime start = 0;
        SimTime airtime = 0;
        bool aborted = false;
        bool delivered_to_dst = false;
        bool collided_at_dst = false;
    };

    enum class RxCharge { full, header };

    struct Mote {
        Mote(MoteSpec s, rpl::Node n, metrics::EnergyAccount e)
            : spec(std::move(s)), position(spec.position), node(std::move(n)), energy(e) {}

        MoteSpec spec;
        Vec2 position;
        rpl::Node node;
        metrics::EnergyAccount energy;
        bool alive = true;

        std::deque<Frame> queue;
        std::optional<Frame> current;
        unsigned attempt = 0;
        bool mac_busy = false;
        bool in_turnaround = false;
        std::optional<std::uint64_t> transmitting;

        radio::ReceiverChannel channel;
        std::map<std::uint64_t, RxCharge> charged;
        std::uint64_t depletion_token = 0;
    };

    struct EvNodeTimer {
        rpl::TimerKind kind;
        std::uint64_t token;
    };
    struct EvEnqueue {
        Frame frame;
    };
    struct EvTxStart {};
    struct EvRetry {};
    struct EvTxEnd {
        std::uint64_t tx;
    };
    struct EvAckCheck {
        std::uint64_t tx;
    };
    struct EvArrivalStart {
        std::uint64_t tx;
        radio::Reception state;
        SimTime end;
    };
    struct EvHeaderEnd {
        std::uint64_t tx;
    };
    struct EvArrivalEnd {
        std::uint64_t tx;
    };
    struct EvTraffic {};
    struct EvDepletion {
        std::uint64_t token;
    };
    struct EvCommand {
        Command command;
        bool scripted;
    };

    using Payload = std::variant<EvNodeTimer, EvEnqueue, EvTxStart, EvRetry, EvTxEnd, EvAckCheck, EvArrivalStart,
                                 EvHeaderEnd, EvArrivalEnd, EvTraffic, EvDepletion, EvCommand>;

    struct Event {
        SimTime at = 0;
        std::uint64_t seq = 0;
        MoteId target = 0;
        Payload payload;
    };

    struct Later {
        bool operator()(const Event& a, const Event& b) const {
            return a.at != b.at ? a.at > b.at : a.seq > b.seq;
        }
    };

    // Effects of the event being dispatched, written into its trace record.
    using Notes = nlohmann::json;

    void build();
    void schedule(SimTime at, MoteId target, Payload payload);
    void drain_commands();
    void dispatch(const Event& ev);
    void trace(const Event& ev, nlohmann::json detail);

    Mote& mote(MoteId id) { return motes_[index_.at(id)]; }
    const Mote& mote(MoteId id) const { return motes_[index_.at(id)]; }

    void apply(Mote& m, const rpl::Actions& actions, Notes& notes);
    Frame control_frame(const Mote& m, std::optional<MoteId> to, const rpl::ControlMessage& msg) const;
    void send_control(Mote& m, std::optional<MoteId> to, const rpl::ControlMessage& msg, Notes& notes);
    Frame make_frame(MoteId src, std::optional<MoteId> dst, const lowpan::Ipv6Header& header,
                     const std::vector<std::uint8_t>& upper, std::string label,
                     std::optional<metrics::DatagramId> datagram) const;
    void enqueue(Mote& m, Frame frame, Notes& notes);
    void try_start(Mote& m);
    void begin_attempt(Mote& m);
    void finish_current(Mote& m);
    void drop_datagram(const Frame& f, metrics::Fate fate, Notes& notes, const char* why);

    void on_tx_start(Mote& m, Notes& notes);
    void on_tx_end(Mote& m, std::uint64_t tx, Notes& notes);
    void on_ack_check(Mote& m, std::uint64_t tx, Notes& notes);
    void on_arrival_start(Mote& m, const EvArrivalStart& ev, Notes& notes);
    void on_header_end(Mote& m, std::uint64_t tx);
    void on_arrival_end(Mote& m, std::uint64_t tx, Notes& notes);
    void receive(Mote& m, const Transmission& t, Notes& notes);
    void receive_data(Mote& m, const Transmission& t, lowpan::Ipv6Header header, Notes& notes);
    void on_traffic(Mote& m, Notes& notes);
    void on_command(const EvCommand& ev, Notes& notes);

    static EventKind kind_of(const Payload& p);
    void refresh_radio(Mote& m);
    void arm_depletion(Mote& m);
    void kill(Mote& m, const char* reason, Notes& notes);
    rpl::NodeStatus status_of(Mote& m);
    bool link_cut(MoteId a, MoteId b) const;
    void release(std::uint64_t tx);

    Scenario scenario_;
    EngineOptions options_;

    Rng rng_;
    SimTime now_ = 0;
    std::uint64_t next_seq_ = 0;
    std::uint64_t fired_ = 0;
    std::uint64_t next_tx_ = 1;
    std::priority_queue<Event, std::vector<Event>, Later> queue_;

    std::vector<Mote> motes_;
    std::map<MoteId, std::size_t> index_;
    std::map<std::uint64_t, Transmission> transmissions_;
    std::map<std::uint64_t, int> tx_refs_;
    std::set<std::pair<MoteId, MoteId>> cut_links_;

    metrics::Timeline timeline_;
    metrics::DeliveryLedger ledger_;
    std::vector<std::string> trace_;
    bool dodag_dirty_ = false;

    std::mutex command_mutex_;
    std::vector<Command> pending_commands_;

    TraceObserver trace_observer_;
    DodagObserver dodag_observer_;
    metrics::Timeline::Observer timeline_observer_;
};

}  // namespace llnsim::sim
