#include "llnsim/sim/engine.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <fmt/format.h>

#include "llnsim/lowpan/codec.hpp"
#include "llnsim/rpl/messages.hpp"

namespace llnsim::sim {

using nlohmann::json;

const char* to_string(EventKind k) {
    switch (k) {
        case EventKind::timer: return "timer";
        case EventKind::frame_delivery: return "frame_delivery";
        case EventKind::traffic: return "traffic";
        case EventKind::control_command: return "control_command";
    }
    return "?";
}

namespace {

// Both ends of the application flow use this UDP port.
constexpr std::uint16_t kAppPort = 0xf0b0;

void note(json& d, json n) { d["notes"].push_back(std::move(n)); }

json opt_id(std::optional<MoteId> id) { return id ? json(*id) : json(nullptr); }

SimTime airtime_us(std::size_t psdu_payload, std::int64_t rate_bps) {
    const auto bits = static_cast<std::int64_t>((kPhyOverheadBytes + kMacOverheadBytes + psdu_payload) * 8);
    return (bits * kMicrosPerSecond + rate_bps - 1) / rate_bps;
}

SimTime header_airtime_us(std::int64_t rate_bps) {
    const auto bits = static_cast<std::int64_t>(kMacHeaderToDstBytes * 8);
    return (bits * kMicrosPerSecond + rate_bps - 1) / rate_bps;
}

}  // namespace

Engine::Engine(Scenario scenario, EngineOptions options) : scenario_(std::move(scenario)), options_(options) {
    validate(scenario_);
    build();
}

void Engine::reload() { build(); }

void Engine::set_timeline_observer(metrics::Timeline::Observer obs) {
    timeline_observer_ = std::move(obs);
    timeline_.set_observer(timeline_observer_);
}

void Engine::build() {
    rng_.reseed(scenario_.seed);
    now_ = 0;
    next_seq_ = 0;
    fired_ = 0;
    next_tx_ = 1;
    queue_ = {};
    motes_.clear();
    index_.clear();
    transmissions_.clear();
    tx_refs_.clear();
    cut_links_.clear();
    timeline_.clear();
    timeline_.set_observer(timeline_observer_);
    ledger_.clear();
    trace_.clear();
    dodag_dirty_ = false;
    {
        std::lock_guard lock(command_mutex_);
        pending_commands_.clear();
    }

    std::vector<MoteSpec> specs = scenario_.motes;
    std::sort(specs.begin(), specs.end(), [](const MoteSpec& a, const MoteSpec& b) { return a.id < b.id; });
    motes_.reserve(specs.size());
    for (const auto& spec : specs) {
        rpl::NodeConfig cfg;
        cfg.id = spec.id;
        cfg.role = spec.role;
        cfg.trickle = scenario_.trickle;
        cfg.objective = scenario_.objective;
        index_[spec.id] = motes_.size();
        motes_.emplace_back(spec, rpl::Node(cfg),
                            metrics::EnergyAccount(spec.power_source, spec.battery_capacity_mC, scenario_.energy, 0));
    }

    json boot = json::object();
    for (auto& m : motes_) {
        apply(m, m.node.start(0, rng_), boot);
        arm_depletion(m);
    }
    const SimTime interval = from_seconds(scenario_.traffic.interval_s);
    for (auto& m : motes_) {
        if (m.spec.role == rpl::Role::root) continue;
        schedule(rng_.uniform_int(1, interval), m.spec.id, EvTraffic{});
    }
    for (const auto& entry : scenario_.script) schedule(entry.at, 0, EvCommand{entry.command, true});
}

void Engine::schedule(SimTime at, MoteId target, Payload payload) {
    queue_.push(Event{std::max(at, now_), next_seq_++, target, std::move(payload)});
}

void Engine::check_command(const Command& c) const {
    if (const auto* mv = std::get_if<MoveMote>(&c)) {
        if (!has_mote(mv->id)) throw std::invalid_argument(fmt::format("unknown mote id {}", mv->id));
        if (!std::isfinite(mv->position.x) || !std::isfinite(mv->position.y)) {
            throw std::invalid_argument("position must be finite");
        }
    } else if (const auto* f = std::get_if<InjectFailure>(&c)) {
        if (!has_mote(f->a)) throw std::invalid_argument(fmt::format("unknown mote id {}", f->a));
        if (f->b && !has_mote(*f->b)) throw std::invalid_argument(fmt::format("unknown mote id {}", *f->b));
        if (f->b && *f->b == f->a) throw std::invalid_argument("a link needs two distinct motes");
    }
}

void Engine::submit(const Command& c) {
    check_command(c);
    std::lock_guard lock(command_mutex_);
    pending_commands_.push_back(c);
}

void Engine::drain_commands() {
    std::vector<Command> cmds;
    {
        std::lock_guard lock(command_mutex_);
        cmds.swap(pending_commands_);
    }
    for (auto& c : cmds) schedule(now_, 0, EvCommand{std::move(c), false});
}

bool Engine::finished() const { return queue_.empty() || queue_.top().at > duration(); }

std::optional<SimTime> Engine::next_event_time() const {
    if (queue_.empty()) return std::nullopt;
    return queue_.top().at;
}

EventKind Engine::kind_of(const Payload& p) {
    if (std::holds_alternative<EvTraffic>(p)) return EventKind::traffic;
    if (std::holds_alternative<EvCommand>(p)) return EventKind::control_command;
    if (std::holds_alternative<EvNodeTimer>(p) || std::holds_alternative<EvEnqueue>(p) ||
        std::holds_alternative<EvTxStart>(p) || std::holds_alternative<EvRetry>(p) ||
        std::holds_alternative<EvDepletion>(p)) {
        return EventKind::timer;
    }
    return EventKind::frame_delivery;
}

std::optional<FiredEvent> Engine::step() {
    drain_commands();
    if (finished()) return std::nullopt;
    Event ev = queue_.top();
    queue_.pop();
    now_ = ev.at;
    dispatch(ev);
    ++fired_;
    if (dodag_dirty_) {
        dodag_dirty_ = false;
        if (dodag_observer_) dodag_observer_();
    }
    return FiredEvent{ev.at, ev.seq, kind_of(ev.payload), ev.target};
}

std::size_t Engine::run_until(SimTime t) {
    const SimTime bound = std::min(t, duration());
    std::size_t n = 0;
    while (true) {
        drain_commands();
        if (queue_.empty() || queue_.top().at > bound) break;
        step();
        ++n;
    }
    if (bound > now_) now_ = bound;
    return n;
}

void Engine::trace(const Event& ev, json detail) {
    if (!options_.record_trace && !trace_observer_) return;
    std::string line = fmt::format(R"({{"t_us":{},"seq":{},"kind":"{}","mote":{},"detail":{}}})", ev.at, ev.seq, to_string(kind_of(ev.payload)),
                                   ev.target, detail.dump());
    if (trace_observer_) trace_observer_(line);
    if (options_.record_trace) trace_.push_back(std::move(line));
}

void Engine::dispatch(const Event& ev) {
    json d = json::object();
    std::visit(
        [&](const auto& p) {
            using T = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<T, EvCommand>) {
                d["event"] = "command";
                on_command(p, d);
                return;
            } else {
                Mote& m = mote(ev.target);
                if constexpr (std::is_same_v<T, EvNodeTimer>) {
                    d["event"] = "node_timer";
                    d["timer"] = rpl::to_string(p.kind);
                    if (!m.alive) {
                        d["ignored"] = "mote_down";
                        return;
                    }
                    const bool trickle_kind = p.kind == rpl::TimerKind::trickle_fire || p.kind == rpl::TimerKind::trickle_end;
                    const bool stale = trickle_kind && (!m.node.trickle().running() || m.node.trickle().generation() != p.token);
                    const auto dio_before = m.node.counters().dio_sent;
                    auto actions = m.node.on_timer(p.kind, p.token, now_, rng_);
                    if (trickle_kind) {
                        if (stale) {
                            d["stale"] = true;
                        } else {
                            const auto& tr = m.node.trickle();
                            if (p.kind == rpl::TimerKind::trickle_fire) {
                                d["emitted"] = m.node.counters().dio_sent > dio_before;
                                d["counter"] = tr.counter();
                            }
                            d["interval_us"] = tr.interval();
                            d["interval_start_us"] = tr.interval_start();
                        }
                    }
                    apply(m, actions, d);
                } else if constexpr (std::is_same_v<T, EvEnqueue>) {
                    d["event"] = "enqueue";
                    d["frame"] = p.frame.label;
                    d["dst"] = opt_id(p.frame.dst);
                    enqueue(m, p.frame, d);
                } else if constexpr (std::is_same_v<T, EvTxStart>) {
                    d["event"] = "tx_start";
                    on_tx_start(m, d);
                } else if constexpr (std::is_same_v<T, EvRetry>) {
                    d["event"] = "retry";
                    if (m.alive && m.current && m.mac_busy) begin_attempt(m);
                } else if constexpr (std::is_same_v<T, EvTxEnd>) {
                    d["event"] = "tx_end";
                    d["tx"] = p.tx;
                    on_tx_end(m, p.tx, d);
                } else if constexpr (std::is_same_v<T, EvAckCheck>) {
                    d["event"] = "ack_check";
                    d["tx"] = p.tx;
                    on_ack_check(m, p.tx, d);
                } else if constexpr (std::is_same_v<T, EvArrivalStart>) {
                    d["event"] = "arrival_start";
                    d["tx"] = p.tx;
                    on_arrival_start(m, p, d);
                } else if constexpr (std::is_same_v<T, EvHeaderEnd>) {
                    d["event"] = "header_end";
                    d["tx"] = p.tx;
                    on_header_end(m, p.tx);
                } else if constexpr (std::is_same_v<T, EvArrivalEnd>) {
                    d["event"] = "arrival_end";
                    d["tx"] = p.tx;
                    on_arrival_end(m, p.tx, d);
                } else if constexpr (std::is_same_v<T, EvTraffic>) {
                    d["event"] = "app_send";
                    on_traffic(m, d);
                } else if constexpr (std::is_same_v<T, EvDepletion>) {
                    d["event"] = "depletion_check";
                    if (!m.alive || p.token != m.depletion_token) {
                        d["stale"] = true;
                    } else {
                        kill(m, "battery_depleted", d);
                    }
                }
            }
        },
        ev.payload);
    trace(ev, std::move(d));
}

// --- RPL glue ---------------------------------------------------------------

void Engine::apply(Mote& m, const rpl::Actions& actions, json& d) {
    for (const auto& action : actions) {
        std::visit(
            [&](const auto& a) {
                using T = std::decay_t<decltype(a)>;
                if constexpr (std::is_same_v<T, rpl::SendControl>) {
                    if (a.not_before > now_) {
                        schedule(a.not_before, m.spec.id, EvEnqueue{control_frame(m, a.to, a.message)});
                        note(d, {{"defer", rpl::kind_name(a.message)}, {"to", opt_id(a.to)}, {"at_us", a.not_before}});
                    } else {
                        send_control(m, a.to, a.message, d);
                    }
                } else if constexpr (std::is_same_v<T, rpl::ArmTimer>) {
                    schedule(a.at, m.spec.id, EvNodeTimer{a.kind, a.token});
                } else if constexpr (std::is_same_v<T, rpl::ParentChanged>) {
                    note(d, {{"parent_change", {{"from", opt_id(a.from)}, {"to", opt_id(a.to)}}},
                             {"rank", m.node.state().rank}});
                    dodag_dirty_ = true;
                } else if constexpr (std::is_same_v<T, rpl::TrickleReset>) {
                    note(d, {{"trickle_reset", a.at}});
                }
            },
            action);
    }
}

Engine::Frame Engine::control_frame(const Mote& m, std::optional<MoteId> to, const rpl::ControlMessage& msg) const {
    lowpan::Ipv6Header h;
    h.next_header = lowpan::kNextHeaderIcmpv6;
    h.src = m.node.address();
    h.dst = to ? lowpan::address_for_mote(*to) : lowpan::all_rpl_nodes();
    auto upper = rpl::encode_control(msg);
    h.payload_length = static_cast<std::uint16_t>(upper.size());
    return make_frame(m.spec.id, to, h, upper, rpl::kind_name(msg), std::nullopt);
}

void Engine::send_control(Mote& m, std::optional<MoteId> to, const rpl::ControlMessage& msg, json& d) {
    note(d, {{"send", rpl::kind_name(msg)}, {"to", opt_id(to)}});
    enqueue(m, control_frame(m, to, msg), d);
}

Engine::Frame Engine::make_frame(MoteId src, std::optional<MoteId> dst, const lowpan::Ipv6Header& header,
                                 const std::vector<std::uint8_t>& upper, std::string label,
                                 std::optional<metrics::DatagramId> datagram) const {
    const lowpan::MacContext ctx{lowpan::mac_for_mote(src), dst ? lowpan::mac_for_mote(*dst) : lowpan::kBroadcastMac, 0,
                                 lowpan::kLinkLocalPrefix};
    const auto c = lowpan::compress(header, ctx, true);
    Frame f{src, dst, c.inline_bytes, std::move(label), datagram};
    f.payload.insert(f.payload.end(), upper.begin(), upper.end());
    if (kMacOverheadBytes + f.payload.size() > kMaxPsduBytes) {
        throw std::logic_error(fmt::format("{} frame of {} octets exceeds the 127-octet PSDU", f.label,
                                           kMacOverheadBytes + f.payload.size()));
    }
    return f;
}

rpl::NodeStatus Engine::status_of(Mote& m) {
    metrics::EnergyAccount copy = m.energy;
    if (copy.last_transition() <= now_) copy.advance(now_);
    return {m.spec.power_source, metrics::energy_estimate(copy)};
}

// --- MAC --------------------------------------------------------------------

void Engine::drop_datagram(const Frame& f, metrics::Fate fate, json& d, const char* why) {
    if (f.datagram) {
        ledger_.settle(*f.datagram, fate, now_);
        note(d, {{"datagram", *f.datagram}, {"fate", metrics::to_string(fate)}, {"why", why}});
    } else {
        note(d, {{"drop", f.label}, {"why", why}});
    }
}

void Engine::enqueue(Mote& m, Frame frame, json& d) {
    if (!m.alive) {
        drop_datagram(frame, metrics::Fate::dropped_loss, d, "mote_down");
        return;
    }
    if (m.queue.size() >= scenario_.mac.queue_capacity) {
        drop_datagram(frame, metrics::Fate::dropped_loss, d, "queue_full");
        return;
    }
    m.queue.push_back(std::move(frame));
    try_start(m);
}

void Engine::try_start(Mote& m) {
    if (!m.alive || m.mac_busy || m.queue.empty()) return;
    m.current = std::move(m.queue.front());
    m.queue.pop_front();
    m.attempt = 0;
    begin_attempt(m);
}

void Engine::begin_attempt(Mote& m) {
    m.mac_busy = true;
    m.in_turnaround = true;
    refresh_radio(m);
    schedule(now_ + scenario_.mac.turnaround_us, m.spec.id, EvTxStart{});
}

void Engine::finish_current(Mote& m) {
    m.current.reset();
    m.mac_busy = false;
    m.attempt = 0;
    try_start(m);
}

void Engine::release(std::uint64_t tx) {
    auto it = tx_refs_.find(tx);
    if (it == tx_refs_.end()) return;
    if (--it->second <= 0) {
        tx_refs_.erase(it);
        transmissions_.erase(tx);
    }
}

bool Engine::link_cut(MoteId a, MoteId b) const { return cut_links_.contains(std::minmax(a, b)); }

void Engine::on_tx_start(Mote& m, json& d) {
    if (!m.alive || !m.current) {
        d["ignored"] = "mote_down";
        return;
    }
    m.in_turnaround = false;
    Transmission t;
    t.id = next_tx_++;
    t.frame = *m.current;
    t.start = now_;
    t.airtime = airtime_us(t.frame.payload.size(), scenario_.mac.data_rate_bps);

    d["tx"] = t.id;
    d["frame"] = t.frame.label;
    d["dst"] = opt_id(t.frame.dst);
    d["attempt"] = m.attempt;
    d["octets"] = kMacOverheadBytes + t.frame.payload.size();
    d["airtime_us"] = t.airtime;
    if (t.frame.datagram) d["datagram"] = *t.frame.datagram;

    if (m.channel.destroy_in_progress(now_) > 0) note(d, {{"rx_aborted", "half_duplex"}});
    m.transmitting = t.id;
    refresh_radio(m);

    std::vector<radio::Station> candidates;
    for (const auto& other : motes_) {
        if (other.spec.id == m.spec.id || !other.alive || link_cut(m.spec.id, other.spec.id)) continue;
        candidates.push_back({other.spec.id, other.position});
    }
    const auto outcome = radio::propagate(scenario_.radio, {m.spec.id, m.position}, candidates, rng_);
    if (!outcome.tx_gate_passed) d["tx_gate"] = false;

    int refs = 0;
    SimTime ack_at = now_ + t.airtime;
    json receivers = json::array();
    for (const auto& r : outcome.receivers) {
        if (r.state == radio::Reception::silent) continue;
        const SimTime start = now_ + r.delay_us;
        schedule(start, r.id, EvArrivalStart{t.id, r.state, start + t.airtime});
        schedule(start + t.airtime, r.id, EvArrivalEnd{t.id});
        refs += 2;
        if (t.frame.dst && *t.frame.dst == r.id) ack_at = start + t.airtime;
        receivers.push_back({r.id, radio::to_string(r.state)});
    }
    d["receivers"] = std::move(receivers);
    schedule(now_ + t.airtime, m.spec.id, EvTxEnd{t.id});
    ++refs;
    if (t.frame.dst) {
        schedule(ack_at, m.spec.id, EvAckCheck{t.id});
        ++refs;
    }
    tx_refs_[t.id] = refs;
    transmissions_[t.id] = std::move(t);
}

void Engine::on_tx_end(Mote& m, std::uint64_t tx, json& d) {
    auto it = transmissions_.find(tx);
    const bool broadcast = it != transmissions_.end() && !it->second.frame.dst;
    const bool aborted = it == transmissions_.end() || it->second.aborted;
    if (m.transmitting == tx) {
        m.transmitting.reset();
        refresh_radio(m);
    }
    if (aborted) {
        d["aborted"] = true;
    } else if (broadcast && m.alive) {
        finish_current(m);
    }
    release(tx);
}

void Engine::on_ack_check(Mote& m, std::uint64_t tx, json& d) {
    const Transmission& t = transmissions_.at(tx);
    if (t.aborted || !m.alive || !m.current) {
        d["ignored"] = "mote_down";
        release(tx);
        return;
    }
    const bool acked = t.delivered_to_dst;
    const bool collided = t.collided_at_dst;
    const MoteId dst = *t.frame.dst;
    release(tx);

    d["acked"] = acked;
    d["attempt"] = m.attempt;
    apply(m, m.node.on_link_outcome(dst, acked, now_, rng_), d);

    if (acked) {
        finish_current(m);
    } else if (m.attempt < scenario_.mac.max_retries) {
        ++m.attempt;
        const SimTime backoff = rng_.uniform_int(scenario_.mac.backoff_min_us, scenario_.mac.backoff_max_us);
        d["backoff_us"] = backoff;
        schedule(now_ + backoff, m.spec.id, EvRetry{});
    } else {
        drop_datagram(*m.current, collided ? metrics::Fate::dropped_collision : metrics::Fate::dropped_loss, d,
                      "retries_exhausted");
        finish_current(m);
    }
}

void Engine::on_arrival_start(Mote& m, const EvArrivalStart& ev, json& d) {
    const Transmission& t = transmissions_.at(ev.tx);
    d["from"] = t.frame.src;
    d["state"] = radio::to_string(ev.state);
    if (!m.alive || t.aborted) {
        d["ignored"] = m.alive ? "aborted" : "mote_down";
        return;
    }
    const bool collided = m.channel.begin({ev.tx, now_, ev.end, ev.state});
    if (collided) d["collision"] = true;
    if (m.transmitting) {
        m.channel.destroy_in_progress(now_);
        d["half_duplex"] = true;
    }
    if (collided || ev.state == radio::Reception::interfered) {
        timeline_.push(now_, m.spec.id, metrics::TimelineKind::interference);
    }
    if (ev.state == radio::Reception::received && !m.transmitting) {
        const bool addressed = !t.frame.dst || *t.frame.dst == m.spec.id;
        if (addressed) {
            m.charged[ev.tx] = RxCharge::full;
        } else {
            m.charged[ev.tx] = RxCharge::header;
            schedule(std::min(now_ + header_airtime_us(scenario_.mac.data_rate_bps), ev.end), m.spec.id,
                     EvHeaderEnd{ev.tx});
            ++tx_refs_[ev.tx];
        }
    }
    refresh_radio(m);
}

void Engine::on_header_end(Mote& m, std::uint64_t tx) {
    auto it = m.charged.find(tx);
    if (it != m.charged.end() && it->second == RxCharge::header) {
        m.charged.erase(it);
        refresh_radio(m);
    }
    release(tx);
}

void Engine::on_arrival_end(Mote& m, std::uint64_t tx, json& d) {
    Transmission& t = transmissions_.at(tx);
    const auto verdict = m.channel.finish(tx);
    if (auto it = m.charged.find(tx); it != m.charged.end() && it->second == RxCharge::full) {
        m.charged.erase(it);
        refresh_radio(m);
    }
    if (verdict && m.alive) {
        d["delivered"] = verdict->delivered && !t.aborted;
        if (verdict->collided) d["collided"] = true;
        const bool for_me = !t.frame.dst || *t.frame.dst == m.spec.id;
        if (t.frame.dst && *t.frame.dst == m.spec.id && verdict->collided) t.collided_at_dst = true;
        if (verdict->delivered && !t.aborted && for_me) {
            if (t.frame.dst) t.delivered_to_dst = true;
            receive(m, t, d);
        }
    }
    release(tx);
}

// --- upper layers -----------------------------------------------------------

void Engine::receive(Mote& m, const Transmission& t, json& d) {
    const lowpan::MacContext ctx{lowpan::mac_for_mote(t.frame.src),
                                 t.frame.dst ? lowpan::mac_for_mote(m.spec.id) : lowpan::kBroadcastMac,
                                 t.frame.payload.size(), lowpan::kLinkLocalPrefix};
    const std::span<const std::uint8_t> octets(t.frame.payload);
    lowpan::Decoded dec;
    try {
        dec = lowpan::decompress(octets, ctx);
    } catch (const lowpan::CodecError& e) {
        note(d, {{"codec_error", e.what()}});
        return;
    }
    const auto upper = octets.subspan(dec.consumed);
    if (dec.header.next_header == lowpan::kNextHeaderUdp) {
        receive_data(m, t, dec.header, d);
        return;
    }
    if (dec.header.next_header != lowpan::kNextHeaderIcmpv6) {
        note(d, {{"drop", "unknown_next_header"}});
        return;
    }
    rpl::ControlMessage msg;
    try {
        msg = rpl::decode_control(upper);
    } catch (const rpl::ControlCodecError& e) {
        note(d, {{"control_error", e.what()}});
        return;
    }
    note(d, {{"rx", rpl::kind_name(msg)}});
    const MoteId from = t.frame.src;
    rpl::Actions actions = std::visit(
        [&](const auto& body) -> rpl::Actions {
            using T = std::decay_t<decltype(body)>;
            if constexpr (std::is_same_v<T, rpl::DioMessage>) {
                return m.node.handle_dio(body, from, status_of(mote(from)), now_, rng_);
            } else if constexpr (std::is_same_v<T, rpl::DisMessage>) {
                return m.node.handle_dis(body, from, now_, rng_);
            } else if constexpr (std::is_same_v<T, rpl::DaoMessage>) {
                return m.node.handle_dao(body, from, now_, rng_);
            } else {
                return m.node.handle_dao_ack(body, from, now_, rng_);
            }
        },
        msg);
    apply(m, actions, d);
}

void Engine::receive_data(Mote& m, const Transmission& t, lowpan::Ipv6Header header, json& d) {
    if (!t.frame.datagram) return;
    const auto id = *t.frame.datagram;
    d["datagram"] = id;
    const auto decision = m.node.route(header.dst);
    if (decision.kind == rpl::RouteDecision::Kind::local) {
        ledger_.settle(id, metrics::Fate::delivered, now_);
        note(d, {{"datagram", id}, {"fate", "delivered"}});
        return;
    }
    Frame copy = t.frame;
    if (decision.kind == rpl::RouteDecision::Kind::no_route) {
        drop_datagram(copy, metrics::Fate::dropped_no_route, d, "no_route");
        return;
    }
    if (header.hop_limit <= 1) {
        drop_datagram(copy, metrics::Fate::dropped_no_route, d, "hop_limit");
        return;
    }
    --header.hop_limit;
    const std::vector<std::uint8_t> upper(t.frame.payload.end() - header.payload_length, t.frame.payload.end());
    note(d, {{"forward", id}, {"to", decision.next_hop}});
    enqueue(m, make_frame(m.spec.id, decision.next_hop, header, upper, "data", id), d);
}

void Engine::on_traffic(Mote& m, json& d) {
    if (!m.alive) {
        d["ignored"] = "mote_down";
        return;
    }
    schedule(now_ + from_seconds(scenario_.traffic.interval_s), m.spec.id, EvTraffic{});
    const auto id = ledger_.open(m.spec.id, now_);
    d["datagram"] = id;

    const auto root = lowpan::address_for_mote(scenario_.root_id());
    const auto decision = m.node.route(root);
    if (decision.kind != rpl::RouteDecision::Kind::next_hop) {
        ledger_.settle(id, metrics::Fate::dropped_no_route, now_);
        note(d, {{"datagram", id}, {"fate", "dropped_no_route"}, {"why", "no_route"}});
        return;
    }
    const std::size_t udp_len = kUdpHeaderBytes + scenario_.traffic.payload_bytes;
    std::vector<std::uint8_t> upper(udp_len, 0);
    upper[0] = upper[2] = kAppPort >> 8;
    upper[1] = upper[3] = kAppPort & 0xff;
    upper[4] = static_cast<std::uint8_t>(udp_len >> 8);
    upper[5] = static_cast<std::uint8_t>(udp_len & 0xff);
    for (std::size_t i = 0; i < 8 && kUdpHeaderBytes + i < udp_len; ++i) {
        upper[kUdpHeaderBytes + i] = static_cast<std::uint8_t>(id >> (56 - 8 * i));
    }
    lowpan::Ipv6Header h;
    h.src = m.node.address();
    h.dst = root;
    h.payload_length = static_cast<std::uint16_t>(udp_len);
    enqueue(m, make_frame(m.spec.id, decision.next_hop, h, upper, "data", id), d);
}

void Engine::on_command(const EvCommand& ev, json& d) {
    d["cmd"] = command_name(ev.command);
    d["scripted"] = ev.scripted;
    std::visit(
        [&](const auto& c) {
            using T = std::decay_t<decltype(c)>;
            if constexpr (std::is_same_v<T, MoveMote>) {
                d["id"] = c.id;
                d["position"] = {c.position.x, c.position.y};
                mote(c.id).position = c.position;
            } else if constexpr (std::is_same_v<T, InjectFailure>) {
                if (c.b) {
                    d["link"] = {c.a, *c.b};
                    cut_links_.insert(std::minmax(c.a, *c.b));
                } else {
                    d["mote"] = c.a;
                    Mote& m = mote(c.a);
                    if (m.alive) kill(m, "failure_injected", d);
                }
            } else {
                Mote& root = mote(scenario_.root_id());
                if (!root.alive) {
                    d["ignored"] = "root_down";
                    return;
                }
                apply(root, root.node.global_repair(now_, rng_), d);
                d["version"] = root.node.state().version_number;
            }
        },
        ev.command);
}

// --- radio state, energy, failures -----------------------------------------

void Engine::refresh_radio(Mote& m) {
    using metrics::RadioState;
    RadioState desired = RadioState::off;
    if (m.alive) {
        if (m.transmitting) {
            desired = RadioState::tx;
        } else if (!m.charged.empty()) {
            desired = RadioState::rx;
        } else if (m.in_turnaround) {
            desired = RadioState::idle_listen;
        }
    }
    if (desired == m.energy.state()) return;
    metrics::record_radio_transition(m.energy, timeline_, m.spec.id, desired, now_);
    arm_depletion(m);
}

void Engine::arm_depletion(Mote& m) {
    if (!m.alive || m.spec.power_source != PowerSource::battery) return;
    const std::uint64_t token = ++m.depletion_token;
    const auto when = m.energy.depleted() ? std::optional<SimTime>(now_) : m.energy.predicted_depletion();
    if (when && *when <= duration()) schedule(*when, m.spec.id, EvDepletion{token});
}

void Engine::kill(Mote& m, const char* reason, json& d) {
    note(d, {{"mote_down", reason}, {"id", m.spec.id}});
    if (m.transmitting) {
        if (auto it = transmissions_.find(*m.transmitting); it != transmissions_.end()) it->second.aborted = true;
        m.transmitting.reset();
    }
    if (m.current) drop_datagram(*m.current, metrics::Fate::dropped_loss, d, reason);
    for (const auto& f : m.queue) drop_datagram(f, metrics::Fate::dropped_loss, d, reason);
    m.queue.clear();
    m.current.reset();
    m.mac_busy = false;
    m.in_turnaround = false;
    m.channel.clear();
    m.charged.clear();
    m.alive = false;
    if (m.energy.state() != metrics::RadioState::off) {
        metrics::record_radio_transition(m.energy, timeline_, m.spec.id, metrics::RadioState::off, now_);
    }
    if (std::string_view(reason) == "battery_depleted" && !m.energy.depleted()) m.energy.deplete(now_);
    ++m.depletion_token;
    dodag_dirty_ = true;
}

// --- observation and reports ------------------------------------------------

std::vector<MoteId> Engine::mote_ids() const {
    std::vector<MoteId> ids;
    for (const auto& m : motes_) ids.push_back(m.spec.id);
    return ids;
}

std::vector<rpl::DodagVertex> Engine::dodag() const {
    std::vector<rpl::DodagVertex> out;
    for (const auto& m : motes_) {
        auto v = rpl::vertex_of(m.node);
        if (!m.alive) {
            v.joined = false;
            v.parent.reset();
            v.rank = rpl::kInfiniteRank;
        }
        out.push_back(v);
    }
    return out;
}

std::uint8_t Engine::dodag_version() const { return node(scenario_.root_id()).state().version_number; }

Snapshot Engine::snapshot() const {
    Snapshot s;
    s.now = now_;
    s.version = dodag_version();
    for (const auto& m : motes_) {
        metrics::EnergyAccount copy = m.energy;
        if (copy.last_transition() <= now_) copy.advance(now_);
        MoteSnapshot ms;
        ms.id = m.spec.id;
        ms.position = m.position;
        ms.role = m.spec.role;
        ms.power_source = m.spec.power_source;
        ms.alive = m.alive;
        ms.joined = m.alive && m.node.state().joined;
        ms.rank = ms.joined ? m.node.state().rank : rpl::kInfiniteRank;
        ms.parent = ms.joined ? m.node.state().preferred_parent : std::nullopt;
        ms.radio = m.energy.state();
        ms.ee = metrics::energy_estimate(copy);
        ms.charge_mC = copy.charge_mC();
        ms.duty_cycle = metrics::duty_cycle(copy);
        s.motes.push_back(ms);
    }
    for (std::size_t i = 0; i < metrics::kAllFates.size(); ++i) s.deliveries[i] = ledger_.count(metrics::kAllFates[i]);
    s.datagrams = ledger_.total();
    return s;
}

std::vector<metrics::MoteRow> Engine::mote_rows() const {
    std::vector<metrics::MoteRow> rows;
    for (const auto& m : motes_) {
        metrics::EnergyAccount copy = m.energy;
        if (copy.last_transition() <= now_) copy.advance(now_);
        metrics::MoteRow r;
        r.id = m.spec.id;
        r.role = rpl::to_string(m.spec.role);
        r.power_source = m.spec.power_source;
        r.off_us = copy.time_in(metrics::RadioState::off);
        r.idle_listen_us = copy.time_in(metrics::RadioState::idle_listen);
        r.rx_us = copy.time_in(metrics::RadioState::rx);
        r.tx_us = copy.time_in(metrics::RadioState::tx);
        r.charge_mC = copy.charge_mC();
        r.power_now_mC = copy.power_now();
        r.power_max_mC = copy.power_max();
        r.ee = metrics::energy_estimate(copy);
        r.duty_cycle = metrics::duty_cycle(copy);
        r.alive = m.alive;
        r.joined = m.alive && m.node.state().joined;
        if (r.joined) {
            r.rank = m.node.state().rank;
            r.parent = m.node.state().preferred_parent;
        }
        rows.push_back(r);
    }
    return rows;
}

std::vector<metrics::LinkRow> Engine::link_rows() const {
    std::vector<metrics::LinkRow> rows;
    for (const auto& m : motes_) {
        for (const auto& [neighbor, est] : m.node.links()) rows.push_back({m.spec.id, neighbor, est.stats()});
    }
    return rows;
}

std::string Engine::trace_text() const {
    std::string out;
    for (const auto& line : trace_) {
        out += line;
        out += '\n';
    }
    return out;
}

std::string Engine::summary_text() const {
    const auto rows = mote_rows();
    const auto vertices = dodag();
    const auto total = ledger_.total();
    const auto delivered = ledger_.count(metrics::Fate::delivered);

    std::string out;
    out += fmt::format("scenario        {}\n", scenario_.source.empty() ? "(inline)" : scenario_.source.string());
    out += fmt::format("seed            {}\n", scenario_.seed);
    out += fmt::format("virtual time    {:.6f} s of {:.6f} s\n", static_cast<double>(now_) / 1e6, scenario_.duration_s);
    out += fmt::format("events          {}\n", fired_);
    out += fmt::format("radio model     {}\n", radio::model_name(scenario_.radio));
    out += fmt::format("DODAG version   {}\n\n", dodag_version());

    out += fmt::format("datagrams sent  {}\n", total);
    for (auto f : metrics::kAllFates) out += fmt::format("  {:<18}{}\n", metrics::to_string(f), ledger_.count(f));
    out += fmt::format("delivery ratio  {}\n",
                       total ? fmt::format("{:.4f}", static_cast<double>(delivered) / static_cast<double>(total)) : "n/a");

    double etx_sum = 0.0;
    unsigned joined = 0, routers = 0, max_depth = 0;
    double charge = 0.0;
    for (const auto& r : rows) charge += r.charge_mC;
    for (const auto& v : vertices) {
        if (v.role == rpl::Role::root) continue;
        ++routers;
        if (!v.joined) continue;
        ++joined;
        etx_sum += static_cast<double>(v.rank) / rpl::kRankUnit;
        if (auto depth = rpl::depth_of(vertices, v.id)) max_depth = std::max(max_depth, *depth);
    }
    out += fmt::format("mean ETX to root {}\n", joined ? fmt::format("{:.4f}", etx_sum / joined) : "n/a");
    out += fmt::format("DODAG depth     {} hops ({} of {} motes joined)\n", max_depth, joined, routers);
    out += fmt::format("charge drawn    {:.6f} mC total, {} per delivered datagram\n\n", charge,
                       delivered ? fmt::format("{:.6f} mC", charge / static_cast<double>(delivered)) : "n/a");

    out += "mote  role    power    alive joined rank   parent duty_cycle ee\n";
    for (const auto& r : rows) {
        out += fmt::format("{:<5} {:<7} {:<8} {:<5} {:<6} {:<6} {:<6} {:<10.6f} {:.6f}\n", r.id, r.role,
                           to_string(r.power_source), r.alive ? "yes" : "no", r.joined ? "yes" : "no",
                           r.rank ? std::to_string(*r.rank) : "-", r.parent ? std::to_string(*r.parent) : "-",
                           r.duty_cycle, r.ee);
    }
    return out;
}

namespace {

std::ofstream open_report(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error(fmt::format("cannot write '{}'", path.string()));
    return out;
}

void close_report(std::ofstream& out, const std::filesystem::path& path) {
    out.close();
    if (!out) throw std::runtime_error(fmt::format("error writing '{}'", path.string()));
}

}  // namespace

void Engine::export_reports(const std::filesystem::path& dir) const {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw std::runtime_error(fmt::format("cannot create '{}': {}", dir.string(), ec.message()));

    auto write = [&](const char* name, auto&& body) {
        const auto path = dir / name;
        auto out = open_report(path);
        body(out);
        close_report(out, path);
    };
    write("motes.csv", [&](std::ostream& o) { metrics::write_mote_csv(o, mote_rows()); });
    write("links.csv", [&](std::ostream& o) { metrics::write_link_csv(o, link_rows()); });
    write("delivery.csv", [&](std::ostream& o) { metrics::write_delivery_csv(o, ledger_); });
    write("timeline.ndjson", [&](std::ostream& o) { metrics::write_timeline_ndjson(o, timeline_.events()); });
    write("trace.ndjson", [&](std::ostream& o) { o << trace_text(); });
    write("dodag.dot", [&](std::ostream& o) { rpl::write_dodag_dot(o, dodag(), dodag_version()); });
    write("summary.txt", [&](std::ostream& o) { o << summary_text(); });
}

}  // namespace llnsim::sim
