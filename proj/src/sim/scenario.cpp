#include "llnsim/sim/scenario.hpp"

#include "llnsim/sim/command_json.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <fmt/format.h>

namespace llnsim::sim {

using nlohmann::json;

const char* command_name(const Command& c) {
    struct {
        const char* operator()(const MoveMote&) const { return "move_mote"; }
        const char* operator()(const InjectFailure&) const { return "inject_failure"; }
        const char* operator()(const GlobalRepair&) const { return "global_repair"; }
    } v;
    return std::visit(v, c);
}

const MoteSpec* Scenario::find(MoteId id) const {
    for (const auto& m : motes) {
        if (m.id == id) return &m;
    }
    return nullptr;
}

MoteId Scenario::root_id() const {
    for (const auto& m : motes) {
        if (m.role == rpl::Role::root) return m.id;
    }
    return 0;
}

namespace {

[[noreturn]] void fail(const std::string& where, const std::string& what) {
    throw ScenarioError(fmt::format("{}: {}", where, what));
}

void reject_unknown_keys(const json& obj, const std::string& where, std::initializer_list<const char*> allowed) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        bool ok = false;
        for (const char* a : allowed) ok = ok || it.key() == a;
        if (!ok) fail(where, fmt::format("unknown key '{}'", it.key()));
    }
}

const json& require(const json& obj, const char* key, const std::string& where) {
    auto it = obj.find(key);
    if (it == obj.end()) fail(where, fmt::format("missing required key '{}'", key));
    return *it;
}

const json& require_object(const json& obj, const char* key, const std::string& where) {
    const json& v = require(obj, key, where);
    if (!v.is_object()) fail(where + "." + key, "expected an object");
    return v;
}

double number(const json& v, const std::string& where) {
    if (!v.is_number()) fail(where, "expected a number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) fail(where, "must be finite");
    return d;
}

double number_or(const json& obj, const char* key, double fallback, const std::string& where) {
    auto it = obj.find(key);
    return it == obj.end() ? fallback : number(*it, where + "." + key);
}

std::uint64_t unsigned_value(const json& v, const std::string& where) {
    if (!v.is_number_integer() || (v.is_number_integer() && !v.is_number_unsigned() && v.get<std::int64_t>() < 0)) {
        fail(where, "expected a non-negative integer");
    }
    return v.get<std::uint64_t>();
}

std::uint64_t unsigned_or(const json& obj, const char* key, std::uint64_t fallback, const std::string& where) {
    auto it = obj.find(key);
    return it == obj.end() ? fallback : unsigned_value(*it, where + "." + key);
}

MoteId mote_id(const json& v, const std::string& where) {
    const auto id = unsigned_value(v, where);
    if (id == 0 || id > 0xffff) fail(where, "mote id must be in 1..65535");
    return static_cast<MoteId>(id);
}

std::string string_value(const json& v, const std::string& where) {
    if (!v.is_string()) fail(where, "expected a string");
    return v.get<std::string>();
}

Vec2 position(const json& v, const std::string& where) {
    if (!v.is_array() || v.size() != 2) fail(where, "expected [x, y]");
    return {number(v[0], where + "[0]"), number(v[1], where + "[1]")};
}

MoteSpec parse_mote(const json& m, const std::string& where) {
    if (!m.is_object()) fail(where, "expected an object");
    reject_unknown_keys(m, where,
                        {"id", "position", "x", "y", "role", "power_source", "battery_capacity_mC", "node_status"});
    MoteSpec spec;
    spec.id = mote_id(require(m, "id", where), where + ".id");
    if (m.contains("position")) {
        spec.position = position(m["position"], where + ".position");
    } else {
        spec.position = {number(require(m, "x", where), where + ".x"), number(require(m, "y", where), where + ".y")};
    }
    const std::string role = string_value(require(m, "role", where), where + ".role");
    if (role == "root") {
        spec.role = rpl::Role::root;
    } else if (role == "router") {
        spec.role = rpl::Role::router;
    } else if (role == "leaf") {
        spec.role = rpl::Role::leaf;
    } else {
        fail(where + ".role", fmt::format("unknown role '{}' (expected root, router or leaf)", role));
    }
    if (m.contains("power_source")) {
        const std::string p = string_value(m["power_source"], where + ".power_source");
        if (p == "mains") {
            spec.power_source = PowerSource::mains;
        } else if (p == "battery") {
            spec.power_source = PowerSource::battery;
        } else {
            fail(where + ".power_source", fmt::format("unknown power source '{}' (expected mains or battery)", p));
        }
    }
    spec.battery_capacity_mC = number_or(m, "battery_capacity_mC", 0.0, where);
    if (m.contains("node_status")) {
        const json& ns = m["node_status"];
        const std::string w = where + ".node_status";
        if (!ns.is_object()) fail(w, "expected an object");
        reject_unknown_keys(ns, w, {"available_memory", "cpu_load"});
        spec.node_status.available_memory = unsigned_or(ns, "available_memory", 0, w);
        spec.node_status.cpu_load = number_or(ns, "cpu_load", 0.0, w);
    }
    return spec;
}

radio::DgrmEdge parse_edge(const json& e, const std::string& where) {
    if (!e.is_object()) fail(where, "expected an object");
    reject_unknown_keys(e, where, {"src", "dst", "rx_probability", "delay_us", "signal_dBm"});
    radio::DgrmEdge edge;
    edge.src = mote_id(require(e, "src", where), where + ".src");
    edge.dst = mote_id(require(e, "dst", where), where + ".dst");
    edge.rx_probability = number_or(e, "rx_probability", 1.0, where);
    edge.delay_us = static_cast<SimTime>(unsigned_or(e, "delay_us", 0, where));
    edge.signal_dbm = number_or(e, "signal_dBm", -10.0, where);
    return edge;
}

radio::RadioModel parse_radio(const json& r, const std::filesystem::path& base_dir) {
    const std::string where = "radio";
    reject_unknown_keys(r, where, {"model", "params"});
    const std::string model = string_value(require(r, "model", where), where + ".model");
    const json empty = json::object();
    const json& p = r.contains("params") ? r["params"] : empty;
    const std::string pw = where + ".params";
    if (!p.is_object()) fail(pw, "expected an object");

    if (model == "udgm_constant") {
        reject_unknown_keys(p, pw, {"tx_range", "interference_range"});
        radio::ConstantLossUdgm m;
        m.tx_range = number_or(p, "tx_range", m.tx_range, pw);
        m.interference_range = number_or(p, "interference_range", m.interference_range, pw);
        return m;
    }
    if (model == "udgm_distance") {
        reject_unknown_keys(p, pw, {"tx_range", "interference_range", "success_ratio_tx", "success_ratio_rx"});
        radio::DistanceLossUdgm m;
        m.tx_range = number_or(p, "tx_range", m.tx_range, pw);
        m.interference_range = number_or(p, "interference_range", m.interference_range, pw);
        m.success_ratio_tx = number_or(p, "success_ratio_tx", m.success_ratio_tx, pw);
        m.success_ratio_rx = number_or(p, "success_ratio_rx", m.success_ratio_rx, pw);
        return m;
    }
    if (model == "dgrm") {
        reject_unknown_keys(p, pw, {"edges", "edges_file"});
        std::vector<radio::DgrmEdge> edges;
        if (p.contains("edges")) {
            const json& list = p["edges"];
            if (!list.is_array()) fail(pw + ".edges", "expected an array");
            for (std::size_t i = 0; i < list.size(); ++i) {
                edges.push_back(parse_edge(list[i], fmt::format("{}.edges[{}]", pw, i)));
            }
        }
        if (p.contains("edges_file")) {
            const std::filesystem::path file = base_dir / string_value(p["edges_file"], pw + ".edges_file");
            std::ifstream in(file);
            if (!in) fail(pw + ".edges_file", fmt::format("cannot read '{}'", file.string()));
            std::stringstream ss;
            ss << in.rdbuf();
            try {
                auto more = radio::parse_edge_list(ss.str());
                edges.insert(edges.end(), more.begin(), more.end());
            } catch (const std::exception& e) {
                fail(file.string(), e.what());
            }
        }
        try {
            return radio::Dgrm(std::move(edges));
        } catch (const std::exception& e) {
            fail(pw, e.what());
        }
    }
    if (model == "friis") {
        reject_unknown_keys(p, pw, {"tx_power_dBm", "frequency_hz", "rx_sensitivity_dBm"});
        radio::FriisMrm m;
        m.tx_power_dbm = number_or(p, "tx_power_dBm", m.tx_power_dbm, pw);
        m.frequency_hz = number_or(p, "frequency_hz", m.frequency_hz, pw);
        m.rx_sensitivity_dbm = number_or(p, "rx_sensitivity_dBm", m.rx_sensitivity_dbm, pw);
        return m;
    }
    fail(where + ".model", fmt::format("unknown model '{}' (expected udgm_constant, udgm_distance, dgrm or friis)", model));
}

Command parse_command(const json& c, const std::string& where) {
    const std::string cmd = string_value(require(c, "cmd", where), where + ".cmd");
    if (cmd == "move_mote") {
        MoveMote m;
        m.id = mote_id(require(c, "id", where), where + ".id");
        m.position = position(require(c, "position", where), where + ".position");
        return m;
    }
    if (cmd == "inject_failure") {
        InjectFailure f;
        if (c.contains("link")) {
            const json& link = c["link"];
            if (!link.is_array() || link.size() != 2) fail(where + ".link", "expected [a, b]");
            f.a = mote_id(link[0], where + ".link[0]");
            f.b = mote_id(link[1], where + ".link[1]");
        } else if (c.contains("mote")) {
            f.a = mote_id(c["mote"], where + ".mote");
        } else {
            fail(where, "inject_failure needs 'link' or 'mote'");
        }
        return f;
    }
    if (cmd == "global_repair") return GlobalRepair{};
    fail(where + ".cmd", fmt::format("unknown scripted command '{}'", cmd));
}

}  // namespace

Command command_from_json(const json& c, const std::string& where) {
    if (!c.is_object()) fail(where, "expected an object");
    return parse_command(c, where);
}

Scenario load_scenario(const std::string& text, const std::filesystem::path& base_dir) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ScenarioError(fmt::format("scenario parse error: {}", e.what()));
    }
    if (!doc.is_object()) throw ScenarioError("scenario: top level must be an object");
    reject_unknown_keys(doc, "scenario",
                        {"motes", "radio", "traffic", "duration_s", "seed", "trickle", "energy", "objective", "mac",
                         "script", "name", "description"});

    Scenario s;
    const json& motes = require(doc, "motes", "scenario");
    if (!motes.is_array()) fail("motes", "expected an array");
    for (std::size_t i = 0; i < motes.size(); ++i) s.motes.push_back(parse_mote(motes[i], fmt::format("motes[{}]", i)));

    s.radio = parse_radio(require_object(doc, "radio", "scenario"), base_dir);

    const json& traffic = require_object(doc, "traffic", "scenario");
    reject_unknown_keys(traffic, "traffic", {"interval_s", "payload_bytes"});
    s.traffic.interval_s = number(require(traffic, "interval_s", "traffic"), "traffic.interval_s");
    s.traffic.payload_bytes = unsigned_value(require(traffic, "payload_bytes", "traffic"), "traffic.payload_bytes");

    s.duration_s = number(require(doc, "duration_s", "scenario"), "duration_s");
    s.seed = unsigned_value(require(doc, "seed", "scenario"), "seed");

    if (doc.contains("trickle")) {
        const json& t = require_object(doc, "trickle", "scenario");
        reject_unknown_keys(t, "trickle", {"imin_ms", "doublings", "k"});
        s.trickle.imin_ms = static_cast<std::int64_t>(unsigned_or(t, "imin_ms", s.trickle.imin_ms, "trickle"));
        s.trickle.doublings = static_cast<unsigned>(unsigned_or(t, "doublings", s.trickle.doublings, "trickle"));
        s.trickle.k = static_cast<unsigned>(unsigned_or(t, "k", s.trickle.k, "trickle"));
    }
    if (doc.contains("energy")) {
        const json& e = require_object(doc, "energy", "scenario");
        reject_unknown_keys(e, "energy", {"off_mA", "idle_listen_mA", "rx_mA", "tx_mA"});
        s.energy.off_mA = number_or(e, "off_mA", s.energy.off_mA, "energy");
        s.energy.idle_listen_mA = number_or(e, "idle_listen_mA", s.energy.idle_listen_mA, "energy");
        s.energy.rx_mA = number_or(e, "rx_mA", s.energy.rx_mA, "energy");
        s.energy.tx_mA = number_or(e, "tx_mA", s.energy.tx_mA, "energy");
    }
    if (doc.contains("objective")) {
        const json& o = require_object(doc, "objective", "scenario");
        reject_unknown_keys(o, "objective", {"type", "prefer_mains"});
        const std::string type = string_value(require(o, "type", "objective"), "objective.type");
        if (type == "etx") {
            s.objective = rpl::EtxOf{};
        } else if (type == "energy") {
            rpl::EnergyOf of;
            if (o.contains("prefer_mains")) {
                if (!o["prefer_mains"].is_boolean()) fail("objective.prefer_mains", "expected a boolean");
                of.prefer_mains = o["prefer_mains"].get<bool>();
            }
            s.objective = of;
        } else {
            fail("objective.type", fmt::format("unknown objective '{}' (expected etx or energy)", type));
        }
    }
    if (doc.contains("mac")) {
        const json& m = require_object(doc, "mac", "scenario");
        reject_unknown_keys(m, "mac", {"data_rate_bps", "max_retries", "turnaround_us", "queue_capacity"});
        s.mac.data_rate_bps = static_cast<std::int64_t>(unsigned_or(m, "data_rate_bps", s.mac.data_rate_bps, "mac"));
        s.mac.max_retries = static_cast<unsigned>(unsigned_or(m, "max_retries", s.mac.max_retries, "mac"));
        s.mac.turnaround_us = static_cast<SimTime>(unsigned_or(m, "turnaround_us", s.mac.turnaround_us, "mac"));
        s.mac.queue_capacity = unsigned_or(m, "queue_capacity", s.mac.queue_capacity, "mac");
    }
    if (doc.contains("script")) {
        const json& script = doc["script"];
        if (!script.is_array()) fail("script", "expected an array");
        for (std::size_t i = 0; i < script.size(); ++i) {
            const std::string w = fmt::format("script[{}]", i);
            if (!script[i].is_object()) fail(w, "expected an object");
            const double t = number(require(script[i], "t_s", w), w + ".t_s");
            if (t < 0) fail(w + ".t_s", "must be non-negative");
            s.script.push_back({from_seconds(t), parse_command(script[i], w)});
        }
    }

    validate(s);
    return s;
}

Scenario load_scenario_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ScenarioError(fmt::format("cannot read scenario '{}'", path.string()));
    std::stringstream ss;
    ss << in.rdbuf();
    Scenario s = load_scenario(ss.str(), path.parent_path());
    s.source = path;
    return s;
}

void validate(const Scenario& s) {
    std::vector<MoteId> roots;
    std::set<MoteId> ids;
    for (const auto& m : s.motes) {
        const std::string w = fmt::format("mote {}", m.id);
        if (m.id == 0) fail(w, "mote id must be positive");
        if (!ids.insert(m.id).second) fail(w, "duplicate mote id");
        if (!std::isfinite(m.position.x) || !std::isfinite(m.position.y)) fail(w, "position must be finite");
        if (m.role == rpl::Role::root) roots.push_back(m.id);
        if (m.power_source == PowerSource::battery && !(m.battery_capacity_mC > 0)) {
            fail(w, "battery motes need battery_capacity_mC > 0");
        }
        if (m.node_status.cpu_load < 0 || m.node_status.cpu_load > 1) fail(w, "cpu_load must be in [0, 1]");
    }
    if (roots.empty()) throw ScenarioError("no root mote");
    if (roots.size() > 1) {
        throw ScenarioError(fmt::format("more than one root mote (ids {})", fmt::join(roots, ", ")));
    }

    try {
        radio::validate(s.radio);
    } catch (const std::invalid_argument& e) {
        fail("radio", e.what());
    }
    if (const auto* dgrm = std::get_if<radio::Dgrm>(&s.radio)) {
        for (const auto& e : dgrm->edges()) {
            if (!ids.contains(e.src) || !ids.contains(e.dst)) {
                fail("radio", fmt::format("edge {} -> {} references an unknown mote", e.src, e.dst));
            }
        }
    }

    if (!(s.traffic.interval_s > 0)) fail("traffic.interval_s", "must be positive");
    if (s.traffic.payload_bytes > kMaxPayloadBytes) {
        fail("traffic.payload_bytes", fmt::format("must be at most {} (single frame, no fragmentation)", kMaxPayloadBytes));
    }
    if (s.duration_s < 0) fail("duration_s", "must be non-negative");
    if (s.trickle.imin_ms <= 0) fail("trickle.imin_ms", "must be positive");
    if (s.trickle.doublings > 24) fail("trickle.doublings", "must be at most 24");
    if (s.trickle.k == 0) fail("trickle.k", "must be at least 1");
    for (double mA : {s.energy.off_mA, s.energy.idle_listen_mA, s.energy.rx_mA, s.energy.tx_mA}) {
        if (mA < 0) fail("energy", "currents must be non-negative");
    }
    if (s.mac.data_rate_bps <= 0) fail("mac.data_rate_bps", "must be positive");
    if (s.mac.queue_capacity == 0) fail("mac.queue_capacity", "must be positive");

    for (std::size_t i = 0; i < s.script.size(); ++i) {
        const std::string w = fmt::format("script[{}]", i);
        if (const auto* mv = std::get_if<MoveMote>(&s.script[i].command)) {
            if (!ids.contains(mv->id)) fail(w, fmt::format("unknown mote id {}", mv->id));
        } else if (const auto* f = std::get_if<InjectFailure>(&s.script[i].command)) {
            if (!ids.contains(f->a)) fail(w, fmt::format("unknown mote id {}", f->a));
            if (f->b && !ids.contains(*f->b)) fail(w, fmt::format("unknown mote id {}", *f->b));
            if (f->b && *f->b == f->a) fail(w, "a link needs two distinct motes");
        }
    }
}

}  // namespace llnsim::sim
