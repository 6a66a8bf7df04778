#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "llnsim/common/types.hpp"
#include "llnsim/metrics/energy.hpp"
#include "llnsim/radio/models.hpp"
#include "llnsim/rpl/node.hpp"
#include "llnsim/rpl/objective.hpp"
#include "llnsim/rpl/trickle.hpp"

namespace llnsim::sim {

struct NodeResources {
    std::uint64_t available_memory = 0;  // bytes, static configuration
    double cpu_load = 0.0;               // 0..1
};

struct MoteSpec {
    MoteId id = 0;
    Vec2 position;
    rpl::Role role = rpl::Role::router;
    PowerSource power_source = PowerSource::mains;
    double battery_capacity_mC = 0.0;
    NodeResources node_status;
};

struct TrafficSpec {
    double interval_s = 60.0;
    std::size_t payload_bytes = 16;
};

/// Largest application payload that fits one 127-octet frame without
/// fragmentation: 127 - 23 (MAC) - 39 (worst-case IPv6 header) - 8 (UDP).
inline constexpr std::size_t kMaxPayloadBytes = 57;

struct MacParams {
    std::int64_t data_rate_bps = 250'000;
    unsigned max_retries = 3;
    SimTime turnaround_us = 192;
    SimTime backoff_min_us = 1'000;
    SimTime backoff_max_us = 32'000;
    std::size_t queue_capacity = 128;
};

/// Operator commands that change virtual-time behaviour. Pacing commands
/// (start, pause, set_speed) never reach the engine.
struct MoveMote {
    MoteId id = 0;
    Vec2 position;
};

/// Cuts the link a<->b in both directions, or kills mote `a` when `b` is empty.
struct InjectFailure {
    MoteId a = 0;
    std::optional<MoteId> b;
};

struct GlobalRepair {};

using Command = std::variant<MoveMote, InjectFailure, GlobalRepair>;

const char* command_name(const Command& c);

struct ScriptEntry {
    SimTime at = 0;
    Command command;
};

struct Scenario {
    std::vector<MoteSpec> motes;
    radio::RadioModel radio;
    TrafficSpec traffic;
    double duration_s = 0.0;
    std::uint64_t seed = 0;
    rpl::TrickleParams trickle;
    metrics::CurrentTable energy;
    rpl::ObjectiveFunction objective = rpl::EtxOf{};
    MacParams mac;
    std::vector<ScriptEntry> script;
    /// File the scenario came from, if any.
    std::filesystem::path source;

    const MoteSpec* find(MoteId id) const;
    MoteId root_id() const;
    SimTime duration() const { return from_seconds(duration_s); }
};

class ScenarioError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Parses and validates a scenario document. Relative edges_file paths are
/// resolved against `base_dir`. Throws ScenarioError: parse errors carry
/// the line and column, validation errors name the field or invariant.
Scenario load_scenario(const std::string& text, const std::filesystem::path& base_dir = {});

Scenario load_scenario_file(const std::filesystem::path& path);

/// Checks every invariant; throws ScenarioError.
void validate(const Scenario& scenario);

}  // namespace llnsim::sim
