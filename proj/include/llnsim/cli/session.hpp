#pragma once

#include <chrono>
#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "llnsim/sim/engine.hpp"

namespace llnsim::cli {

/*
 * Live control protocol, one JSON object per line in each direction.
 *
 * client -> server   {"cmd": "start" | "pause" | "reload" | "set_speed" | "move_mote" | "get_state" |
 *                     "save_note" | "inject_failure" | "global_repair", ...args, "request_id": optional}
 *     set_speed        {"factor": 2.0}           virtual seconds per wall second, > 0
 *     move_mote        {"id": 2, "position": [50, 0]}
 *     save_note        {"text": "..."}
 *     inject_failure   {"link": [1, 2]} or {"mote": 5}
 *
 * server -> client   {"event": "clock" | "mote_state" | "radio_event" | "metric_update" | "dodag_update" |
 *                     "error" | "ack", "t_us": <virtual time>, "payload": {...}}
 */
class Session {
public:
    using Frames = std::vector<std::string>;

    /// Starts paused at virtual time 0.
    Session(sim::Scenario scenario, std::filesystem::path notes_path);

    /// Frames describing the whole current state (sent to a new client).
    Frames greeting();

    /// Handles one client line. Protocol errors yield an error frame; the
    /// session itself is never invalidated.
    Frames handle_line(const std::string& line);

    /// Lets `wall` elapse: when running, virtual time advances by wall x speed.
    Frames advance(std::chrono::microseconds wall);

    bool running() const { return running_; }
    double speed() const { return speed_; }
    sim::Engine& engine() { return *engine_; }
    const std::filesystem::path& notes_path() const { return notes_path_; }

private:
    nlohmann::json frame(const char* event, nlohmann::json payload) const;
    Frames flush();
    void emit(const char* event, nlohmann::json payload);
    nlohmann::json mote_state(const sim::MoteSnapshot& m) const;
    nlohmann::json dodag_payload() const;
    nlohmann::json metrics_payload() const;
    nlohmann::json state_payload() const;
    void emit_changed_motes();
    void emit_full_state();
    void install_observers();

    std::unique_ptr<sim::Engine> engine_;
    std::filesystem::path notes_path_;
    bool running_ = false;
    double speed_ = 1.0;
    double carry_us_ = 0.0;
    std::chrono::microseconds since_metrics_{0};
    std::vector<std::string> outbox_;
    std::map<MoteId, nlohmann::json> last_state_;
};

/// <scenario dir>/<scenario stem>.notes.txt
std::filesystem::path notes_path_for(const std::filesystem::path& scenario);

}  // namespace llnsim::cli
