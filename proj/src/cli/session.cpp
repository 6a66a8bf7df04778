#include "llnsim/cli/session.hpp"

#include <cmath>
#include <fstream>

#include <fmt/format.h>

#include "llnsim/sim/command_json.hpp"

namespace llnsim::cli {

using nlohmann::json;

namespace {

constexpr std::chrono::microseconds kMetricsPeriod{500'000};

json opt_id(std::optional<MoteId> id) { return id ? json(*id) : json(nullptr); }

}  // namespace

std::filesystem::path notes_path_for(const std::filesystem::path& scenario) {
    return scenario.parent_path() / (scenario.stem().string() + ".notes.txt");
}

Session::Session(sim::Scenario scenario, std::filesystem::path notes_path)
    : engine_(std::make_unique<sim::Engine>(std::move(scenario))), notes_path_(std::move(notes_path)) {
    install_observers();
    // Baseline for change detection; clients get the full state via greeting().
    emit_changed_motes();
    outbox_.clear();
}

void Session::install_observers() {
    engine_->set_timeline_observer([this](const metrics::TimelineEvent& e) {
        emit("radio_event", {{"mote", e.mote}, {"kind", metrics::to_string(e.kind)}, {"class", metrics::to_string(e.display)}});
    });
    engine_->set_dodag_observer([this] {
        emit_changed_motes();
        emit("dodag_update", dodag_payload());
    });
}

json Session::frame(const char* event, json payload) const {
    return {{"event", event}, {"t_us", engine_->now()}, {"payload", std::move(payload)}};
}

void Session::emit(const char* event, json payload) { outbox_.push_back(frame(event, std::move(payload)).dump()); }

Session::Frames Session::flush() {
    Frames out;
    out.swap(outbox_);
    return out;
}

json Session::mote_state(const sim::MoteSnapshot& m) const {
    return {{"id", m.id},
            {"position", {m.position.x, m.position.y}},
            {"role", rpl::to_string(m.role)},
            {"power_source", to_string(m.power_source)},
            {"alive", m.alive},
            {"joined", m.joined},
            {"rank", m.joined ? json(m.rank) : json(nullptr)},
            {"parent", opt_id(m.parent)},
            {"radio", metrics::to_string(m.radio)},
            {"ee", m.ee}};
}

void Session::emit_changed_motes() {
    for (const auto& m : engine_->snapshot().motes) {
        json state = mote_state(m);
        // Radio state and EE change constantly and travel in radio_event / metric_update.
        json key = state;
        key.erase("radio");
        key.erase("ee");
        auto it = last_state_.find(m.id);
        if (it != last_state_.end() && it->second == key) continue;
        last_state_[m.id] = key;
        emit("mote_state", std::move(state));
    }
}

json Session::dodag_payload() const {
    json edges = json::array();
    json vertices = json::array();
    for (const auto& v : engine_->dodag()) {
        vertices.push_back({{"id", v.id}, {"joined", v.joined}, {"rank", v.joined ? json(v.rank) : json(nullptr)}});
        if (v.parent) edges.push_back({{"child", v.id}, {"parent", *v.parent}});
    }
    return {{"version", engine_->dodag_version()}, {"vertices", vertices}, {"edges", edges}};
}

json Session::metrics_payload() const {
    const auto snap = engine_->snapshot();
    json deliveries = json::object();
    for (std::size_t i = 0; i < metrics::kAllFates.size(); ++i) {
        deliveries[metrics::to_string(metrics::kAllFates[i])] = snap.deliveries[i];
    }
    json motes = json::array();
    for (const auto& m : snap.motes) {
        motes.push_back({{"id", m.id}, {"ee", m.ee}, {"duty_cycle", m.duty_cycle}, {"charge_mC", m.charge_mC}});
    }
    const auto delivered = snap.deliveries[0];
    return {{"datagrams", snap.datagrams},
            {"deliveries", deliveries},
            {"delivery_ratio", snap.datagrams ? json(static_cast<double>(delivered) / snap.datagrams) : json(nullptr)},
            {"motes", motes}};
}

json Session::state_payload() const {
    json motes = json::array();
    for (const auto& m : engine_->snapshot().motes) motes.push_back(mote_state(m));
    return {{"running", running_},
            {"speed", speed_},
            {"duration_us", engine_->duration()},
            {"finished", engine_->finished()},
            {"motes", motes},
            {"dodag", dodag_payload()},
            {"metrics", metrics_payload()}};
}

void Session::emit_full_state() {
    emit("clock", {{"running", running_}, {"speed", speed_}, {"duration_us", engine_->duration()}});
    last_state_.clear();
    emit_changed_motes();
    emit("dodag_update", dodag_payload());
    emit("metric_update", metrics_payload());
}

Session::Frames Session::greeting() {
    emit_full_state();
    return flush();
}

Session::Frames Session::handle_line(const std::string& line) {
    json req;
    try {
        req = json::parse(line);
    } catch (const json::parse_error& e) {
        emit("error", {{"message", fmt::format("malformed frame: {}", e.what())}});
        return flush();
    }
    if (!req.is_object() || !req.contains("cmd") || !req["cmd"].is_string()) {
        emit("error", {{"message", "frame must be an object with a string 'cmd'"}});
        return flush();
    }
    const std::string cmd = req["cmd"].get<std::string>();
    const json request_id = req.contains("request_id") ? req["request_id"] : json(nullptr);
    auto ack = [&](json extra = json::object()) {
        extra["cmd"] = cmd;
        extra["request_id"] = request_id;
        emit("ack", std::move(extra));
    };
    auto error = [&](const std::string& message) {
        emit("error", {{"cmd", cmd}, {"request_id", request_id}, {"message", message}});
    };

    if (cmd == "start") {
        running_ = true;
        ack({{"running", true}});
    } else if (cmd == "pause") {
        running_ = false;
        ack({{"running", false}});
    } else if (cmd == "reload") {
        engine_->reload();
        running_ = false;
        carry_us_ = 0.0;
        ack({{"running", false}});
        emit_full_state();
    } else if (cmd == "set_speed") {
        if (!req.contains("factor") || !req["factor"].is_number() || !std::isfinite(req["factor"].get<double>()) ||
            req["factor"].get<double>() <= 0.0) {
            error("set_speed needs a positive finite 'factor'");
        } else {
            speed_ = req["factor"].get<double>();
            ack({{"speed", speed_}});
        }
    } else if (cmd == "move_mote" || cmd == "inject_failure" || cmd == "global_repair") {
        try {
            engine_->submit(sim::command_from_json(req, "frame"));
        } catch (const std::exception& e) {
            error(e.what());
            return flush();
        }
        // Takes effect at the current event boundary, even while paused.
        engine_->run_until(engine_->now());
        ack();
        emit_changed_motes();
    } else if (cmd == "get_state") {
        ack({{"state", state_payload()}});
    } else if (cmd == "save_note") {
        if (!req.contains("text") || !req["text"].is_string()) {
            error("save_note needs a string 'text'");
        } else {
            std::ofstream out(notes_path_, std::ios::binary | std::ios::trunc);
            out << req["text"].get<std::string>();
            out.close();
            if (!out) {
                error(fmt::format("cannot write '{}'", notes_path_.string()));
            } else {
                ack({{"path", notes_path_.string()}});
            }
        }
    } else {
        error(fmt::format("unknown command '{}'", cmd));
    }
    return flush();
}

Session::Frames Session::advance(std::chrono::microseconds wall) {
    if (!running_) return flush();
    carry_us_ += static_cast<double>(wall.count()) * speed_;
    // The epsilon keeps sums like 10 x 0.3 from flooring to 2.
    const auto step = static_cast<SimTime>(std::floor(carry_us_ + 1e-9));
    carry_us_ -= static_cast<double>(step);
    engine_->run_until(engine_->now() + step);

    const bool done = engine_->now() >= engine_->duration() && engine_->finished();
    if (done) running_ = false;
    emit("clock", {{"running", running_}, {"speed", speed_}, {"finished", done}});
    since_metrics_ += wall;
    if (since_metrics_ >= kMetricsPeriod || done) {
        since_metrics_ = std::chrono::microseconds{0};
        emit("metric_update", metrics_payload());
    }
    return flush();
}

}  // namespace llnsim::cli
