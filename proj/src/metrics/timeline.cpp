#include "llnsim/metrics/timeline.hpp"

#include <fmt/format.h>

namespace llnsim::metrics {

const char* to_string(TimelineKind k) {
    switch (k) {
        case TimelineKind::radio_on: return "radio_on";
        case TimelineKind::radio_off: return "radio_off";
        case TimelineKind::tx_start: return "tx_start";
        case TimelineKind::tx_end: return "tx_end";
        case TimelineKind::rx_start: return "rx_start";
        case TimelineKind::rx_end: return "rx_end";
        case TimelineKind::interference: return "interference";
    }
    return "?";
}

const char* to_string(DisplayClass c) {
    switch (c) {
        case DisplayClass::gray: return "gray";
        case DisplayClass::white: return "white";
        case DisplayClass::blue: return "blue";
        case DisplayClass::green: return "green";
        case DisplayClass::red: return "red";
    }
    return "?";
}

DisplayClass display_class(TimelineKind k) {
    switch (k) {
        case TimelineKind::radio_on: return DisplayClass::gray;
        case TimelineKind::radio_off: return DisplayClass::white;
        case TimelineKind::tx_start:
        case TimelineKind::tx_end: return DisplayClass::blue;
        case TimelineKind::rx_start:
        case TimelineKind::rx_end: return DisplayClass::green;
        case TimelineKind::interference: return DisplayClass::red;
    }
    return DisplayClass::gray;
}

void Timeline::push(SimTime t, MoteId mote, TimelineKind kind) {
    events_.push_back({t, mote, kind, display_class(kind)});
    if (observer_) observer_(events_.back());
}

void record_radio_transition(EnergyAccount& account, Timeline& timeline, MoteId mote, RadioState next, SimTime t) {
    const RadioState prev = account.state();
    account.transition(next, t);
    // The account may have depleted and forced itself off.
    next = account.state();
    if (prev == next) return;

    if (prev == RadioState::tx) timeline.push(t, mote, TimelineKind::tx_end);
    if (prev == RadioState::rx) timeline.push(t, mote, TimelineKind::rx_end);
    if (prev == RadioState::off) timeline.push(t, mote, TimelineKind::radio_on);
    if (next == RadioState::off) timeline.push(t, mote, TimelineKind::radio_off);
    if (next == RadioState::tx) timeline.push(t, mote, TimelineKind::tx_start);
    if (next == RadioState::rx) timeline.push(t, mote, TimelineKind::rx_start);
}

void write_timeline_ndjson(std::ostream& out, const std::vector<TimelineEvent>& events) {
    for (const auto& e : events) {
        out << fmt::format(R"({{"t_us":{},"mote":{},"kind":"{}","class":"{}"}})", e.t_us, e.mote, to_string(e.kind),
                           to_string(e.display))
            << '\n';
    }
}

}  // namespace llnsim::metrics
