#pragma once

#include <functional>
#include <ostream>
#include <vector>

#include "llnsim/common/types.hpp"
#include "llnsim/metrics/energy.hpp"

namespace llnsim::metrics {

enum class TimelineKind { radio_on, radio_off, tx_start, tx_end, rx_start, rx_end, interference };

/// Console colour of a timeline event.
enum class DisplayClass { gray, white, blue, green, red };

const char* to_string(TimelineKind k);
const char* to_string(DisplayClass c);

DisplayClass display_class(TimelineKind k);

struct TimelineEvent {
    SimTime t_us = 0;
    MoteId mote = 0;
    TimelineKind kind = TimelineKind::radio_on;
    DisplayClass display = DisplayClass::gray;

    friend bool operator==(const TimelineEvent&, const TimelineEvent&) = default;
};

class Timeline {
public:
    using Observer = std::function<void(const TimelineEvent&)>;

    void push(SimTime t, MoteId mote, TimelineKind kind);
    void set_observer(Observer obs) { observer_ = std::move(obs); }
    void clear() { events_.clear(); }

    const std::vector<TimelineEvent>& events() const { return events_; }

private:
    std::vector<TimelineEvent> events_;
    Observer observer_;
};

/// Moves `account` to `next` at `t` and appends the matching timeline
/// events: radio_on/off at the off boundary, tx/rx start and end around
/// their segments. idle_listen has no segment of its own (radio on, gray).
void record_radio_transition(EnergyAccount& account, Timeline& timeline, MoteId mote, RadioState next, SimTime t);

/// One JSON object per line: {"t_us":..,"mote":..,"kind":"..","class":".."}.
void write_timeline_ndjson(std::ostream& out, const std::vector<TimelineEvent>& events);

}  // namespace llnsim::metrics
