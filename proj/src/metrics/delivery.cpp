#include "llnsim/metrics/delivery.hpp"

namespace llnsim::metrics {

const char* to_string(Fate f) {
    switch (f) {
        case Fate::delivered: return "delivered";
        case Fate::dropped_no_route: return "dropped_no_route";
        case Fate::dropped_collision: return "dropped_collision";
        case Fate::dropped_loss: return "dropped_loss";
        case Fate::in_flight: return "in_flight";
    }
    return "?";
}

DatagramId DeliveryLedger::open(MoteId origin, SimTime t) {
    const DatagramId id = next_++;
    records_.emplace(id, Record{origin, t});
    ++counts_[static_cast<std::size_t>(Fate::in_flight)];
    return id;
}

void DeliveryLedger::settle(DatagramId id, Fate fate, SimTime t) {
    auto& r = records_.at(id);
    if (r.fate != Fate::in_flight) throw std::logic_error("datagram settled twice");
    if (fate == Fate::in_flight) return;
    r.fate = fate;
    --counts_[static_cast<std::size_t>(Fate::in_flight)];
    ++counts_[static_cast<std::size_t>(fate)];
    if (fate == Fate::delivered) latency_sum_ += t - r.sent;
}

std::uint64_t DeliveryLedger::count(Fate f) const { return counts_[static_cast<std::size_t>(f)]; }

void DeliveryLedger::clear() {
    records_.clear();
    counts_ = {};
    next_ = 1;
    latency_sum_ = 0;
}

}  // namespace llnsim::metrics
