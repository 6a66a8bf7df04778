#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <stdexcept>

#include "llnsim/common/types.hpp"

namespace llnsim::metrics {

/// Terminal state of an application datagram.
enum class Fate { delivered, dropped_no_route, dropped_collision, dropped_loss, in_flight };

inline constexpr std::array<Fate, 5> kAllFates{Fate::delivered, Fate::dropped_no_route, Fate::dropped_collision,
                                              Fate::dropped_loss, Fate::in_flight};

const char* to_string(Fate f);

using DatagramId = std::uint64_t;

/// Tracks every application datagram from send to its single terminal state.
class DeliveryLedger {
public:
    DatagramId open(MoteId origin, SimTime t);

    /// Settles an in-flight datagram. Throws std::logic_error if already settled.
    void settle(DatagramId id, Fate fate, SimTime t);

    std::uint64_t total() const { return records_.size(); }
    std::uint64_t count(Fate f) const;
    Fate fate(DatagramId id) const { return records_.at(id).fate; }
    /// Sums latency (send to delivery) over delivered datagrams.
    SimTime total_latency() const { return latency_sum_; }

    void clear();

private:
    struct Record {
        MoteId origin;
        SimTime sent;
        Fate fate = Fate::in_flight;
    };
    std::map<DatagramId, Record> records_;
    std::array<std::uint64_t, 5> counts_{};
    DatagramId next_ = 1;
    SimTime latency_sum_ = 0;
};

}  // namespace llnsim::metrics
