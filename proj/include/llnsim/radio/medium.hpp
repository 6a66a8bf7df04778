#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "llnsim/common/rng.hpp"
#include "llnsim/radio/models.hpp"

namespace llnsim::radio {

struct Station {
    MoteId id = 0;
    Vec2 position;
};

struct ReceiverOutcome {
    MoteId id = 0;
    Reception state = Reception::silent;
    SimTime delay_us = 0;
};

struct DeliveryOutcome {
    bool tx_gate_passed = true;
    /// One entry per candidate, in candidate order.
    std::vector<ReceiverOutcome> receivers;
};

/// Decides the footprint of one transmission. Randomness is drawn from `rng`
/// in a fixed order: the sender-side gate first (distance-loss UDGM only),
/// then one draw per stochastic candidate in candidate order.
DeliveryOutcome propagate(const RadioModel& model, const Station& sender, std::span<const Station> candidates, Rng& rng);

/// A frame's occupancy of the channel as seen by one receiver.
struct Arrival {
    std::uint64_t frame = 0;
    SimTime start = 0;  // inclusive
    SimTime end = 0;    // exclusive
    Reception state = Reception::received;
};

struct FrameVerdict {
    std::uint64_t frame = 0;
    bool delivered = false;
    bool collided = false;
};

/// Offline rule: a received frame is delivered iff no other arrival at the
/// same receiver overlaps it in time. Interfered arrivals never deliver but
/// still destroy what they overlap.
std::vector<FrameVerdict> arbitrate_collisions(std::span<const Arrival> arrivals);

/// Incremental form of arbitrate_collisions, fed in arrival-time order.
class ReceiverChannel {
public:
    /// Returns true if the new arrival overlaps one in progress; both are marked destroyed.
    bool begin(const Arrival& arrival);

    /// Marks every arrival still on the air at `now` destroyed (receiver turned to transmit).
    /// Returns how many were affected.
    std::size_t destroy_in_progress(SimTime now);

    /// Removes the arrival; returns its verdict, or nullopt for an unknown frame.
    std::optional<FrameVerdict> finish(std::uint64_t frame);

    bool empty() const { return active_.empty(); }
    void clear() { active_.clear(); }

private:
    struct Entry {
        Arrival arrival;
        bool destroyed = false;
    };
    std::map<std::uint64_t, Entry> active_;
};

}  // namespace llnsim::radio
