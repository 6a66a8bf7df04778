#pragma once

#include <cstdint>

#include "llnsim/common/rng.hpp"
#include "llnsim/common/types.hpp"

namespace llnsim::rpl {

struct TrickleParams {
    std::int64_t imin_ms = 4096;
    unsigned doublings = 8;
    unsigned k = 10;

    SimTime imin_us() const { return from_millis(imin_ms); }
    SimTime imax_us() const { return imin_us() << doublings; }
};

/// Trickle timer state machine. The owner schedules the two deadlines
/// (fire_at, interval_end) and calls fire() / end_interval() when they
/// pass; generation() changes whenever previously reported deadlines
/// become stale.
class TrickleTimer {
public:
    explicit TrickleTimer(TrickleParams params = {}) : params_(params) {}

    /// Begins a fresh interval of length imin at `now`.
    void start(SimTime now, Rng& rng);
    void stop();

    void hear_consistent() { ++counter_; }
    /// I <- imin and restart the interval at `now`.
    void hear_inconsistent(SimTime now, Rng& rng) { start(now, rng); }

    /// At the fire point: returns true iff a transmission is due (c < k).
    bool fire();

    /// At interval end: I <- min(2I, imax), c <- 0, new fire point.
    void end_interval(SimTime now, Rng& rng);

    bool running() const { return running_; }
    SimTime interval() const { return interval_; }
    SimTime interval_start() const { return start_; }
    SimTime fire_at() const { return start_ + offset_; }
    SimTime interval_end() const { return start_ + interval_; }
    unsigned counter() const { return counter_; }
    std::uint64_t generation() const { return generation_; }
    const TrickleParams& params() const { return params_; }

private:
    void begin_interval(SimTime now, Rng& rng);

    TrickleParams params_;
    bool running_ = false;
    SimTime interval_ = 0;
    SimTime start_ = 0;
    SimTime offset_ = 0;
    unsigned counter_ = 0;
    std::uint64_t generation_ = 0;
};

}  // namespace llnsim::rpl
