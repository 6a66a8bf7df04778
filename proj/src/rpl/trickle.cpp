#include "llnsim/rpl/trickle.hpp"

#include <algorithm>

namespace llnsim::rpl {

void TrickleTimer::start(SimTime now, Rng& rng) {
    running_ = true;
    interval_ = params_.imin_us();
    begin_interval(now, rng);
}

void TrickleTimer::stop() {
    running_ = false;
    ++generation_;
}

bool TrickleTimer::fire() { return counter_ < params_.k; }

void TrickleTimer::end_interval(SimTime now, Rng& rng) {
    interval_ = std::min(interval_ * 2, params_.imax_us());
    begin_interval(now, rng);
}

void TrickleTimer::begin_interval(SimTime now, Rng& rng) {
    start_ = now;
    counter_ = 0;
    // t uniform in [I/2, I)
    offset_ = rng.uniform_int(interval_ / 2, interval_ - 1);
    ++generation_;
}

}  // namespace llnsim::rpl
