#include "llnsim/metrics/energy.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <fmt/format.h>

namespace llnsim::metrics {

const char* to_string(RadioState s) {
    switch (s) {
        case RadioState::off: return "off";
        case RadioState::idle_listen: return "idle_listen";
        case RadioState::rx: return "rx";
        case RadioState::tx: return "tx";
    }
    return "?";
}

double CurrentTable::of(RadioState s) const {
    switch (s) {
        case RadioState::off: return off_mA;
        case RadioState::idle_listen: return idle_listen_mA;
        case RadioState::rx: return rx_mA;
        case RadioState::tx: return tx_mA;
    }
    return 0.0;
}

EnergyAccount::EnergyAccount(PowerSource source, double capacity_mC, CurrentTable currents, SimTime boot)
    : source_(source), capacity_mC_(source == PowerSource::battery ? capacity_mC : 0.0), currents_(currents), since_(boot) {
    if (source == PowerSource::battery && !(capacity_mC > 0.0)) {
        throw std::invalid_argument("battery capacity must be > 0");
    }
}

void EnergyAccount::transition(RadioState next, SimTime t) {
    if (t < since_) {
        throw std::invalid_argument(fmt::format("radio transition at {} us precedes last transition at {} us", t, since_));
    }
    if (depleted_ && next != RadioState::off) {
        throw std::logic_error("depleted mote cannot leave the off state");
    }
    const SimTime dur = t - since_;
    times_[static_cast<std::size_t>(state_)] += dur;
    if (!depleted_) {
        charge_mC_ += static_cast<double>(dur) * 1e-6 * currents_.of(state_);
        if (source_ == PowerSource::battery && charge_mC_ >= capacity_mC_) {
            charge_mC_ = capacity_mC_;
            depleted_ = true;
            next = RadioState::off;
        }
    }
    state_ = next;
    since_ = t;
}

void EnergyAccount::deplete(SimTime t) {
    transition(RadioState::off, t);
    if (source_ == PowerSource::battery) {
        charge_mC_ = capacity_mC_;
        depleted_ = true;
    }
}

SimTime EnergyAccount::elapsed() const {
    SimTime sum = 0;
    for (auto v : times_) sum += v;
    return sum;
}

double EnergyAccount::power_now() const {
    if (source_ == PowerSource::mains) return 0.0;
    return std::max(0.0, capacity_mC_ - charge_mC_);
}

std::optional<SimTime> EnergyAccount::predicted_depletion() const {
    if (source_ != PowerSource::battery || depleted_) return std::nullopt;
    const double current = currents_.of(state_);
    if (!(current > 0.0)) return std::nullopt;
    const double seconds = power_now() / current;
    return since_ + static_cast<SimTime>(std::ceil(seconds * 1e6));
}

double energy_estimate(const EnergyAccount& account) {
    if (account.power_source() == PowerSource::mains) return 1.0;
    return account.power_now() / account.power_max();
}

double duty_cycle(const EnergyAccount& account) {
    const SimTime elapsed = account.elapsed();
    if (elapsed <= 0) return 0.0;
    const SimTime on = account.time_in(RadioState::idle_listen) + account.time_in(RadioState::rx) +
                       account.time_in(RadioState::tx);
    return static_cast<double>(on) / static_cast<double>(elapsed);
}

}  // namespace llnsim::metrics
