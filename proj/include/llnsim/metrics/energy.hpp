#pragma once

#include <array>
#include <optional>

#include "llnsim/common/types.hpp"

namespace llnsim::metrics {

enum class RadioState { off = 0, idle_listen = 1, rx = 2, tx = 3 };

const char* to_string(RadioState s);

/// Current draw per radio state, in milliamperes.
struct CurrentTable {
    double off_mA = 0.0;
    double idle_listen_mA = 20.0;
    double rx_mA = 20.0;
    double tx_mA = 17.7;

    double of(RadioState s) const;
};

/// Per-mote radio-state time and charge bookkeeping. Charge is in
/// millicoulombs (mA x s). Battery motes deplete; mains motes never do.
class EnergyAccount {
public:
    EnergyAccount(PowerSource source, double capacity_mC, CurrentTable currents, SimTime boot = 0);

    /// Closes the open interval at `t` and enters `next`. Throws
    /// std::invalid_argument if `t` precedes the last transition. A
    /// depleted account only accepts `off`.
    void transition(RadioState next, SimTime t);

    /// Closes the open interval at `t` without changing state.
    void advance(SimTime t) { transition(state_, t); }

    /// Forces depletion at `t`: charges up to `t`, then power_now = 0 and state off.
    void deplete(SimTime t);

    RadioState state() const { return state_; }
    SimTime last_transition() const { return since_; }
    SimTime time_in(RadioState s) const { return times_[static_cast<std::size_t>(s)]; }
    SimTime elapsed() const;

    double charge_mC() const { return charge_mC_; }
    double power_now() const;
    double power_max() const { return capacity_mC_; }
    PowerSource power_source() const { return source_; }
    bool depleted() const { return depleted_; }

    /// Time at which the battery runs out if the current state persists.
    std::optional<SimTime> predicted_depletion() const;

private:
    PowerSource source_;
    double capacity_mC_;
    CurrentTable currents_;
    RadioState state_ = RadioState::off;
    SimTime since_;
    std::array<SimTime, 4> times_{};
    double charge_mC_ = 0.0;
    bool depleted_ = false;
};

/// EE = power_now / power_max for battery motes; mains motes report 1.
double energy_estimate(const EnergyAccount& account);

/// Fraction of elapsed time with the radio on; 0 when nothing has elapsed.
double duty_cycle(const EnergyAccount& account);

}  // namespace llnsim::metrics
