#pragma once

#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "llnsim/metrics/delivery.hpp"
#include "llnsim/metrics/energy.hpp"
#include "llnsim/metrics/link_stats.hpp"

namespace llnsim::metrics {

struct MoteRow {
    MoteId id = 0;
    std::string role;
    PowerSource power_source = PowerSource::mains;
    SimTime off_us = 0;
    SimTime idle_listen_us = 0;
    SimTime rx_us = 0;
    SimTime tx_us = 0;
    double charge_mC = 0.0;
    double power_now_mC = 0.0;
    double power_max_mC = 0.0;
    double ee = 1.0;
    double duty_cycle = 0.0;
    bool alive = true;
    bool joined = false;
    std::optional<unsigned> rank;
    std::optional<MoteId> parent;
};

struct LinkRow {
    MoteId src = 0;
    MoteId dst = 0;
    LinkStats stats;
};

/// Column names, stable across versions. Times in microseconds, charge in
/// millicoulombs, fractions in [0, 1].
inline constexpr const char* kMoteCsvHeader =
    "mote,role,power_source,off_us,idle_listen_us,rx_us,tx_us,charge_mC,power_now_mC,power_max_mC,ee,duty_cycle,"
    "alive,joined,rank,parent";
inline constexpr const char* kLinkCsvHeader = "src,dst,sent,received,prr,etx";
inline constexpr const char* kDeliveryCsvHeader = "state,count";

void write_mote_csv(std::ostream& out, const std::vector<MoteRow>& rows);
void write_link_csv(std::ostream& out, const std::vector<LinkRow>& rows);
void write_delivery_csv(std::ostream& out, const DeliveryLedger& ledger);

}  // namespace llnsim::metrics
