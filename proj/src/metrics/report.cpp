#include "llnsim/metrics/report.hpp"

#include <fmt/format.h>

namespace llnsim::metrics {

namespace {

std::string opt_fixed(const std::optional<double>& v) { return v ? fmt::format("{:.6f}", *v) : std::string{}; }

}  // namespace

void write_mote_csv(std::ostream& out, const std::vector<MoteRow>& rows) {
    out << kMoteCsvHeader << '\n';
    for (const auto& r : rows) {
        out << fmt::format("{},{},{},{},{},{},{},{:.6f},{:.6f},{:.6f},{:.6f},{:.6f},{},{},{},{}\n", r.id, r.role,
                           to_string(r.power_source), r.off_us, r.idle_listen_us, r.rx_us, r.tx_us, r.charge_mC,
                           r.power_now_mC, r.power_max_mC, r.ee, r.duty_cycle, r.alive ? 1 : 0, r.joined ? 1 : 0,
                           r.rank ? std::to_string(*r.rank) : "", r.parent ? std::to_string(*r.parent) : "");
    }
}

void write_link_csv(std::ostream& out, const std::vector<LinkRow>& rows) {
    out << kLinkCsvHeader << '\n';
    for (const auto& r : rows) {
        out << fmt::format("{},{},{},{},{},{}\n", r.src, r.dst, r.stats.sent, r.stats.received, opt_fixed(prr(r.stats)),
                           opt_fixed(etx(r.stats)));
    }
}

void write_delivery_csv(std::ostream& out, const DeliveryLedger& ledger) {
    out << kDeliveryCsvHeader << '\n';
    for (auto f : kAllFates) out << to_string(f) << ',' << ledger.count(f) << '\n';
    out << "total," << ledger.total() << '\n';
}

}  // namespace llnsim::metrics
