#include "llnsim/radio/models.hpp"

#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include <fmt/format.h>

namespace llnsim::radio {

namespace {

constexpr double kSpeedOfLight = 299'792'458.0;

void check_probability(double p, const char* name) {
    if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument(fmt::format("{} must be in [0, 1], got {}", name, p));
}

void check_ranges(double tx, double interference) {
    if (!(tx > 0.0) || !std::isfinite(tx)) throw std::invalid_argument("tx_range must be > 0");
    if (!(interference >= tx) || !std::isfinite(interference)) {
        throw std::invalid_argument("interference_range must be >= tx_range");
    }
}

}  // namespace

const char* to_string(Reception r) {
    switch (r) {
        case Reception::received: return "received";
        case Reception::interfered: return "interfered";
        case Reception::silent: return "silent";
    }
    return "?";
}

Dgrm::Dgrm(std::vector<DgrmEdge> edges) : edges_(std::move(edges)) {
    for (std::size_t i = 0; i < edges_.size(); ++i) {
        const auto key = std::make_pair(edges_[i].src, edges_[i].dst);
        if (!index_.emplace(key, i).second) {
            throw std::invalid_argument(fmt::format("duplicate DGRM edge {} -> {}", key.first, key.second));
        }
    }
}

const DgrmEdge* Dgrm::find(MoteId src, MoteId dst) const {
    auto it = index_.find({src, dst});
    return it == index_.end() ? nullptr : &edges_[it->second];
}

std::string model_name(const RadioModel& model) {
    struct Namer {
        std::string operator()(const ConstantLossUdgm&) const { return "udgm_constant"; }
        std::string operator()(const DistanceLossUdgm&) const { return "udgm_distance"; }
        std::string operator()(const Dgrm&) const { return "dgrm"; }
        std::string operator()(const FriisMrm&) const { return "friis"; }
    };
    return std::visit(Namer{}, model);
}

void validate(const RadioModel& model) {
    if (auto* m = std::get_if<ConstantLossUdgm>(&model)) {
        check_ranges(m->tx_range, m->interference_range);
    } else if (auto* m = std::get_if<DistanceLossUdgm>(&model)) {
        check_ranges(m->tx_range, m->interference_range);
        check_probability(m->success_ratio_tx, "success_ratio_tx");
        check_probability(m->success_ratio_rx, "success_ratio_rx");
    } else if (auto* m = std::get_if<Dgrm>(&model)) {
        for (const auto& e : m->edges()) {
            check_probability(e.rx_probability, "rx_probability");
            if (e.delay_us < 0) throw std::invalid_argument("delay_us must be >= 0");
            if (e.src == e.dst) throw std::invalid_argument(fmt::format("DGRM self-edge on mote {}", e.src));
        }
    } else if (auto* m = std::get_if<FriisMrm>(&model)) {
        if (!(m->frequency_hz > 0.0)) throw std::invalid_argument("frequency_hz must be > 0");
        if (!std::isfinite(m->tx_power_dbm) || !std::isfinite(m->rx_sensitivity_dbm)) {
            throw std::invalid_argument("tx_power_dbm and rx_sensitivity_dbm must be finite");
        }
    }
}

Reception udgm_constant_outcome(const ConstantLossUdgm& model, double d) {
    if (d <= model.tx_range) return Reception::received;
    if (d <= model.interference_range) return Reception::interfered;
    return Reception::silent;
}

double udgm_distance_rx_probability(const DistanceLossUdgm& model, double d) {
    if (d >= model.tx_range) return 0.0;
    const double ratio = d / model.tx_range;
    return model.success_ratio_rx * std::max(0.0, 1.0 - ratio * ratio);
}

std::optional<DgrmEdge> dgrm_outcome(const Dgrm& model, MoteId src, MoteId dst) {
    if (const auto* e = model.find(src, dst)) return *e;
    return std::nullopt;
}

double friis_rx_power(const FriisMrm& model, double d) {
    if (!(d > 0.0)) throw std::domain_error("Friis free-space loss is undefined at distance 0");
    return model.tx_power_dbm + 20.0 * std::log10(kSpeedOfLight / (4.0 * std::numbers::pi * d * model.frequency_hz));
}

bool friis_received(const FriisMrm& model, double d) { return friis_rx_power(model, d) >= model.rx_sensitivity_dbm; }

std::vector<DgrmEdge> parse_edge_list(const std::string& text) {
    std::vector<DgrmEdge> edges;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        std::istringstream fields(line);
        long src = 0, dst = 0;
        DgrmEdge e;
        if (!(fields >> src >> dst >> e.rx_probability >> e.delay_us >> e.signal_dbm)) {
            throw std::runtime_error(fmt::format("edge list line {}: expected 'src dst prob delay_us signal_dBm'", lineno));
        }
        std::string extra;
        if (fields >> extra) throw std::runtime_error(fmt::format("edge list line {}: trailing field '{}'", lineno, extra));
        if (src < 1 || src > 0xffff || dst < 1 || dst > 0xffff) {
            throw std::runtime_error(fmt::format("edge list line {}: mote id out of range", lineno));
        }
        e.src = static_cast<MoteId>(src);
        e.dst = static_cast<MoteId>(dst);
        edges.push_back(e);
    }
    return edges;
}

}  // namespace llnsim::radio
