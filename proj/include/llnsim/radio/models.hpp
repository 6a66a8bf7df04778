#pragma once

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "llnsim/common/types.hpp"

namespace llnsim::radio {

enum class Reception { received, interfered, silent };

const char* to_string(Reception r);

/// Ideal transmission disk; annulus up to interference_range only interferes.
struct ConstantLossUdgm {
    double tx_range = 50.0;
    double interference_range = 100.0;
};

/// Disk with quadratic reception falloff:
///   p(d) = success_ratio_rx * (1 - (d / tx_range)^2)   for d <= tx_range, else 0.
/// success_ratio_tx is one sender-side Bernoulli gate per transmission.
struct DistanceLossUdgm {
    double tx_range = 50.0;
    double interference_range = 100.0;
    double success_ratio_tx = 1.0;
    double success_ratio_rx = 1.0;
};

struct DgrmEdge {
    MoteId src = 0;
    MoteId dst = 0;
    double rx_probability = 1.0;
    SimTime delay_us = 0;
    double signal_dbm = -10.0;
};

/// Directed edge table; a missing edge means no reachability.
class Dgrm {
public:
    Dgrm() = default;
    explicit Dgrm(std::vector<DgrmEdge> edges);

    const DgrmEdge* find(MoteId src, MoteId dst) const;
    const std::vector<DgrmEdge>& edges() const { return edges_; }

private:
    std::vector<DgrmEdge> edges_;
    std::map<std::pair<MoteId, MoteId>, std::size_t> index_;
};

/// Free-space (Friis) path loss with an inclusive sensitivity threshold.
struct FriisMrm {
    double tx_power_dbm = 0.0;
    double frequency_hz = 2.4e9;
    double rx_sensitivity_dbm = -100.0;
};

using RadioModel = std::variant<ConstantLossUdgm, DistanceLossUdgm, Dgrm, FriisMrm>;

/// Scenario-facing model name: udgm_constant, udgm_distance, dgrm, friis.
std::string model_name(const RadioModel& model);

/// Throws std::invalid_argument naming the violated constraint.
void validate(const RadioModel& model);

Reception udgm_constant_outcome(const ConstantLossUdgm& model, double d);

double udgm_distance_rx_probability(const DistanceLossUdgm& model, double d);

std::optional<DgrmEdge> dgrm_outcome(const Dgrm& model, MoteId src, MoteId dst);

/// P_rx = tx_power + 20 log10(c / (4 pi d f)). Throws std::domain_error for d <= 0.
double friis_rx_power(const FriisMrm& model, double d);

bool friis_received(const FriisMrm& model, double d);

/// Parses an edge list: one "src dst prob delay_us signal_dBm" per line.
/// Blank lines and '#' comments are skipped. Throws std::runtime_error
/// with the offending line number.
std::vector<DgrmEdge> parse_edge_list(const std::string& text);

}  // namespace llnsim::radio
