#include "llnsim/metrics/link_stats.hpp"

#include <algorithm>

namespace llnsim::metrics {

std::optional<double> prr(const LinkStats& link) {
    if (link.sent == 0) return std::nullopt;
    return static_cast<double>(link.received) / static_cast<double>(link.sent);
}

std::optional<double> etx(const LinkStats& link, double ceiling) {
    auto p = prr(link);
    if (!p) return std::nullopt;
    if (*p <= 0.0) return ceiling;
    return std::min(ceiling, 1.0 / *p);
}

void LinkEstimator::record(bool acked) {
    ++stats_.sent;
    if (acked) ++stats_.received;
    if (stats_.sent < kEtxWarmupFrames) return;
    if (stats_.sent == kEtxWarmupFrames) {
        smoothed_prr_ = *prr(stats_);
        return;
    }
    // p += a (x - p) leaves p bit-exact when x == p, so a lossless link stays at ETX 1.
    const double sample = acked ? 1.0 : 0.0;
    smoothed_prr_ += kPrrSmoothing * (sample - smoothed_prr_);
}

double LinkEstimator::live_etx() const {
    if (!warmed_up()) return kEtxInitial;
    if (smoothed_prr_ <= 1.0 / kEtxCeiling) return kEtxCeiling;
    return std::min(kEtxCeiling, 1.0 / smoothed_prr_);
}

}  // namespace llnsim::metrics
