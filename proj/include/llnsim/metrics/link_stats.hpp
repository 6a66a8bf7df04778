#pragma once

#include <cstdint>
#include <optional>

namespace llnsim::metrics {

inline constexpr double kEtxCeiling = 16.0;
/// ETX assumed for a link until kEtxWarmupFrames have been observed.
inline constexpr double kEtxInitial = 2.0;
inline constexpr std::uint64_t kEtxWarmupFrames = 5;
inline constexpr double kPrrSmoothing = 0.1;

/// Cumulative counts for one directed link.
struct LinkStats {
    std::uint64_t sent = 0;
    std::uint64_t received = 0;
};

/// received / sent; nullopt when nothing was sent.
std::optional<double> prr(const LinkStats& link);

/// 1 / prr; `ceiling` when prr is 0; nullopt when nothing was sent.
std::optional<double> etx(const LinkStats& link, double ceiling = kEtxCeiling);

/// Link estimate used by the objective function. Keeps cumulative counts and
/// an exponentially smoothed PRR seeded from the first kEtxWarmupFrames.
class LinkEstimator {
public:
    void record(bool acked);

    const LinkStats& stats() const { return stats_; }

    /// kEtxInitial during warm-up, then 1 / smoothed PRR capped at kEtxCeiling.
    double live_etx() const;

    bool warmed_up() const { return stats_.sent >= kEtxWarmupFrames; }

private:
    LinkStats stats_;
    double smoothed_prr_ = 0.0;
};

}  // namespace llnsim::metrics
