#include "llnsim/radio/medium.hpp"

#include <algorithm>

namespace llnsim::radio {

namespace {

struct Propagator {
    const Station& sender;
    std::span<const Station> candidates;
    Rng& rng;

    DeliveryOutcome operator()(const ConstantLossUdgm& m) const {
        DeliveryOutcome out;
        for (const auto& c : candidates) {
            out.receivers.push_back({c.id, udgm_constant_outcome(m, distance(sender.position, c.position)), 0});
        }
        return out;
    }

    DeliveryOutcome operator()(const DistanceLossUdgm& m) const {
        DeliveryOutcome out;
        out.tx_gate_passed = rng.bernoulli(m.success_ratio_tx);
        for (const auto& c : candidates) {
            const double d = distance(sender.position, c.position);
            Reception r = Reception::silent;
            if (d <= m.tx_range) {
                if (out.tx_gate_passed) {
                    r = rng.bernoulli(udgm_distance_rx_probability(m, d)) ? Reception::received : Reception::interfered;
                } else {
                    r = Reception::interfered;
                }
            } else if (d <= m.interference_range) {
                r = Reception::interfered;
            }
            out.receivers.push_back({c.id, r, 0});
        }
        return out;
    }

    DeliveryOutcome operator()(const Dgrm& m) const {
        DeliveryOutcome out;
        for (const auto& c : candidates) {
            auto edge = dgrm_outcome(m, sender.id, c.id);
            if (!edge) {
                out.receivers.push_back({c.id, Reception::silent, 0});
                continue;
            }
            const bool ok = rng.bernoulli(edge->rx_probability);
            out.receivers.push_back({c.id, ok ? Reception::received : Reception::interfered, edge->delay_us});
        }
        return out;
    }

    DeliveryOutcome operator()(const FriisMrm& m) const {
        DeliveryOutcome out;
        for (const auto& c : candidates) {
            const double d = distance(sender.position, c.position);
            // Co-located motes are treated as the strongest possible link.
            const bool ok = d <= 0.0 || friis_received(m, d);
            out.receivers.push_back({c.id, ok ? Reception::received : Reception::silent, 0});
        }
        return out;
    }
};

bool overlaps(const Arrival& a, const Arrival& b) { return a.start < b.end && b.start < a.end; }

}  // namespace

DeliveryOutcome propagate(const RadioModel& model, const Station& sender, std::span<const Station> candidates, Rng& rng) {
    return std::visit(Propagator{sender, candidates, rng}, model);
}

std::vector<FrameVerdict> arbitrate_collisions(std::span<const Arrival> arrivals) {
    std::vector<FrameVerdict> out;
    out.reserve(arrivals.size());
    for (std::size_t i = 0; i < arrivals.size(); ++i) {
        bool collided = false;
        for (std::size_t j = 0; j < arrivals.size() && !collided; ++j) {
            if (i != j && overlaps(arrivals[i], arrivals[j])) collided = true;
        }
        out.push_back({arrivals[i].frame, !collided && arrivals[i].state == Reception::received, collided});
    }
    return out;
}

bool ReceiverChannel::begin(const Arrival& arrival) {
    bool collided = false;
    Entry entry{arrival, false};
    for (auto& [id, e] : active_) {
        if (overlaps(e.arrival, arrival)) {
            e.destroyed = true;
            entry.destroyed = true;
            collided = true;
        }
    }
    active_[arrival.frame] = entry;
    return collided;
}

std::size_t ReceiverChannel::destroy_in_progress(SimTime now) {
    std::size_t n = 0;
    for (auto& [id, e] : active_) {
        if (e.arrival.start <= now && now < e.arrival.end) {
            e.destroyed = true;
            ++n;
        }
    }
    return n;
}

std::optional<FrameVerdict> ReceiverChannel::finish(std::uint64_t frame) {
    auto it = active_.find(frame);
    if (it == active_.end()) return std::nullopt;
    const Entry e = it->second;
    active_.erase(it);
    return FrameVerdict{frame, !e.destroyed && e.arrival.state == Reception::received, e.destroyed};
}

}  // namespace llnsim::radio
