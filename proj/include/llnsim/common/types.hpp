#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace llnsim {

/// Virtual time in integer microseconds.
using SimTime = std::int64_t;

constexpr SimTime kMicrosPerMilli = 1'000;
constexpr SimTime kMicrosPerSecond = 1'000'000;

constexpr SimTime from_seconds(double s) { return static_cast<SimTime>(std::llround(s * 1e6)); }
constexpr SimTime from_millis(std::int64_t ms) { return ms * kMicrosPerMilli; }

/// Mote identifier. Carried as 16 bits on the wire.
using MoteId = std::uint16_t;

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    friend bool operator==(const Vec2&, const Vec2&) = default;
};

inline double distance(Vec2 a, Vec2 b) { return std::hypot(a.x - b.x, a.y - b.y); }

enum class PowerSource { mains, battery };

inline const char* to_string(PowerSource p) { return p == PowerSource::mains ? "mains" : "battery"; }

}  // namespace llnsim
