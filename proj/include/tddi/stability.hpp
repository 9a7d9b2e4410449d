#pragma once

#include <cmath>
#include <span>
#include <string_view>

#include "tddi/estimator.hpp"

namespace tddi {

enum class Classification { transmission_limited, distribution_limited, balanced };

inline const char* to_string(Classification c) {
    switch (c) {
    case Classification::transmission_limited: return "transmission_limited";
    case Classification::distribution_limited: return "distribution_limited";
    case Classification::balanced: return "balanced";
    }
    return "?";
}

struct StabilityRecord {
    int bus = 0;
    double total_load_mw = 0.0;
    double vsi = 0.0;
    double tddi = 0.0;
    Classification classification = Classification::balanced;
};

/// Proximity of the load to the impedance-match point: 1 means the combined
/// source impedance magnitude equals the load impedance magnitude.
inline double vsi(const TDEquivalent& eq) {
    const double zl = std::abs(eq.z_l);
    if (zl == 0.0) throw DomainError("zero load impedance");
    return std::abs(eq.z_t + eq.z_d) / zl;
}

/// Log ratio of the transmission to distribution impedance contributions.
/// Written as a log difference so swapping the two arguments negates the
/// result exactly.
inline double tddi(const TDEquivalent& eq) {
    const double zt = std::abs(eq.z_t);
    const double zd = std::abs(eq.z_d);
    if (zt == 0.0 || zd == 0.0)
        throw DomainError("index undefined for zero impedance contribution");
    return std::log(zt) - std::log(zd);
}

inline Classification classify(double tddi_value, double deadband = 0.05) {
    if (deadband < 0.0) throw ValidationError("deadband must be non-negative");
    if (tddi_value > deadband) return Classification::transmission_limited;
    if (tddi_value < -deadband) return Classification::distribution_limited;
    return Classification::balanced;
}

/// Bus with the highest index value at a common load level; ties go to the
/// lowest bus id.
inline int critical_bus(std::span<const StabilityRecord> records) {
    if (records.empty()) throw ValidationError("no stability records");
    const double level = records.front().total_load_mw;
    const StabilityRecord* best = &records.front();
    for (const auto& r : records) {
        if (std::abs(r.total_load_mw - level) > 1e-6 * std::max(1.0, level))
            throw ValidationError("stability records span different load levels");
        if (r.vsi > best->vsi || (r.vsi == best->vsi && r.bus < best->bus)) best = &r;
    }
    return best->bus;
}

} // namespace tddi
