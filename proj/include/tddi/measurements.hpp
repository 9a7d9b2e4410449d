#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "tddi/cpf.hpp"

namespace tddi {

/// One load observed by a feeder-level sensor plus the matching sensor at
/// the transmission bus the feeder hangs from.
struct MonitoredLoad {
    int load_bus = 0;
    int substation_bus = 0;
};

/// Voltage/current phasors for one monitored load at one quasi-steady-state
/// operating point.
struct PhasorSnapshot {
    Complex v_sub;
    Complex v_dist;
    Complex i_dist;
    double total_load_mw = 0.0;
    int instant = 0;
};

/// One snapshot per upper-branch operating point, in loading order. The load
/// current follows the constant-power model at the point's scaled level:
/// i = conj((1+lambda) * s_base / v_dist).
inline std::vector<PhasorSnapshot> extract_snapshots(const Network& net,
                                                     const PVTrace& trace,
                                                     const MonitoredLoad& m) {
    const int sub = net.index_of(m.substation_bus);
    const int load = net.index_of(m.load_bus);
    const Complex s_base = net.buses()[load].base_load();
    if (std::abs(s_base) == 0.0)
        throw ValidationError("monitored bus " + std::to_string(m.load_bus) +
                              " carries no base load");

    std::vector<PhasorSnapshot> out;
    out.reserve(trace.nose_index + 1);
    for (std::size_t k = 0; k <= trace.nose_index; ++k) {
        const OperatingPoint& pt = trace.points[k];
        PhasorSnapshot s;
        s.v_sub = pt.solution.v[sub];
        s.v_dist = pt.solution.v[load];
        s.i_dist = std::conj((1.0 + pt.lambda) * s_base / s.v_dist);
        s.total_load_mw = pt.total_load_mw;
        s.instant = static_cast<int>(k);
        out.push_back(s);
    }
    return out;
}

namespace detail {

/// Deterministic standard-normal draw (Box-Muller over mt19937_64);
/// std::normal_distribution is implementation-defined, this is not.
class GaussianSource {
public:
    explicit GaussianSource(std::uint64_t seed) : rng_(seed) {}

    double operator()() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = 0.0;
        do {
            u1 = uniform();
        } while (u1 <= 0.0);
        const double u2 = uniform();
        const double radius = std::sqrt(-2.0 * std::log(u1));
        const double angle = 2.0 * M_PI * u2;
        spare_ = radius * std::sin(angle);
        have_spare_ = true;
        return radius * std::cos(angle);
    }

private:
    double uniform() {
        return (rng_() >> 11) * 0x1.0p-53; // 53 uniform bits in [0,1)
    }

    std::mt19937_64 rng_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

} // namespace detail

/// Adds independent Gaussian perturbations (sigma per real/imaginary part)
/// to every phasor. sigma = 0 returns the input untouched; fixed seeds give
/// reproducible output.
inline std::vector<PhasorSnapshot> add_noise(std::vector<PhasorSnapshot> snapshots,
                                             double sigma, std::uint64_t seed) {
    if (sigma < 0.0) throw ValidationError("noise sigma must be non-negative");
    if (sigma == 0.0) return snapshots;
    detail::GaussianSource gauss(seed);
    for (auto& s : snapshots) {
        s.v_sub += Complex(sigma * gauss(), sigma * gauss());
        s.v_dist += Complex(sigma * gauss(), sigma * gauss());
        s.i_dist += Complex(sigma * gauss(), sigma * gauss());
    }
    return snapshots;
}

} // namespace tddi
