#pragma once

#include <cmath>
#include <span>

#include <Eigen/Dense>
#include <Eigen/SVD>

#include "tddi/measurements.hpp"

namespace tddi {

/// Split Thevenin equivalent seen by one load: source e_th behind the
/// transmission contribution z_t, the feeder contribution z_d, and the load
/// impedance z_l. condition is the singular-value ratio of the stacked
/// real-valued estimation system (diagnostic only).
struct TDEquivalent {
    Complex e_th;
    Complex z_t;
    Complex z_d;
    Complex z_l;
    double condition = 0.0;
};

/// How the feeder contribution is computed in the two-instant estimator.
/// per_instant_drop averages the feeder voltage drop divided by the load
/// current at each instant; substation_difference is an alternative that
/// uses only substation voltages and is kept for comparison runs (it
/// degenerates to ~0 on an ideal circuit as the instants approach).
enum class FeederDropFormula { per_instant_drop, substation_difference };

struct EstimatorOptions {
    double min_current_delta = 1e-6; ///< reject closer instants (singular split)
    FeederDropFormula drop_formula = FeederDropFormula::per_instant_drop;
};

namespace detail {

/// Singular-value ratio of the real-stacked form of the complex system
/// rows [-1, i, 0; 0, 0, i] per instant.
inline double stacked_condition(std::span<const PhasorSnapshot> snapshots) {
    const int m = static_cast<int>(snapshots.size());
    Eigen::MatrixXcd a = Eigen::MatrixXcd::Zero(2 * m, 3);
    for (int k = 0; k < m; ++k) {
        a(2 * k, 0) = -1.0;
        a(2 * k, 1) = snapshots[k].i_dist;
        a(2 * k + 1, 2) = snapshots[k].i_dist;
    }
    Eigen::MatrixXd stacked(4 * m, 6);
    stacked << a.real(), -a.imag(), a.imag(), a.real();
    const auto svd = stacked.jacobiSvd();
    const auto& sv = svd.singularValues();
    const double smallest = sv[sv.size() - 1];
    if (smallest <= 0.0) return std::numeric_limits<double>::infinity();
    return sv[0] / smallest;
}

} // namespace detail

/// Closed-form estimate from two instants: the source and transmission part
/// from substation voltage/current differences, the feeder part from the
/// per-instant drop, the load from the mean per-instant quotient.
inline TDEquivalent estimate_two_point(const PhasorSnapshot& s1, const PhasorSnapshot& s2,
                                       const EstimatorOptions& opts = {}) {
    const Complex di = s1.i_dist - s2.i_dist;
    if (std::abs(di) < opts.min_current_delta)
        throw ConditioningError("insufficient load change between instants (|di| = " +
                                std::to_string(std::abs(di)) + ")");

    TDEquivalent eq;
    eq.z_t = -(s1.v_sub - s2.v_sub) / di;
    eq.e_th = (s2.v_sub * s1.i_dist - s1.v_sub * s2.i_dist) / di;
    switch (opts.drop_formula) {
    case FeederDropFormula::per_instant_drop:
        eq.z_d = ((s1.v_sub - s1.v_dist) / s1.i_dist +
                  (s2.v_sub - s2.v_dist) / s2.i_dist) / 2.0;
        break;
    case FeederDropFormula::substation_difference:
        eq.z_d = ((s1.v_sub - s2.v_sub) / s1.i_dist +
                  (s2.v_sub - s1.v_sub) / s2.i_dist) / 2.0;
        break;
    }
    eq.z_l = (s1.v_dist / s1.i_dist + s2.v_dist / s2.i_dist) / 2.0;
    const PhasorSnapshot pair[2] = {s1, s2};
    eq.condition = detail::stacked_condition(pair);
    return eq;
}

/// Complex linear least squares over all instants; two rows per instant
/// relate (e_th, z_t, z_d) to the measured phasors, the load impedance is
/// the mean per-instant quotient. With exactly two noiseless snapshots this
/// matches estimate_two_point.
inline TDEquivalent estimate_lsq(std::span<const PhasorSnapshot> snapshots,
                                 const EstimatorOptions& opts = {}) {
    const int m = static_cast<int>(snapshots.size());
    if (m < 2) throw ValidationError("least-squares estimation needs at least 2 snapshots");

    double max_di = 0.0;
    for (int k = 1; k < m; ++k)
        max_di = std::max(max_di,
                          std::abs(snapshots[k].i_dist - snapshots[0].i_dist));
    if (max_di < opts.min_current_delta)
        throw ConditioningError("snapshots carry no usable load variation");

    Eigen::MatrixXcd a = Eigen::MatrixXcd::Zero(2 * m, 3);
    Eigen::VectorXcd b(2 * m);
    for (int k = 0; k < m; ++k) {
        const PhasorSnapshot& s = snapshots[k];
        a(2 * k, 0) = -1.0;
        a(2 * k, 1) = s.i_dist;
        b[2 * k] = -s.v_sub;
        a(2 * k + 1, 2) = s.i_dist;
        b[2 * k + 1] = s.v_sub - s.v_dist;
    }
    const Eigen::VectorXcd sol = a.colPivHouseholderQr().solve(b);
    if (!sol.allFinite())
        throw ConditioningError("stacked estimation system is rank deficient");

    TDEquivalent eq;
    eq.e_th = sol[0];
    eq.z_t = sol[1];
    eq.z_d = sol[2];
    Complex zl_sum;
    for (const auto& s : snapshots) zl_sum += s.v_dist / s.i_dist;
    eq.z_l = zl_sum / static_cast<double>(m);
    eq.condition = detail::stacked_condition(snapshots);
    return eq;
}

} // namespace tddi
