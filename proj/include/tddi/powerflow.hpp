#pragma once

#include <cmath>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "tddi/network.hpp"

namespace tddi {

/// Target complex power injection per bus (generation minus load), per-unit.
/// The slack bus entry is ignored in both P and Q; pv entries in Q.
struct InjectionSet {
    Eigen::VectorXcd s;
};

/// Base-case injections: negative loads everywhere plus active generation at
/// non-slack generator buses.
inline InjectionSet base_injections(const Network& net) {
    Eigen::VectorXcd s = Eigen::VectorXcd::Zero(net.size());
    for (int i = 0; i < net.size(); ++i) s[i] -= net.buses()[i].base_load();
    for (const auto& g : net.generators()) {
        const int i = net.index_of(g.bus);
        if (net.buses()[i].kind != BusKind::slack) s[i] += g.base_p;
    }
    return {std::move(s)};
}

struct PFSolution {
    Eigen::VectorXcd v;  ///< complex bus voltage, per-unit, slack angle 0
    int iterations = 0;
    double max_mismatch = 0.0;
};

struct PFOptions {
    double tolerance = 1e-8;
    int max_iterations = 30;
    /// Reserved extension point; generator reactive limits are never
    /// enforced in the bundled studies.
    bool enforce_q_limits = false;
};

namespace detail {

/// Reduced state bookkeeping: angles at all non-slack buses followed by
/// voltage magnitudes at pq buses.
struct StateIndex {
    std::vector<int> angle_buses; ///< dense bus indices with a P equation
    std::vector<int> mag_buses;   ///< dense bus indices with a Q equation

    explicit StateIndex(const Network& net) {
        for (int i = 0; i < net.size(); ++i) {
            const BusKind k = net.buses()[i].kind;
            if (k != BusKind::slack) angle_buses.push_back(i);
            if (k == BusKind::pq) mag_buses.push_back(i);
        }
    }

    int equations() const {
        return static_cast<int>(angle_buses.size() + mag_buses.size());
    }
};

inline Eigen::VectorXcd calculated_injections(const Eigen::MatrixXcd& y,
                                              const Eigen::VectorXcd& v) {
    return v.array() * (y * v).array().conjugate();
}

/// Derivatives of the calculated injections with respect to bus angles and
/// voltage magnitudes (complex form; real part = P rows, imag part = Q rows).
inline void injection_derivatives(const Eigen::MatrixXcd& y, const Eigen::VectorXcd& v,
                                  Eigen::MatrixXcd& ds_dang, Eigen::MatrixXcd& ds_dmag) {
    const Eigen::VectorXcd ibus = y * v;
    const Eigen::VectorXcd vnorm = v.array() / v.array().abs();
    const Eigen::MatrixXcd diag_v = v.asDiagonal();
    Eigen::MatrixXcd diag_i = Eigen::MatrixXcd::Zero(v.size(), v.size());
    diag_i.diagonal() = ibus;
    ds_dang = Complex(0, 1) * diag_v * (diag_i - y * diag_v).conjugate();
    ds_dmag = diag_v * (y * Eigen::MatrixXcd(vnorm.asDiagonal())).conjugate() +
              Eigen::MatrixXcd(ibus.conjugate().asDiagonal()) *
                  Eigen::MatrixXcd(vnorm.asDiagonal());
}

inline Eigen::VectorXd mismatch_from(const StateIndex& st, const Eigen::MatrixXcd& y,
                                     const Eigen::VectorXcd& s_spec,
                                     const Eigen::VectorXcd& v) {
    const Eigen::VectorXcd delta = s_spec - calculated_injections(y, v);
    Eigen::VectorXd f(st.equations());
    int row = 0;
    for (int i : st.angle_buses) f[row++] = delta[i].real();
    for (int i : st.mag_buses) f[row++] = delta[i].imag();
    return f;
}

/// d(mismatch)/d[angles; magnitudes]. Note mismatch = spec - calculated,
/// hence the negation of the injection derivatives.
inline Eigen::MatrixXd mismatch_jacobian_from(const StateIndex& st,
                                              const Eigen::MatrixXcd& y,
                                              const Eigen::VectorXcd& v) {
    Eigen::MatrixXcd ds_dang, ds_dmag;
    injection_derivatives(y, v, ds_dang, ds_dmag);
    const int na = static_cast<int>(st.angle_buses.size());
    const int nm = static_cast<int>(st.mag_buses.size());
    Eigen::MatrixXd j(na + nm, na + nm);
    for (int r = 0; r < na; ++r) {
        const int i = st.angle_buses[r];
        for (int c = 0; c < na; ++c) j(r, c) = -ds_dang(i, st.angle_buses[c]).real();
        for (int c = 0; c < nm; ++c) j(r, na + c) = -ds_dmag(i, st.mag_buses[c]).real();
    }
    for (int r = 0; r < nm; ++r) {
        const int i = st.mag_buses[r];
        for (int c = 0; c < na; ++c) j(na + r, c) = -ds_dang(i, st.angle_buses[c]).imag();
        for (int c = 0; c < nm; ++c) j(na + r, na + c) = -ds_dmag(i, st.mag_buses[c]).imag();
    }
    return j;
}

inline Eigen::VectorXcd flat_start(const Network& net) {
    Eigen::VectorXcd v(net.size());
    for (int i = 0; i < net.size(); ++i) {
        const Bus& b = net.buses()[i];
        v[i] = (b.kind == BusKind::pq) ? 1.0 : *b.v_setpoint;
    }
    return v;
}

/// Applies a state update, keeping slack/pv magnitudes pinned.
inline void apply_state_step(const StateIndex& st, const Eigen::VectorXd& dx,
                             Eigen::VectorXcd& v) {
    const int na = static_cast<int>(st.angle_buses.size());
    for (int r = 0; r < na; ++r) {
        const int i = st.angle_buses[r];
        const double mag = std::abs(v[i]);
        const double ang = std::arg(v[i]) + dx[r];
        v[i] = std::polar(mag, ang);
    }
    for (int r = 0; r < static_cast<int>(st.mag_buses.size()); ++r) {
        const int i = st.mag_buses[r];
        const double mag = std::abs(v[i]) + dx[na + r];
        v[i] = std::polar(mag, std::arg(v[i]));
    }
}

} // namespace detail

/// Power mismatch (spec minus calculated): P entries for all non-slack buses
/// followed by Q entries for pq buses. Zero iff v solves the power flow.
inline Eigen::VectorXd mismatch(const Network& net, const InjectionSet& inj,
                                const Eigen::VectorXcd& v) {
    detail::StateIndex st(net);
    return detail::mismatch_from(st, net.ybus(), inj.s, v);
}

/// Jacobian of mismatch() with respect to the reduced state
/// [angles at non-slack buses; magnitudes at pq buses].
inline Eigen::MatrixXd mismatch_jacobian(const Network& net, const Eigen::VectorXcd& v) {
    detail::StateIndex st(net);
    return detail::mismatch_jacobian_from(st, net.ybus(), v);
}

/// Full-Newton AC power flow in polar coordinates. Deterministic; throws
/// ConvergenceError when the operating point is infeasible within
/// opts.max_iterations.
inline PFSolution solve_pf(const Network& net, const InjectionSet& inj,
                           const std::optional<PFSolution>& start = std::nullopt,
                           const PFOptions& opts = {}) {
    if (inj.s.size() != net.size())
        throw ValidationError("injection vector does not match network size");
    if (start && start->v.size() != net.size())
        throw ValidationError("warm start does not match network size");

    const Eigen::MatrixXcd y = net.ybus();
    const detail::StateIndex st(net);
    Eigen::VectorXcd v = start ? start->v : detail::flat_start(net);
    // Re-pin regulated magnitudes and the slack phasor in case the warm start
    // came from a different injection set.
    for (int i = 0; i < net.size(); ++i) {
        const Bus& b = net.buses()[i];
        if (b.kind == BusKind::pv) v[i] = std::polar(*b.v_setpoint, std::arg(v[i]));
        if (b.kind == BusKind::slack) v[i] = Complex(*b.v_setpoint, 0.0);
    }

    for (int it = 0; it <= opts.max_iterations; ++it) {
        const Eigen::VectorXd f = detail::mismatch_from(st, y, inj.s, v);
        const double worst = f.size() ? f.cwiseAbs().maxCoeff() : 0.0;
        if (worst <= opts.tolerance) return {v, it, worst};
        if (it == opts.max_iterations) break;

        const Eigen::MatrixXd j = detail::mismatch_jacobian_from(st, y, v);
        const Eigen::VectorXd dx = j.partialPivLu().solve(-f);
        if (!dx.allFinite())
            throw ConvergenceError("power flow Jacobian is singular");
        detail::apply_state_step(st, dx, v);
        for (int i : st.mag_buses)
            if (std::abs(v[i]) <= 0.0)
                throw ConvergenceError("voltage magnitude collapsed during iteration");
    }
    throw ConvergenceError("power flow did not converge in " +
                           std::to_string(opts.max_iterations) + " iterations");
}

/// Injections implied by a voltage profile, via the admittance matrix.
inline Eigen::VectorXcd bus_injections(const Network& net, const Eigen::VectorXcd& v) {
    return detail::calculated_injections(net.ybus(), v);
}

/// Total complex branch loss (series loss plus charging), computed per
/// branch from terminal voltages. Independent of the admittance-matrix route,
/// so sum(bus_injections) - total_branch_loss is a consistency check.
inline Complex total_branch_loss(const Network& net, const Eigen::VectorXcd& v) {
    Complex total;
    for (const auto& br : net.branches()) {
        const Complex vf = v[net.index_of(br.from)];
        const Complex vt = v[net.index_of(br.to)];
        const Complex ys = br.series_admittance();
        const Complex half_charge(0.0, br.b_shunt / 2.0);
        const Complex if_ = (vf - vt) * ys + vf * half_charge;
        const Complex it_ = (vt - vf) * ys + vt * half_charge;
        total += vf * std::conj(if_) + vt * std::conj(it_);
    }
    return total;
}

} // namespace tddi
