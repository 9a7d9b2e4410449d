#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include <Eigen/Dense>

#include "tddi/powerflow.hpp"

namespace tddi {

/// Proportional load/generation growth: per unit of the loading parameter
/// every load grows by its base value (constant power factor) and every
/// non-slack generator by its base output; the slack absorbs the residual.
struct ScalingDirection {
    Eigen::VectorXcd load_increment; ///< per bus, complex, per unit lambda
    Eigen::VectorXd gen_increment;   ///< per bus, active, per unit lambda

    Eigen::VectorXcd injection_increment() const {
        return gen_increment.cast<Complex>() - load_increment;
    }
};

inline ScalingDirection direction(const Network& net) {
    ScalingDirection dir;
    dir.load_increment = Eigen::VectorXcd::Zero(net.size());
    dir.gen_increment = Eigen::VectorXd::Zero(net.size());
    for (int i = 0; i < net.size(); ++i)
        dir.load_increment[i] = net.buses()[i].base_load();
    for (const auto& g : net.generators()) {
        const int i = net.index_of(g.bus);
        if (net.buses()[i].kind != BusKind::slack) dir.gen_increment[i] += g.base_p;
    }
    return dir;
}

/// Injection targets at loading parameter lambda.
inline InjectionSet injections_at(const Network& net, const ScalingDirection& dir,
                                  double lambda) {
    InjectionSet base = base_injections(net);
    base.s += lambda * dir.injection_increment();
    return base;
}

struct OperatingPoint {
    double lambda = 0.0;
    PFSolution solution;
    double total_load_mw = 0.0;
};

/// Ordered continuation trace. Points up to nose_index lie on the upper
/// branch with strictly increasing lambda; any later points belong to the
/// lower branch.
struct PVTrace {
    std::vector<OperatingPoint> points;
    std::size_t nose_index = 0;
};

struct CpfOptions {
    double step = 0.02;        ///< predictor step in units of the active parameter
    double min_step = 1e-4;    ///< halving floor before termination
    double tolerance = 1e-8;   ///< corrector mismatch tolerance
    int corrector_max_iterations = 12;
    int lower_branch_points = 5; ///< points traced past the nose
    int max_points = 2000;
    double max_voltage_step = 0.05; ///< per-bus |V| change allowed per accepted step
};

inline double margin_mw(const PVTrace& trace) {
    if (trace.points.empty()) throw ValidationError("empty trace");
    return trace.points[trace.nose_index].total_load_mw - trace.points.front().total_load_mw;
}

namespace detail {

/// Bordered continuation system: power-flow equations augmented with one
/// pinning row that fixes the active parameter (a state component or lambda).
class ContinuationSolver {
public:
    ContinuationSolver(const Network& net, const ScalingDirection& dir,
                       const CpfOptions& opts)
        : net_(net), y_(net.ybus()), st_(net), opts_(opts),
          base_(base_injections(net).s), increment_(dir.injection_increment()) {
        const int neq = st_.equations();
        rhs_dlambda_.resize(neq);
        int row = 0;
        for (int i : st_.angle_buses) rhs_dlambda_[row++] = increment_[i].real();
        for (int i : st_.mag_buses) rhs_dlambda_[row++] = increment_[i].imag();
    }

    int equations() const { return st_.equations(); }
    int lambda_index() const { return st_.equations(); }

    Eigen::VectorXd pack(const Eigen::VectorXcd& v, double lambda) const {
        Eigen::VectorXd x(equations() + 1);
        int row = 0;
        for (int i : st_.angle_buses) x[row++] = std::arg(v[i]);
        for (int i : st_.mag_buses) x[row++] = std::abs(v[i]);
        x[equations()] = lambda;
        return x;
    }

    Eigen::VectorXcd unpack(const Eigen::VectorXd& x) const {
        Eigen::VectorXcd v = flat_start(net_);
        const int na = static_cast<int>(st_.angle_buses.size());
        for (int r = 0; r < na; ++r) {
            const int i = st_.angle_buses[r];
            v[i] = std::polar(std::abs(v[i]), x[r]);
        }
        for (int r = 0; r < static_cast<int>(st_.mag_buses.size()); ++r) {
            const int i = st_.mag_buses[r];
            v[i] = std::polar(x[na + r], std::arg(v[i]));
        }
        return v;
    }

    Eigen::MatrixXd bordered(const Eigen::VectorXcd& v, int pin) const {
        const int neq = equations();
        Eigen::MatrixXd g = Eigen::MatrixXd::Zero(neq + 1, neq + 1);
        g.topLeftCorner(neq, neq) = mismatch_jacobian_from(st_, y_, v);
        g.col(neq).head(neq) = rhs_dlambda_;
        g(neq, pin) = 1.0;
        return g;
    }

    /// Tangent normalized so the largest component has unit magnitude;
    /// returns the index of that component (the next continuation parameter).
    int tangent(const Eigen::VectorXcd& v, int pin, const Eigen::VectorXd* previous,
                Eigen::VectorXd& t) const {
        const int neq = equations();
        Eigen::VectorXd rhs = Eigen::VectorXd::Zero(neq + 1);
        rhs[neq] = 1.0;
        t = bordered(v, pin).partialPivLu().solve(rhs);
        if (!t.allFinite()) throw ConvergenceError("continuation tangent is singular");
        if (previous ? (t.dot(*previous) < 0.0) : (t[lambda_index()] < 0.0)) t = -t;
        int next_pin = 0;
        t.cwiseAbs().maxCoeff(&next_pin);
        t /= std::abs(t[next_pin]);
        return next_pin;
    }

    struct CorrectorResult {
        bool converged = false;
        int iterations = 0;
        double max_mismatch = 0.0;
    };

    /// Corrector Newton on [mismatch; x_pin - target] = 0; x holds the
    /// solution on success.
    CorrectorResult correct(Eigen::VectorXd& x, int pin, double target) const {
        const int neq = equations();
        for (int it = 0; it < opts_.corrector_max_iterations; ++it) {
            const Eigen::VectorXcd v = unpack(x);
            Eigen::VectorXcd spec = base_ + x[neq] * increment_;
            Eigen::VectorXd g(neq + 1);
            g.head(neq) = mismatch_from(st_, y_, spec, v);
            g[neq] = x[pin] - target;
            const double worst = g.cwiseAbs().maxCoeff();
            if (worst <= opts_.tolerance) return {true, it, worst};
            const Eigen::VectorXd dx = bordered(v, pin).partialPivLu().solve(-g);
            if (!dx.allFinite()) return {};
            x += dx;
            const int na = static_cast<int>(st_.angle_buses.size());
            for (int r = 0; r < static_cast<int>(st_.mag_buses.size()); ++r)
                if (x[na + r] <= 0.0) return {};
        }
        return {};
    }

    const StateIndex& state() const { return st_; }

private:
    const Network& net_;
    Eigen::MatrixXcd y_;
    StateIndex st_;
    CpfOptions opts_;
    Eigen::VectorXcd base_;
    Eigen::VectorXcd increment_;
    Eigen::VectorXd rhs_dlambda_;
};

inline double max_magnitude_delta(const Eigen::VectorXcd& a, const Eigen::VectorXcd& b) {
    return (a.cwiseAbs() - b.cwiseAbs()).cwiseAbs().maxCoeff();
}

} // namespace detail

/// Tangent-predictor / Newton-corrector continuation along the scaling
/// direction. The continuation parameter switches from lambda to the
/// fastest-moving voltage component near the nose, so the fold is crossed
/// rather than approached; tracing stops a few points down the lower branch.
inline PVTrace run_cpf(const Network& net, const ScalingDirection& dir,
                       const CpfOptions& opts = {}) {
    PVTrace trace;
    const double base_mw = net.total_load_mw();
    PFSolution base = solve_pf(net, base_injections(net), std::nullopt,
                               {opts.tolerance, 30, false});
    trace.points.push_back({0.0, base, base_mw});
    trace.nose_index = 0;

    if (dir.injection_increment().norm() == 0.0) return trace; // nothing to continue

    detail::ContinuationSolver solver(net, dir, opts);
    const int lam = solver.lambda_index();

    Eigen::VectorXcd v = base.v;
    double lambda = 0.0;
    int pin = lam;
    Eigen::VectorXd prev_tangent;
    double step = opts.step;
    int lower_points = 0;

    while (static_cast<int>(trace.points.size()) < opts.max_points) {
        Eigen::VectorXd t;
        const int next_pin =
            solver.tangent(v, pin, prev_tangent.size() ? &prev_tangent : nullptr, t);

        bool accepted = false;
        Eigen::VectorXd x;
        detail::ContinuationSolver::CorrectorResult cr;
        while (true) {
            x = solver.pack(v, lambda) + step * t;
            cr = solver.correct(x, next_pin, x[next_pin]);
            if (cr.converged) {
                const Eigen::VectorXcd v_new = solver.unpack(x);
                // upper branch: any lambda change (a decrease is the nose
                // crossing); lower branch: lambda must keep decreasing
                const bool monotone =
                    lower_points == 0 ? x[lam] != lambda : x[lam] < lambda;
                if (detail::max_magnitude_delta(v_new, v) <= opts.max_voltage_step &&
                    monotone) {
                    accepted = true;
                    break;
                }
            }
            if (step / 2.0 < opts.min_step) break;
            step /= 2.0;
        }
        if (!accepted) {
            if (trace.points.size() == 1)
                throw ConvergenceError("continuation step underflow before any progress");
            break;
        }

        const double new_lambda = x[lam];
        v = solver.unpack(x);
        trace.points.push_back(
            {new_lambda, {v, cr.iterations, cr.max_mismatch}, (1.0 + new_lambda) * base_mw});
        if (new_lambda < lambda) ++lower_points; // past the nose
        lambda = new_lambda;
        pin = next_pin;
        prev_tangent = t;
        step = std::min(opts.step, step * 2.0);

        if (lower_points >= opts.lower_branch_points || lambda < 0.0) break;
    }

    double best = trace.points.front().total_load_mw;
    for (std::size_t i = 0; i < trace.points.size(); ++i)
        if (trace.points[i].total_load_mw > best) {
            best = trace.points[i].total_load_mw;
            trace.nose_index = i;
        }
    return trace;
}

} // namespace tddi
