#pragma once

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "tddi/case_io.hpp"
#include "tddi/stability.hpp"

namespace tddi {

enum class EstimatorMode { two_point, lsq };

/// Everything needed to reproduce one study end to end. Runs are
/// deterministic functions of this struct (seed included).
struct ScenarioConfig {
    std::string name = "scenario";
    std::string case_source;              ///< builtin name or path
    std::optional<FeederSpec> feeder;     ///< replaces the attach-bus load
    CpfOptions cpf;
    bool monitor_all_replicas = false;    ///< default: replica 1 only
    double noise_sigma = 0.0;
    std::uint64_t seed = 0;
    EstimatorMode estimator_mode = EstimatorMode::two_point;
    int window = 2;                       ///< instants per estimate (lsq mode)
    double deadband = 0.05;
    FeederDropFormula drop_formula = FeederDropFormula::per_instant_drop;
};

/// Stability record plus the equivalent it was derived from, tagged with the
/// trace instant whose measurements closed the estimation window.
struct IndexRecord {
    int instant = 0;
    StabilityRecord stability;
    TDEquivalent equivalent;
};

struct ScenarioResult {
    std::string name;
    Network net;
    PVTrace trace;
    std::map<int, std::vector<IndexRecord>> records; ///< bus id -> loading order
    double margin_mw = 0.0;
    std::optional<int> critical_bus;
    std::optional<double> tddi_at_critical;
    std::optional<Classification> nose_classification;
};

namespace detail {

inline bool is_replica_load(const Bus& bus, bool all_replicas) {
    if (bus.base_load_p == 0.0 && bus.base_load_q == 0.0) return false;
    const auto pos = bus.name.rfind("-feeder");
    if (pos == std::string::npos) return false;
    return all_replicas || bus.name.substr(pos) == "-feeder1";
}

/// Per-load noise stream so monitored loads stay independent of each other
/// and of the monitoring set.
inline std::uint64_t seed_for(std::uint64_t base_seed, int bus_id) {
    return base_seed ^ (0x9e3779b97f4a7c15ull * static_cast<std::uint64_t>(bus_id + 1));
}

} // namespace detail

inline ScenarioResult run_scenario(const ScenarioConfig& cfg) {
    if (cfg.estimator_mode == EstimatorMode::lsq && cfg.window < 2)
        throw ConfigError("least-squares estimation needs a window of at least 2");
    if (cfg.noise_sigma < 0.0) throw ConfigError("noise sigma must be non-negative");

    Network net = load_case_file(cfg.case_source);
    if (cfg.feeder) net = attach_feeders(net, *cfg.feeder);

    const ScalingDirection dir = direction(net);
    PVTrace trace = run_cpf(net, dir, cfg.cpf);

    std::vector<MonitoredLoad> monitored;
    if (cfg.feeder) {
        for (const auto& b : net.buses())
            if (detail::is_replica_load(b, cfg.monitor_all_replicas))
                monitored.push_back({b.id, cfg.feeder->attach_bus});
    }

    EstimatorOptions est_opts;
    est_opts.drop_formula = cfg.drop_formula;
    const int window = cfg.estimator_mode == EstimatorMode::two_point ? 2 : cfg.window;

    ScenarioResult result{cfg.name, std::move(net), std::move(trace), {}, 0.0,
                          std::nullopt, std::nullopt, std::nullopt};
    result.margin_mw = margin_mw(result.trace);

    for (const auto& m : monitored) {
        auto snapshots = extract_snapshots(result.net, result.trace, m);
        snapshots = add_noise(std::move(snapshots), cfg.noise_sigma,
                              detail::seed_for(cfg.seed, m.load_bus));
        std::vector<IndexRecord> recs;
        for (std::size_t k = window - 1; k < snapshots.size(); ++k) {
            try {
                TDEquivalent eq;
                if (cfg.estimator_mode == EstimatorMode::two_point)
                    eq = estimate_two_point(snapshots[k - 1], snapshots[k], est_opts);
                else
                    eq = estimate_lsq({snapshots.data() + (k + 1 - window),
                                       static_cast<std::size_t>(window)},
                                      est_opts);
                const double t = tddi(eq);
                recs.push_back({static_cast<int>(k),
                                {m.load_bus, snapshots[k].total_load_mw, vsi(eq), t,
                                 classify(t, cfg.deadband)},
                                eq});
            } catch (const ConditioningError&) {
                // pair without usable load change: no record at this instant
            }
        }
        result.records.emplace(m.load_bus, std::move(recs));
    }

    // Critical-loading call: latest instant every monitored load still has an
    // estimate for, then highest index wins.
    if (!result.records.empty()) {
        int last_common = -1;
        bool first = true;
        for (const auto& [bus, recs] : result.records) {
            if (recs.empty()) { last_common = -1; break; }
            const int last = recs.back().instant;
            last_common = first ? last : std::min(last_common, last);
            first = false;
        }
        if (last_common >= 0) {
            std::vector<StabilityRecord> at_level;
            std::map<int, double> tddi_at_level;
            for (const auto& [bus, recs] : result.records)
                for (const auto& r : recs)
                    if (r.instant == last_common) {
                        at_level.push_back(r.stability);
                        tddi_at_level[bus] = r.stability.tddi;
                    }
            if (!at_level.empty()) {
                const int critical = critical_bus(at_level);
                result.critical_bus = critical;
                result.tddi_at_critical = tddi_at_level.at(critical);
                result.nose_classification =
                    classify(*result.tddi_at_critical, cfg.deadband);
            }
        }
    }
    return result;
}

enum class IndexField { vsi, tddi };

/// Plot-ready (total load MW, index value) series for one monitored bus.
inline std::vector<std::pair<double, double>> series(const ScenarioResult& result,
                                                     int bus, IndexField field) {
    const auto it = result.records.find(bus);
    if (it == result.records.end())
        throw ConfigError("bus " + std::to_string(bus) + " is not monitored");
    std::vector<std::pair<double, double>> out;
    out.reserve(it->second.size());
    for (const auto& r : it->second)
        out.emplace_back(r.stability.total_load_mw,
                         field == IndexField::vsi ? r.stability.vsi : r.stability.tddi);
    return out;
}

} // namespace tddi
