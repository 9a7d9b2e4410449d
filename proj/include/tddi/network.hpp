#pragma once

#include <algorithm>
#include <complex>
#include <iostream>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

#include "tddi/errors.hpp"

namespace tddi {

using Complex = std::complex<double>;

enum class BusKind { slack, pv, pq };

inline const char* to_string(BusKind k) {
    switch (k) {
    case BusKind::slack: return "slack";
    case BusKind::pv: return "pv";
    case BusKind::pq: return "pq";
    }
    return "?";
}

/// One electrical node. Loads are consumption-positive, per-unit on the
/// system MVA base. v_setpoint is meaningful for slack/pv buses only.
struct Bus {
    int id = 0;
    BusKind kind = BusKind::pq;
    std::optional<double> v_setpoint;
    double base_load_p = 0.0;
    double base_load_q = 0.0;
    std::string name;

    Complex base_load() const { return {base_load_p, base_load_q}; }
};

/// Series branch with total line-charging susceptance b_shunt, split half
/// per end. Off-nominal taps are fixed at 1.0.
struct Branch {
    int from = 0;
    int to = 0;
    double r = 0.0;
    double x = 0.0;
    double b_shunt = 0.0;
    double tap = 1.0;

    Complex series_impedance() const { return {r, x}; }
    Complex series_admittance() const { return 1.0 / series_impedance(); }
};

/// Dispatchable machine at a slack or pv bus. base_p is the quantity scaled
/// during proportional load/generation increase (ignored at the slack).
struct Generator {
    int bus = 0;
    double base_p = 0.0;
    double v_setpoint = 1.0;
};

/// Identical radial feeder template hung off a transmission bus: the attach
/// bus plays the feeder-head role, each replica adds buses D1, D2, D3 wired
/// head->D1, D1->D2, D1->D3 with loads at D2 and D3.
struct FeederSpec {
    int attach_bus = 0;
    Complex z_d0_d1;
    Complex z_d1_d2;
    Complex z_d1_d3;
    Complex load_d2;
    Complex load_d3;
    int replicas = 1;
};

/// Immutable, validated grid model. Construction checks the structural
/// invariants (single slack, connected graph, resolvable endpoints); all
/// accessors are const and the object is safe to share across threads.
class Network {
public:
    Network(std::vector<Bus> buses, std::vector<Branch> branches,
            std::vector<Generator> generators, double mva_base = 100.0)
        : buses_(std::move(buses)), branches_(std::move(branches)),
          generators_(std::move(generators)), mva_base_(mva_base) {
        validate();
    }

    const std::vector<Bus>& buses() const { return buses_; }
    const std::vector<Branch>& branches() const { return branches_; }
    const std::vector<Generator>& generators() const { return generators_; }
    double mva_base() const { return mva_base_; }

    int size() const { return static_cast<int>(buses_.size()); }

    /// Dense 0-based index of a bus id; throws for unknown ids.
    int index_of(int bus_id) const {
        auto it = index_.find(bus_id);
        if (it == index_.end())
            throw ValidationError("unknown bus id " + std::to_string(bus_id));
        return it->second;
    }

    bool has_bus(int bus_id) const { return index_.count(bus_id) > 0; }

    const Bus& bus(int bus_id) const { return buses_[index_of(bus_id)]; }

    int slack_index() const { return slack_index_; }

    /// Bus whose name matches exactly, if any.
    std::optional<int> find_bus_by_name(const std::string& name) const {
        for (const auto& b : buses_)
            if (b.name == name) return b.id;
        return std::nullopt;
    }

    Complex total_load() const {
        Complex s;
        for (const auto& b : buses_) s += b.base_load();
        return s;
    }

    double total_load_mw() const { return total_load().real() * mva_base_; }

    /// Nodal admittance matrix. Symmetric for tap = 1 networks.
    Eigen::MatrixXcd ybus() const {
        const int n = size();
        Eigen::MatrixXcd y = Eigen::MatrixXcd::Zero(n, n);
        for (const auto& br : branches_) {
            const int i = index_of(br.from);
            const int j = index_of(br.to);
            const Complex ys = br.series_admittance();
            const Complex half_charge(0.0, br.b_shunt / 2.0);
            y(i, i) += ys + half_charge;
            y(j, j) += ys + half_charge;
            y(i, j) -= ys;
            y(j, i) -= ys;
        }
        return y;
    }

private:
    void validate() {
        if (buses_.empty()) throw ValidationError("network has no buses");
        int slack_count = 0;
        for (std::size_t i = 0; i < buses_.size(); ++i) {
            const Bus& b = buses_[i];
            if (!index_.emplace(b.id, static_cast<int>(i)).second)
                throw ValidationError("duplicate bus id " + std::to_string(b.id));
            if (b.kind == BusKind::slack) {
                ++slack_count;
                slack_index_ = static_cast<int>(i);
            }
            if (b.kind == BusKind::pq) {
                if (b.v_setpoint)
                    throw ValidationError("pq bus " + std::to_string(b.id) +
                                          " must not carry a voltage setpoint");
            } else {
                if (!b.v_setpoint || *b.v_setpoint <= 0.0)
                    throw ValidationError("bus " + std::to_string(b.id) +
                                          " needs a positive voltage setpoint");
            }
            if (b.base_load_p < 0.0)
                throw ValidationError("bus " + std::to_string(b.id) +
                                      " has negative active load (consumption is positive)");
        }
        if (slack_count != 1)
            throw ValidationError("expected exactly one slack bus, found " +
                                  std::to_string(slack_count));
        for (const auto& br : branches_) {
            if (!has_bus(br.from) || !has_bus(br.to))
                throw ValidationError("branch " + std::to_string(br.from) + "-" +
                                      std::to_string(br.to) + " references a missing bus");
            if (br.r < 0.0)
                throw ValidationError("branch " + std::to_string(br.from) + "-" +
                                      std::to_string(br.to) + " has negative resistance");
            if (br.r == 0.0 && br.x == 0.0)
                throw ValidationError("branch " + std::to_string(br.from) + "-" +
                                      std::to_string(br.to) + " has zero impedance");
            if (br.tap != 1.0)
                throw ValidationError("off-nominal taps are not supported");
        }
        for (const auto& g : generators_) {
            if (!has_bus(g.bus))
                throw ValidationError("generator references missing bus " +
                                      std::to_string(g.bus));
            if (bus(g.bus).kind == BusKind::pq)
                throw ValidationError("generator bus " + std::to_string(g.bus) +
                                      " must be slack or pv");
            if (g.base_p < 0.0)
                throw ValidationError("generator at bus " + std::to_string(g.bus) +
                                      " has negative base output");
        }
        check_connected();
    }

    void check_connected() const {
        const int n = size();
        std::vector<char> seen(n, 0);
        std::vector<int> stack{0};
        seen[0] = 1;
        std::vector<std::vector<int>> adj(n);
        for (const auto& br : branches_) {
            const int i = index_.at(br.from);
            const int j = index_.at(br.to);
            adj[i].push_back(j);
            adj[j].push_back(i);
        }
        int visited = 0;
        while (!stack.empty()) {
            const int u = stack.back();
            stack.pop_back();
            ++visited;
            for (int v : adj[u])
                if (!seen[v]) {
                    seen[v] = 1;
                    stack.push_back(v);
                }
        }
        if (visited != n) throw ValidationError("network graph is not connected");
    }

    std::vector<Bus> buses_;
    std::vector<Branch> branches_;
    std::vector<Generator> generators_;
    double mva_base_;
    std::unordered_map<int, int> index_;
    int slack_index_ = -1;
};

/// Replaces the load at spec.attach_bus with spec.replicas identical radial
/// feeders. New buses are named "D{k}-feeder{n}" and take ids following the
/// current maximum. Emits a warning to stderr when the replica loads do not
/// add up to the replaced load.
inline Network attach_feeders(const Network& net, const FeederSpec& spec) {
    if (spec.replicas < 1)
        throw ValidationError("feeder replicas must be >= 1");
    const Bus& attach = net.bus(spec.attach_bus); // throws for unknown bus

    const Complex replaced = attach.base_load();
    const Complex added = static_cast<double>(spec.replicas) * (spec.load_d2 + spec.load_d3);
    if (std::abs(replaced - added) > 1e-9)
        std::cerr << "warning: feeder loads (" << added.real() << "+" << added.imag()
                  << "j) do not match the replaced load at bus " << spec.attach_bus
                  << " (" << replaced.real() << "+" << replaced.imag() << "j)\n";

    std::vector<Bus> buses = net.buses();
    std::vector<Branch> branches = net.branches();

    for (auto& b : buses)
        if (b.id == spec.attach_bus) {
            b.base_load_p = 0.0;
            b.base_load_q = 0.0;
        }

    int next_id = 0;
    for (const auto& b : buses) next_id = std::max(next_id, b.id);
    ++next_id;

    for (int rep = 1; rep <= spec.replicas; ++rep) {
        const int d1 = next_id++;
        const int d2 = next_id++;
        const int d3 = next_id++;
        const std::string suffix = "-feeder" + std::to_string(rep);
        buses.push_back({d1, BusKind::pq, std::nullopt, 0.0, 0.0, "D1" + suffix});
        buses.push_back({d2, BusKind::pq, std::nullopt, spec.load_d2.real(),
                         spec.load_d2.imag(), "D2" + suffix});
        buses.push_back({d3, BusKind::pq, std::nullopt, spec.load_d3.real(),
                         spec.load_d3.imag(), "D3" + suffix});
        branches.push_back({spec.attach_bus, d1, spec.z_d0_d1.real(), spec.z_d0_d1.imag(), 0.0, 1.0});
        branches.push_back({d1, d2, spec.z_d1_d2.real(), spec.z_d1_d2.imag(), 0.0, 1.0});
        branches.push_back({d1, d3, spec.z_d1_d3.real(), spec.z_d1_d3.imag(), 0.0, 1.0});
    }

    return Network(std::move(buses), std::move(branches), net.generators(), net.mva_base());
}

} // namespace tddi
