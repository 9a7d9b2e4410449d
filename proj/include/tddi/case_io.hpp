#pragma once

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "tddi/network.hpp"

namespace tddi {

namespace detail {

inline double require_number(const nlohmann::json& obj, const char* field,
                             const std::string& where) {
    if (!obj.contains(field))
        throw ParseError(where + ": missing field '" + field + "'");
    const auto& v = obj.at(field);
    if (!v.is_number())
        throw ParseError(where + ": field '" + field + "' must be a number");
    return v.get<double>();
}

inline int require_int(const nlohmann::json& obj, const char* field,
                       const std::string& where) {
    if (!obj.contains(field))
        throw ParseError(where + ": missing field '" + field + "'");
    const auto& v = obj.at(field);
    if (!v.is_number_integer())
        throw ParseError(where + ": field '" + field + "' must be an integer");
    return v.get<int>();
}

inline Complex require_complex(const nlohmann::json& obj, const char* field,
                               const char* re_key, const char* im_key,
                               const std::string& where) {
    if (!obj.contains(field))
        throw ParseError(where + ": missing field '" + field + "'");
    const auto& v = obj.at(field);
    const std::string sub = where + "." + field;
    return {require_number(v, re_key, sub), require_number(v, im_key, sub)};
}

} // namespace detail

/// Parses the JSON case document. Field names are normative:
/// mva_base, buses[{id,kind,v_setpoint,p_load,q_load,name}],
/// branches[{from,to,r,x,b}], generators[{bus,p,v_setpoint}].
inline Network load_case(const std::string& source) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(source);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(std::string("case file: ") + e.what());
    }
    if (!doc.is_object()) throw ParseError("case file: top level must be an object");

    const double mva_base = detail::require_number(doc, "mva_base", "case");

    std::vector<Bus> buses;
    if (!doc.contains("buses") || !doc["buses"].is_array())
        throw ParseError("case file: missing 'buses' array");
    int n = 0;
    for (const auto& jb : doc["buses"]) {
        const std::string where = "buses[" + std::to_string(n++) + "]";
        Bus b;
        b.id = detail::require_int(jb, "id", where);
        const std::string kind = jb.value("kind", std::string{});
        if (kind == "slack") b.kind = BusKind::slack;
        else if (kind == "pv") b.kind = BusKind::pv;
        else if (kind == "pq") b.kind = BusKind::pq;
        else throw ParseError(where + ": kind must be slack|pv|pq, got '" + kind + "'");
        if (jb.contains("v_setpoint") && !jb["v_setpoint"].is_null())
            b.v_setpoint = jb["v_setpoint"].get<double>();
        b.base_load_p = detail::require_number(jb, "p_load", where);
        b.base_load_q = detail::require_number(jb, "q_load", where);
        b.name = jb.value("name", std::string{});
        buses.push_back(std::move(b));
    }

    std::vector<Branch> branches;
    if (!doc.contains("branches") || !doc["branches"].is_array())
        throw ParseError("case file: missing 'branches' array");
    n = 0;
    for (const auto& jb : doc["branches"]) {
        const std::string where = "branches[" + std::to_string(n++) + "]";
        Branch br;
        br.from = detail::require_int(jb, "from", where);
        br.to = detail::require_int(jb, "to", where);
        br.r = detail::require_number(jb, "r", where);
        br.x = detail::require_number(jb, "x", where);
        br.b_shunt = detail::require_number(jb, "b", where);
        branches.push_back(br);
    }

    std::vector<Generator> generators;
    if (!doc.contains("generators") || !doc["generators"].is_array())
        throw ParseError("case file: missing 'generators' array");
    n = 0;
    for (const auto& jg : doc["generators"]) {
        const std::string where = "generators[" + std::to_string(n++) + "]";
        Generator g;
        g.bus = detail::require_int(jg, "bus", where);
        g.base_p = detail::require_number(jg, "p", where);
        g.v_setpoint = detail::require_number(jg, "v_setpoint", where);
        generators.push_back(g);
    }

    return Network(std::move(buses), std::move(branches), std::move(generators), mva_base);
}

/// Canonical serialization; load_case(serialize_case(net)) round-trips.
inline std::string serialize_case(const Network& net) {
    nlohmann::json doc;
    doc["mva_base"] = net.mva_base();
    auto& jbuses = doc["buses"] = nlohmann::json::array();
    for (const auto& b : net.buses()) {
        nlohmann::json jb;
        jb["id"] = b.id;
        jb["kind"] = to_string(b.kind);
        if (b.v_setpoint) jb["v_setpoint"] = *b.v_setpoint;
        jb["p_load"] = b.base_load_p;
        jb["q_load"] = b.base_load_q;
        jb["name"] = b.name;
        jbuses.push_back(std::move(jb));
    }
    auto& jbranches = doc["branches"] = nlohmann::json::array();
    for (const auto& br : net.branches()) {
        jbranches.push_back({{"from", br.from}, {"to", br.to},
                             {"r", br.r}, {"x", br.x}, {"b", br.b_shunt}});
    }
    auto& jgens = doc["generators"] = nlohmann::json::array();
    for (const auto& g : net.generators()) {
        jgens.push_back({{"bus", g.bus}, {"p", g.base_p}, {"v_setpoint", g.v_setpoint}});
    }
    return doc.dump(2);
}

/// Feeder document: z_d0_d1 / z_d1_d2 / z_d1_d3 as {r,x} and
/// load_d2 / load_d3 as {p,q}. Attach bus and replica count come from the
/// caller (they are run parameters, not feeder data).
inline FeederSpec load_feeder(const std::string& source, int attach_bus, int replicas) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(source);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(std::string("feeder file: ") + e.what());
    }
    FeederSpec spec;
    spec.attach_bus = attach_bus;
    spec.replicas = replicas;
    spec.z_d0_d1 = detail::require_complex(doc, "z_d0_d1", "r", "x", "feeder");
    spec.z_d1_d2 = detail::require_complex(doc, "z_d1_d2", "r", "x", "feeder");
    spec.z_d1_d3 = detail::require_complex(doc, "z_d1_d3", "r", "x", "feeder");
    spec.load_d2 = detail::require_complex(doc, "load_d2", "p", "q", "feeder");
    spec.load_d3 = detail::require_complex(doc, "load_d3", "p", "q", "feeder");
    return spec;
}

inline std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open file: " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

/// Directory holding the bundled data files; the TDDI_DATA_DIR environment
/// variable overrides the build-time default.
inline std::filesystem::path data_dir() {
    if (const char* env = std::getenv("TDDI_DATA_DIR"); env && *env)
        return env;
#ifdef TDDI_BUNDLED_DATA_DIR
    return TDDI_BUNDLED_DATA_DIR;
#else
    return "data";
#endif
}

/// Maps builtin names (case9, fc1, fc2) to bundled files; anything else is
/// treated as a filesystem path.
inline std::filesystem::path resolve_data_file(const std::string& name) {
    if (std::filesystem::exists(name)) return name;
    std::string file = name;
    if (name == "case9") file = "case9.json";
    else if (name == "fc1") file = "fc1.feeder";
    else if (name == "fc2") file = "fc2.feeder";
    const auto path = data_dir() / file;
    if (!std::filesystem::exists(path))
        throw ConfigError("cannot resolve data file '" + name + "' (tried " +
                          path.string() + "); set TDDI_DATA_DIR or pass a path");
    return path;
}

inline Network load_case_file(const std::string& name_or_path) {
    return load_case(read_text_file(resolve_data_file(name_or_path)));
}

inline FeederSpec load_feeder_file(const std::string& name_or_path, int attach_bus,
                                   int replicas) {
    return load_feeder(read_text_file(resolve_data_file(name_or_path)), attach_bus,
                       replicas);
}

} // namespace tddi
