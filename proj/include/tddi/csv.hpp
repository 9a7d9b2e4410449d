#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <ostream>
#include <span>
#include <string>

#include "tddi/scenario.hpp"

namespace tddi {

/// 9 significant digits: above solver tolerance, stable across runs, and the
/// normative float format of every CSV produced here.
inline std::string format_float(double value) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.9g", value);
    return buf;
}

inline void write_trace_csv(std::ostream& os, const Network& net, const PVTrace& trace) {
    os << "lambda,total_load_mw,bus,v_mag,v_ang_deg\n";
    for (const auto& pt : trace.points) {
        for (int i = 0; i < net.size(); ++i) {
            const Complex v = pt.solution.v[i];
            os << format_float(pt.lambda) << ',' << format_float(pt.total_load_mw) << ','
               << net.buses()[i].id << ',' << format_float(std::abs(v)) << ','
               << format_float(std::arg(v) * 180.0 / std::numbers::pi) << '\n';
        }
    }
}

inline void write_indices_csv(std::ostream& os, const ScenarioResult& result) {
    os << "scenario,bus,total_load_mw,vsi,tddi,z_t_mag,z_d_mag,z_l_mag,e_th_mag,"
          "classification\n";
    for (const auto& [bus, recs] : result.records) {
        for (const auto& r : recs) {
            os << result.name << ',' << bus << ','
               << format_float(r.stability.total_load_mw) << ','
               << format_float(r.stability.vsi) << ',' << format_float(r.stability.tddi)
               << ',' << format_float(std::abs(r.equivalent.z_t)) << ','
               << format_float(std::abs(r.equivalent.z_d)) << ','
               << format_float(std::abs(r.equivalent.z_l)) << ','
               << format_float(std::abs(r.equivalent.e_th)) << ','
               << to_string(r.stability.classification) << '\n';
        }
    }
}

inline void write_snapshots_csv(std::ostream& os, std::span<const PhasorSnapshot> snaps) {
    os << "instant,total_load_mw,v_sub_re,v_sub_im,v_dist_re,v_dist_im,i_dist_re,"
          "i_dist_im\n";
    for (const auto& s : snaps) {
        os << s.instant << ',' << format_float(s.total_load_mw) << ','
           << format_float(s.v_sub.real()) << ',' << format_float(s.v_sub.imag()) << ','
           << format_float(s.v_dist.real()) << ',' << format_float(s.v_dist.imag()) << ','
           << format_float(s.i_dist.real()) << ',' << format_float(s.i_dist.imag())
           << '\n';
    }
}

/// Writes via a temp file plus rename so readers never observe partial output.
inline void write_file_atomic(const std::filesystem::path& path,
                              const std::string& content) {
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw ConfigError("cannot write file: " + tmp.string());
        out << content;
    }
    std::filesystem::rename(tmp, path);
}

} // namespace tddi
