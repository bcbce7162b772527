#pragma once

#include <cstdint>
#include <cstdio>
#include <sstream>
#include <string>

#include "arcplant/identification.hpp"
#include "arcplant/io/csv.hpp"
#include "arcplant/sim_engine.hpp"

namespace arcplant::io {

inline std::string hex64(std::uint64_t x) {
    char buf[19];
    std::snprintf(buf, sizeof buf, "0x%016llx", static_cast<unsigned long long>(x));
    return buf;
}

/// Single-line key=value record.
inline std::string step_record_line(const ident::StepIdResult& r, double u_step, std::size_t n) {
    std::ostringstream out;
    out << "K_hat=" << format_double(r.K_hat) << " T_hat=" << format_double(r.T_hat)
        << " method=" << ident::to_string(r.method) << " residual_rms=" << format_double(r.residual_rms)
        << " K_crossing=" << format_double(r.K_crossing) << " T_crossing=" << format_double(r.T_crossing)
        << " u_step=" << format_double(u_step) << " n_samples=" << n;
    return out.str();
}

inline std::string step_report(const ident::StepIdResult& r, double u_step, std::size_t n) {
    std::ostringstream out;
    out << "Step identification (velocity channel)\n"
        << "  u_step        " << format_double(u_step) << " V\n"
        << "  samples       " << n << '\n'
        << "  K_hat         " << format_double(r.K_hat) << " mm/(s*V)\n"
        << "  T_hat         " << format_double(r.T_hat) << " s\n"
        << "  method        " << ident::to_string(r.method) << '\n'
        << "  residual_rms  " << format_double(r.residual_rms) << " mm/s\n"
        << "  63.2% rule    K=" << format_double(r.K_crossing) << " T=" << format_double(r.T_crossing) << '\n'
        << step_record_line(r, u_step, n) << '\n';
    return out.str();
}

inline std::string fit_record_line(const ident::FitReport& r) {
    std::ostringstream out;
    out << "fit_percent=" << format_double(r.fit_percent) << " rmse=" << format_double(r.rmse)
        << " n_samples=" << r.n_samples << " channel=" << ident::to_string(r.channel)
        << " offset_s=" << format_double(r.offset_s);
    return out.str();
}

inline std::string fit_report(const ident::FitReport& r) {
    std::ostringstream out;
    out << "Model validation\n"
        << "  channel       " << ident::to_string(r.channel) << '\n'
        << "  samples       " << r.n_samples << '\n'
        << "  fit           " << format_double(r.fit_percent) << " %  (100*(1 - |y - y_model| / |y - mean(y)|))\n"
        << "  rmse          " << format_double(r.rmse) << '\n'
        << "  time offset   " << format_double(r.offset_s) << " s\n"
        << fit_record_line(r) << '\n';
    return out.str();
}

/// Sidecar for a trajectory CSV: run statistics followed by the resolved
/// configuration as comment lines.
inline std::string trajectory_metadata(const sim::Trajectory& traj, sim::Integrator integrator,
                                       const std::string& resolved_config) {
    std::ostringstream out;
    out << "scenario_hash=" << hex64(traj.scenario_hash) << '\n'
        << "integrator=" << sim::to_string(integrator) << '\n'
        << "samples=" << traj.samples.size() << '\n'
        << "clamp_events=" << traj.clamp_events << '\n'
        << "clamped_time_s=" << format_double(traj.clamped_time) << '\n'
        << "# --- resolved configuration ---\n";
    std::istringstream cfg(resolved_config);
    std::string line;
    while (std::getline(cfg, line)) out << "# " << line << '\n';
    return out.str();
}

}  // namespace arcplant::io
