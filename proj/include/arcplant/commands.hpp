#pragma once

// The four CLI workflows (sweep, step, simulate, validate). Each writes its
// artifacts into the output directory and returns a printable summary; the
// dispatcher maps errors to the stable exit codes in errors.hpp.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "arcplant/arc_circuit.hpp"
#include "arcplant/errors.hpp"
#include "arcplant/identification.hpp"
#include "arcplant/io/csv.hpp"
#include "arcplant/io/reports.hpp"
#include "arcplant/io/scenario_file.hpp"
#include "arcplant/sim_engine.hpp"

namespace arcplant::cli {

enum class Command { Sweep, Step, Simulate, Validate };

inline constexpr long long kDefaultSweepPoints = 100;

struct Options {
    Command command = Command::Simulate;
    std::string config;
    std::optional<std::string> field;
    std::optional<std::string> out_dir;
    std::optional<sim::Integrator> integrator;
    std::optional<long long> n;
    std::optional<std::uint64_t> seed;  ///< ARCPLANT_SEED
    bool gnuplot = false;
};

struct RunArtifacts {
    std::vector<std::filesystem::path> files;
    std::string summary;
};

namespace detail {

inline std::filesystem::path write_file(const std::filesystem::path& path, const std::string& contents) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write '" + path.string() + "'");
    out << contents;
    if (!out) throw DataError("failed writing '" + path.string() + "'");
    return path;
}

inline io::ScenarioFile prepare(const Options& opts, std::ostream& log) {
    io::ScenarioFile file = io::load_scenario(opts.config);
    if (opts.out_dir) file.run.out_dir = *opts.out_dir;
    if (opts.integrator) file.run.integrator = *opts.integrator;
    if (opts.seed) file.scenario.seed = *opts.seed;
    for (const auto& w : file.warnings) log << "warning: " << w << '\n';
    std::error_code ec;
    std::filesystem::create_directories(file.run.out_dir, ec);
    if (ec) throw DataError("cannot create output directory '" + file.run.out_dir + "': " + ec.message());
    return file;
}

inline std::string trajectory_csv(const sim::Trajectory& traj) {
    std::ostringstream out;
    io::write_trajectory_csv(out, traj);
    return out.str();
}

inline std::string gnuplot_trajectory(const std::string& csv) {
    return "set datafile separator ','\n"
           "set key autotitle columnhead\n"
           "set xlabel 't [s]'\n"
           "set multiplot layout 3,1\n"
           "plot '" + csv + "' using 1:3 with lines\n"
           "plot '" + csv + "' using 1:6 with lines\n"
           "plot '" + csv + "' using 1:7 with lines\n"
           "unset multiplot\n";
}

}  // namespace detail

inline RunArtifacts cmd_sweep(const Options& opts, std::ostream& log) {
    const long long n = opts.n.value_or(kDefaultSweepPoints);
    if (n < 2) throw ConfigError("usage: --n must be at least 2 (got " + std::to_string(n) + ")");
    const io::ScenarioFile file = detail::prepare(opts, log);
    const auto points = arc::characteristic_sweep(file.scenario.circuit, static_cast<std::size_t>(n));

    const std::filesystem::path dir(file.run.out_dir);
    std::ostringstream csv;
    io::write_sweep_csv(csv, points);
    RunArtifacts art;
    art.files.push_back(detail::write_file(dir / "sweep.csv", csv.str()));
    art.files.push_back(detail::write_file(dir / "resolved.ini", io::echo_scenario(file)));
    if (opts.gnuplot) {
        art.files.push_back(detail::write_file(dir / "sweep.gp",
                                               "set datafile separator ','\nset key autotitle columnhead\n"
                                               "set xlabel 'L [mm]'\nset multiplot layout 2,1\n"
                                               "plot 'sweep.csv' using 1:3 with lines\n"
                                               "plot 'sweep.csv' using 1:4 with lines\nunset multiplot\n"));
    }
    const auto range = arc::valid_arc_range(file.scenario.circuit);
    art.summary = "sweep: " + std::to_string(points.size()) + " points on [0, " + io::format_double(range.L_max) +
                  ") mm\n";
    return art;
}

inline RunArtifacts cmd_simulate(const Options& opts, std::ostream& log) {
    const io::ScenarioFile file = detail::prepare(opts, log);
    const sim::Trajectory traj = sim::run(file.scenario, file.controller, file.run.integrator);
    const std::string echo = io::echo_scenario(file);

    const std::filesystem::path dir(file.run.out_dir);
    RunArtifacts art;
    art.files.push_back(detail::write_file(dir / "trajectory.csv", detail::trajectory_csv(traj)));
    art.files.push_back(
        detail::write_file(dir / "trajectory.meta", io::trajectory_metadata(traj, file.run.integrator, echo)));
    art.files.push_back(detail::write_file(dir / "resolved.ini", echo));
    if (opts.gnuplot) {
        art.files.push_back(detail::write_file(dir / "trajectory.gp", detail::gnuplot_trajectory("trajectory.csv")));
    }
    const auto& last = traj.samples.back();
    art.summary = "simulate: " + std::to_string(traj.samples.size()) + " samples, final L=" +
                  io::format_double(last.L) + " mm, I=" + io::format_double(last.I) + " A, Z=" +
                  io::format_double(last.Z) + " ohm, clamp_events=" + std::to_string(traj.clamp_events) + "\n";
    return art;
}

inline RunArtifacts cmd_step(const Options& opts, std::ostream& log) {
    const io::ScenarioFile file = detail::prepare(opts, log);
    const sim::Scenario& sc = file.scenario;

    double u_step = 0.0;
    double t0 = 0.0;
    if (const auto* step = std::get_if<sim::StepInput>(&sc.input)) {
        u_step = step->u;
        t0 = step->t0;
    } else if (const auto* constant = std::get_if<sim::ConstantInput>(&sc.input)) {
        u_step = constant->u;
    } else {
        throw ConfigError(opts.config + ": step command needs [input] program = step or constant");
    }
    if (u_step == 0.0) throw ConfigError(opts.config + ": step magnitude must be nonzero");

    const sim::Trajectory traj = sim::run(sc, file.controller, file.run.integrator);

    ident::StepRecord rec;
    rec.u_step = u_step;
    rec.channel = ident::Channel::Velocity;
    const double slack = 1e-9 * sc.dt;
    for (const auto& s : traj.samples) {
        if (s.t + slack >= t0) {
            rec.t.push_back(s.t);
            rec.y.push_back(s.v);
        }
    }
    if (file.run.v_noise_sigma > 0.0) {
        std::mt19937_64 rng(sc.seed);
        std::normal_distribution<double> noise(0.0, file.run.v_noise_sigma);
        for (double& y : rec.y) y += noise(rng);
    }
    const ident::StepIdResult id = ident::identify_step(rec);
    const std::string report = io::step_report(id, u_step, rec.y.size());
    const std::string echo = io::echo_scenario(file);

    const std::filesystem::path dir(file.run.out_dir);
    RunArtifacts art;
    art.files.push_back(detail::write_file(dir / "trajectory.csv", detail::trajectory_csv(traj)));
    art.files.push_back(
        detail::write_file(dir / "trajectory.meta", io::trajectory_metadata(traj, file.run.integrator, echo)));
    std::ostringstream record_csv;
    io::write_field_series(record_csv, ident::FieldSeries{rec.t, rec.y, ident::Channel::Velocity});
    art.files.push_back(detail::write_file(dir / "step_record.csv", record_csv.str()));
    art.files.push_back(detail::write_file(dir / "step_report.txt", report));
    art.files.push_back(detail::write_file(dir / "resolved.ini", echo));
    if (opts.gnuplot) {
        art.files.push_back(detail::write_file(dir / "trajectory.gp", detail::gnuplot_trajectory("trajectory.csv")));
    }
    art.summary = report;
    return art;
}

inline RunArtifacts cmd_validate(const Options& opts, std::ostream& log) {
    if (!opts.field) throw ConfigError("usage: validate requires --field <csv>");
    const io::ScenarioFile file = detail::prepare(opts, log);
    const ident::FieldSeries field = io::read_field_file(*opts.field);

    ident::ValidationOptions vopts;
    vopts.align = file.run.align;
    vopts.window_s = file.run.align_window_s;
    vopts.integrator = file.run.integrator;
    const auto outcome = ident::validate_against_field_detailed(field, file.scenario, file.controller, vopts);
    const std::string report = io::fit_report(outcome.report);

    const std::filesystem::path dir(file.run.out_dir);
    RunArtifacts art;
    std::ostringstream cmp;
    cmp << "t_s,measured,modeled\n";
    for (std::size_t i = 0; i < field.t.size(); ++i) {
        cmp << io::format_double(field.t[i]) << ',' << io::format_double(field.y[i]) << ','
            << io::format_double(outcome.modeled[i]) << '\n';
    }
    art.files.push_back(detail::write_file(dir / "validation.csv", cmp.str()));
    art.files.push_back(detail::write_file(dir / "fit_report.txt", report));
    art.files.push_back(detail::write_file(dir / "resolved.ini", io::echo_scenario(file)));
    if (opts.gnuplot) {
        art.files.push_back(detail::write_file(dir / "validation.gp",
                                               "set datafile separator ','\nset key autotitle columnhead\n"
                                               "set xlabel 't [s]'\n"
                                               "plot 'validation.csv' using 1:2 with points, '' using 1:3 with lines\n"));
    }
    art.summary = report;
    return art;
}

inline RunArtifacts execute(const Options& opts, std::ostream& log) {
    switch (opts.command) {
        case Command::Sweep: return cmd_sweep(opts, log);
        case Command::Step: return cmd_step(opts, log);
        case Command::Simulate: return cmd_simulate(opts, log);
        case Command::Validate: return cmd_validate(opts, log);
    }
    throw ConfigError("unknown command");
}

/// Runs a command and converts failures into exit codes.
inline int dispatch(const Options& opts, std::ostream& out, std::ostream& err) {
    try {
        const RunArtifacts art = execute(opts, err);
        out << art.summary;
        for (const auto& f : art.files) out << "wrote " << f.string() << '\n';
        return exit_code::kSuccess;
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << '\n';
        return exit_code::kConfig;
    } catch (const DomainError& e) {
        err << "domain error: " << e.what() << '\n';
        return exit_code::kDomain;
    } catch (const DataError& e) {
        err << "data error: " << e.what() << '\n';
        return exit_code::kData;
    }
}

}  // namespace arcplant::cli
