#pragma once

// Scenario configuration: a strict INI-style file with the sections
// [hydraulics], [circuit], [input], [controller] and [run].
//
//   # comment            ; comment
//   [circuit]
//   U1 = 35000
//   beta_schedule = 0:12, 2.5:8     (time:value pairs)
//
// Unknown sections and keys are rejected with file:line messages. The loader
// resolves every default, stage preset and tap lookup so that echo_scenario()
// writes a self-contained file that loads back to an identical ScenarioFile.

#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "arcplant/arc_circuit.hpp"
#include "arcplant/errors.hpp"
#include "arcplant/hydraulics.hpp"
#include "arcplant/io/csv.hpp"
#include "arcplant/sim_engine.hpp"

namespace arcplant::io {

struct IniValue {
    std::string text;
    int line = 0;
};

struct IniSection {
    int line = 0;
    std::map<std::string, IniValue> values;
};

struct IniDocument {
    std::string source;
    std::map<std::string, IniSection> sections;

    static IniDocument parse(std::istream& in, const std::string& source) {
        IniDocument doc;
        doc.source = source;
        IniSection* current = nullptr;
        std::string line;
        int line_no = 0;
        auto fail = [&](const std::string& msg) { throw ConfigError(source + ":" + std::to_string(line_no) + ": " + msg); };
        while (std::getline(in, line)) {
            ++line_no;
            std::string_view body = trim(line);
            if (body.empty() || body.front() == '#' || body.front() == ';') continue;
            if (body.front() == '[') {
                if (body.back() != ']') fail("malformed section header");
                const std::string name(trim(body.substr(1, body.size() - 2)));
                auto [it, inserted] = doc.sections.try_emplace(name);
                if (!inserted) fail("duplicate section [" + name + "]");
                it->second.line = line_no;
                current = &it->second;
                continue;
            }
            const auto eq = body.find('=');
            if (eq == std::string_view::npos) fail("expected 'key = value'");
            if (current == nullptr) fail("key outside of any section");
            const std::string key(trim(body.substr(0, eq)));
            std::string_view value = trim(body.substr(eq + 1));
            // Trailing comments.
            if (const auto hash = value.find(" #"); hash != std::string_view::npos) value = trim(value.substr(0, hash));
            if (key.empty()) fail("empty key");
            if (!current->values.try_emplace(key, IniValue{std::string(value), line_no}).second) {
                fail("duplicate key '" + key + "'");
            }
        }
        return doc;
    }
};

struct RunSettings {
    double v_noise_sigma = 0.0;   ///< mm/s, added to the identified velocity record
    bool align = true;
    double align_window_s = 0.5;
    sim::Integrator integrator = sim::Integrator::ExactZoh;
    std::string out_dir = ".";

    bool operator==(const RunSettings&) const = default;
};

struct ScenarioFile {
    sim::Scenario scenario;
    sim::ControllerConfig controller;
    RunSettings run;
    std::optional<hydraulics::HydraulicParams> hydraulics;  ///< physical parameters, when given
    std::optional<hydraulics::PlantLTI> direct_lti;         ///< explicit K, T, when given
    std::optional<arc::MeltingStage> stage;
    std::optional<int> tap;
    std::vector<std::string> warnings;

    bool operator==(const ScenarioFile&) const = default;
};

namespace detail {

class SectionReader {
public:
    SectionReader(const IniDocument& doc, std::string name, std::set<std::string> allowed, bool required)
        : doc_(doc), name_(std::move(name)) {
        auto it = doc.sections.find(name_);
        if (it == doc.sections.end()) {
            if (required) throw ConfigError(doc.source + ": missing section [" + name_ + "]");
            return;
        }
        section_ = &it->second;
        for (const auto& [key, value] : section_->values) {
            if (!allowed.count(key)) {
                throw ConfigError(doc.source + ":" + std::to_string(value.line) + ": unknown key '" + key + "' in [" +
                                  name_ + "]");
            }
        }
    }

    bool present() const { return section_ != nullptr; }
    bool has(const std::string& key) const { return section_ && section_->values.count(key); }

    [[noreturn]] void fail(const std::string& key, const std::string& msg) const {
        const int line = has(key) ? section_->values.at(key).line : (section_ ? section_->line : 0);
        throw ConfigError(doc_.source + ":" + std::to_string(line) + ": [" + name_ + "] " + key + ": " + msg);
    }

    [[noreturn]] void missing(const std::string& key) const {
        const int line = section_ ? section_->line : 0;
        throw ConfigError(doc_.source + ":" + std::to_string(line) + ": missing required key '" + key + "' in [" +
                          name_ + "]");
    }

    std::optional<std::string> text(const std::string& key) const {
        if (!has(key)) return std::nullopt;
        return section_->values.at(key).text;
    }

    std::optional<double> number(const std::string& key) const {
        auto t = text(key);
        if (!t) return std::nullopt;
        auto v = parse_double(*t);
        if (!v || !std::isfinite(*v)) fail(key, "expected a finite number, got '" + *t + "'");
        return v;
    }

    double number_or(const std::string& key, double fallback) const { return number(key).value_or(fallback); }

    double required_number(const std::string& key) const {
        auto v = number(key);
        if (!v) missing(key);
        return *v;
    }

    std::optional<long long> integer(const std::string& key) const {
        auto v = number(key);
        if (!v) return std::nullopt;
        if (*v != std::floor(*v) || std::abs(*v) > 9.0e15) fail(key, "expected an integer");
        return static_cast<long long>(*v);
    }

    std::optional<std::uint64_t> unsigned_integer(const std::string& key) const {
        auto t = text(key);
        if (!t) return std::nullopt;
        std::uint64_t v = 0;
        const auto res = std::from_chars(t->data(), t->data() + t->size(), v);
        if (res.ec != std::errc{} || res.ptr != t->data() + t->size()) fail(key, "expected a non-negative integer");
        return v;
    }

    std::optional<bool> boolean(const std::string& key) const {
        auto t = text(key);
        if (!t) return std::nullopt;
        if (*t == "true" || *t == "yes" || *t == "1") return true;
        if (*t == "false" || *t == "no" || *t == "0") return false;
        fail(key, "expected true or false, got '" + *t + "'");
    }

    std::optional<sim::PiecewiseConstant> schedule(const std::string& key) const {
        auto t = text(key);
        if (!t) return std::nullopt;
        std::vector<sim::Breakpoint> points;
        for (auto item : split(*t, ',')) {
            const auto colon = item.find(':');
            if (colon == std::string_view::npos) fail(key, "expected 'time:value' pairs");
            auto at = parse_double(item.substr(0, colon));
            auto value = parse_double(item.substr(colon + 1));
            if (!at || !value) fail(key, "malformed pair '" + std::string(item) + "'");
            points.push_back({*at, *value});
        }
        try {
            return sim::PiecewiseConstant(std::move(points));
        } catch (const ConfigError& e) {
            fail(key, e.what());
        }
    }

private:
    const IniDocument& doc_;
    std::string name_;
    const IniSection* section_ = nullptr;
};

inline std::string format_schedule(const sim::PiecewiseConstant& pc) {
    std::string out;
    for (const auto& p : pc.points()) {
        if (!out.empty()) out += ", ";
        out += format_double(p.t) + ":" + format_double(p.value);
    }
    return out;
}

/// Rethrows library validation errors with the file name attached.
template <typename F>
void with_source(const std::string& source, F&& f) {
    try {
        f();
    } catch (const ConfigError& e) {
        throw ConfigError(source + ": " + e.what());
    }
}

}  // namespace detail

inline ScenarioFile parse_scenario(std::istream& in, const std::string& source,
                                   const std::filesystem::path& base_dir = {}) {
    const IniDocument doc = IniDocument::parse(in, source);
    static const std::set<std::string> known{"hydraulics", "circuit", "input", "controller", "run"};
    for (const auto& [name, section] : doc.sections) {
        if (!known.count(name)) {
            throw ConfigError(source + ":" + std::to_string(section.line) + ": unknown section [" + name + "]");
        }
    }

    ScenarioFile file;

    // [hydraulics]
    {
        detail::SectionReader hy(doc, "hydraulics", {"K", "T", "rho", "g", "m", "A", "c", "k1", "k2"}, true);
        if (hy.has("K") != hy.has("T")) hy.fail(hy.has("K") ? "T" : "K", "K and T must be given together");
        if (hy.has("K")) {
            file.direct_lti = hydraulics::PlantLTI{hy.required_number("K"), hy.required_number("T")};
            detail::with_source(source, [&] { file.direct_lti->validate(); });
        }
        const bool physical = hy.has("k1") || hy.has("k2") || hy.has("rho") || hy.has("g") || hy.has("m") ||
                              hy.has("A") || hy.has("c");
        if (physical) {
            hydraulics::HydraulicParams h;
            h.rho = hy.number_or("rho", h.rho);
            h.g = hy.number_or("g", h.g);
            h.m = hy.number_or("m", h.m);
            h.A = hy.number_or("A", h.A);
            h.c = hy.number_or("c", h.c);
            h.k1 = hy.required_number("k1");
            h.k2 = hy.required_number("k2");
            file.hydraulics = h;
        }
        if (!file.direct_lti && !file.hydraulics) {
            hy.missing("K, T (or k1, k2)");
        }
        if (file.direct_lti) {
            file.scenario.lti = *file.direct_lti;
            if (file.hydraulics) {
                const auto derived = hydraulics::derive_lti(*file.hydraulics);
                const double dk = std::abs(derived.K - file.direct_lti->K) / file.direct_lti->K;
                const double dT = std::abs(derived.T - file.direct_lti->T) / file.direct_lti->T;
                if (dk > 0.01 || dT > 0.01) {
                    file.warnings.push_back("explicit K=" + format_double(file.direct_lti->K) + ", T=" +
                                            format_double(file.direct_lti->T) +
                                            " disagree with the hydraulic parameters (K=" + format_double(derived.K) +
                                            ", T=" + format_double(derived.T) + ") by more than 1%; using K, T");
                }
            }
        } else {
            file.scenario.lti = hydraulics::derive_lti(*file.hydraulics);
        }
    }

    // [circuit]
    {
        detail::SectionReader ci(doc, "circuit",
                                 {"U1", "kT", "Xr", "XT", "X2", "R2", "alpha", "beta", "stage", "tap", "tap_table",
                                  "E2", "beta_schedule"},
                                 true);
        arc::CircuitParams& p = file.scenario.circuit;
        p.U1 = ci.required_number("U1");
        p.kT = ci.required_number("kT");
        p.X2 = ci.number_or("X2", p.X2);
        p.R2 = ci.number_or("R2", p.R2);
        p.alpha = ci.number_or("alpha", p.alpha);
        if (ci.has("E2")) p.E2 = ci.number("E2");

        if (auto stage_name = ci.text("stage")) {
            file.stage = arc::parse_stage(*stage_name);
            if (!file.stage) ci.fail("stage", "expected melting, oxidization or reviving");
        }
        if (file.stage) {
            arc::MeltingStagePreset preset = arc::MeltingStagePreset::of(*file.stage);
            if (auto beta = ci.number("beta")) {
                preset.beta = *beta;
                try {
                    preset.validate();
                } catch (const ConfigError& e) {
                    ci.fail("beta", e.what());
                }
            }
            p.beta = preset.beta;
        } else {
            p.beta = ci.required_number("beta");
        }

        if (auto tap = ci.integer("tap")) {
            if (*tap <= 0) ci.fail("tap", "tap index must be a positive integer");
            file.tap = static_cast<int>(*tap);
        }
        if (auto table_path = ci.text("tap_table")) {
            if (!file.tap) ci.missing("tap");
            if (ci.has("Xr") || ci.has("XT")) ci.fail("tap_table", "give either tap_table or Xr/XT, not both");
            std::filesystem::path path(*table_path);
            if (path.is_relative()) path = base_dir / path;
            const arc::TapTable table = read_tap_table_file(path.string());
            try {
                p = p.with_taps(table.at(*file.tap));
            } catch (const ConfigError& e) {
                ci.fail("tap", e.what());
            }
        } else {
            p.Xr = ci.number_or("Xr", 0.0);
            p.XT = ci.number_or("XT", 0.0);
        }
        if (auto sched = ci.schedule("beta_schedule")) file.scenario.beta_schedule = *sched;
        detail::with_source(source, [&] { p.validate(); });
    }

    // [input]
    {
        detail::SectionReader in_sec(doc, "input", {"program", "u", "t0", "schedule", "disturbance"}, true);
        const auto program = in_sec.text("program");
        if (!program) in_sec.missing("program");
        auto forbid = [&](std::initializer_list<const char*> keys) {
            for (const char* k : keys) {
                if (in_sec.has(k)) in_sec.fail(k, "not used by program '" + *program + "'");
            }
        };
        if (*program == "constant") {
            forbid({"t0", "schedule"});
            file.scenario.input = sim::ConstantInput{in_sec.required_number("u")};
        } else if (*program == "step") {
            forbid({"schedule"});
            file.scenario.input = sim::StepInput{in_sec.required_number("u"), in_sec.number_or("t0", 0.0)};
        } else if (*program == "schedule") {
            forbid({"u", "t0"});
            auto sched = in_sec.schedule("schedule");
            if (!sched) in_sec.missing("schedule");
            file.scenario.input = sim::ScheduleInput{*sched};
        } else if (*program == "closed_loop") {
            forbid({"u", "t0", "schedule"});
            file.scenario.input = sim::ClosedLoopInput{};
        } else {
            in_sec.fail("program", "expected constant, step, schedule or closed_loop");
        }
        if (auto dist = in_sec.schedule("disturbance")) file.scenario.disturbance = *dist;
    }

    // [controller]
    {
        detail::SectionReader co(doc, "controller",
                                 {"kind", "kp", "ki", "setpoint_ohm", "u_min", "u_max", "anti_windup"}, false);
        sim::ControllerConfig& c = file.controller;
        if (auto kind = co.text("kind")) {
            if (*kind == "none") c.kind = sim::ControllerKind::None;
            else if (*kind == "p") c.kind = sim::ControllerKind::P;
            else if (*kind == "pi") c.kind = sim::ControllerKind::PI;
            else co.fail("kind", "expected none, p or pi");
        }
        c.kp = co.number_or("kp", c.kp);
        c.ki = co.number_or("ki", c.ki);
        c.setpoint = co.number_or("setpoint_ohm", c.setpoint);
        c.u_min = co.number_or("u_min", c.u_min);
        c.u_max = co.number_or("u_max", c.u_max);
        c.anti_windup = co.boolean("anti_windup").value_or(c.anti_windup);
        if (c.kind != sim::ControllerKind::None && !co.has("setpoint_ohm")) co.missing("setpoint_ohm");
        detail::with_source(source, [&] { c.validate(); });
    }

    // [run]
    {
        detail::SectionReader ru(doc, "run",
                                 {"dt", "t_end", "L0", "seed", "decimation", "z_noise_sigma", "v_noise_sigma", "align",
                                  "align_window_s", "integrator", "out_dir"},
                                 true);
        sim::Scenario& sc = file.scenario;
        sc.dt = ru.required_number("dt");
        sc.t_end = ru.required_number("t_end");
        sc.L0 = ru.required_number("L0");
        if (auto seed = ru.unsigned_integer("seed")) sc.seed = *seed;
        if (auto dec = ru.integer("decimation")) sc.decimation = static_cast<int>(*dec);
        sc.z_noise_sigma = ru.number_or("z_noise_sigma", 0.0);
        file.run.v_noise_sigma = ru.number_or("v_noise_sigma", 0.0);
        if (file.run.v_noise_sigma < 0.0) ru.fail("v_noise_sigma", "must be >= 0");
        file.run.align = ru.boolean("align").value_or(true);
        file.run.align_window_s = ru.number_or("align_window_s", 0.5);
        if (file.run.align_window_s < 0.0) ru.fail("align_window_s", "must be >= 0");
        if (auto integ = ru.text("integrator")) {
            if (*integ == "zoh") file.run.integrator = sim::Integrator::ExactZoh;
            else if (*integ == "rk4") file.run.integrator = sim::Integrator::Rk4;
            else ru.fail("integrator", "expected zoh or rk4");
        }
        if (auto dir = ru.text("out_dir")) file.run.out_dir = *dir;
    }

    detail::with_source(source, [&] { sim::validate(file.scenario, file.controller); });
    return file;
}

inline ScenarioFile load_scenario(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config '" + path + "'");
    return parse_scenario(in, path, std::filesystem::path(path).parent_path());
}

/// Fully resolved configuration; loading it back yields an equal ScenarioFile.
inline std::string echo_scenario(const ScenarioFile& f) {
    std::ostringstream out;
    auto kv = [&](std::string_view key, const std::string& value) { out << key << " = " << value << '\n'; };
    auto num = [&](std::string_view key, double v) { kv(key, format_double(v)); };

    out << "# resolved scenario (arcplant)\n";
    out << "[hydraulics]\n";
    if (f.direct_lti) {
        num("K", f.direct_lti->K);
        num("T", f.direct_lti->T);
    }
    if (f.hydraulics) {
        const auto& h = *f.hydraulics;
        num("rho", h.rho);
        num("g", h.g);
        num("m", h.m);
        num("A", h.A);
        num("c", h.c);
        num("k1", h.k1);
        num("k2", h.k2);
    }

    const auto& sc = f.scenario;
    const auto& p = sc.circuit;
    out << "\n[circuit]\n";
    num("U1", p.U1);
    num("kT", p.kT);
    num("Xr", p.Xr);
    num("XT", p.XT);
    num("X2", p.X2);
    num("R2", p.R2);
    num("alpha", p.alpha);
    num("beta", p.beta);
    if (f.stage) kv("stage", std::string(arc::to_string(*f.stage)));
    if (f.tap) kv("tap", std::to_string(*f.tap));
    if (p.E2) num("E2", *p.E2);
    if (!sc.beta_schedule.empty()) kv("beta_schedule", detail::format_schedule(sc.beta_schedule));

    out << "\n[input]\n";
    std::visit(
        [&](const auto& in) {
            using T = std::decay_t<decltype(in)>;
            if constexpr (std::is_same_v<T, sim::ConstantInput>) {
                kv("program", "constant");
                num("u", in.u);
            } else if constexpr (std::is_same_v<T, sim::StepInput>) {
                kv("program", "step");
                num("u", in.u);
                num("t0", in.t0);
            } else if constexpr (std::is_same_v<T, sim::ScheduleInput>) {
                kv("program", "schedule");
                kv("schedule", detail::format_schedule(in.u));
            } else {
                kv("program", "closed_loop");
            }
        },
        sc.input);
    if (!sc.disturbance.empty()) kv("disturbance", detail::format_schedule(sc.disturbance));

    const auto& c = f.controller;
    out << "\n[controller]\n";
    kv("kind", std::string(sim::to_string(c.kind)));
    num("kp", c.kp);
    num("ki", c.ki);
    num("setpoint_ohm", c.setpoint);
    num("u_min", c.u_min);
    num("u_max", c.u_max);
    kv("anti_windup", c.anti_windup ? "true" : "false");

    out << "\n[run]\n";
    num("dt", sc.dt);
    num("t_end", sc.t_end);
    num("L0", sc.L0);
    kv("seed", std::to_string(sc.seed));
    kv("decimation", std::to_string(sc.decimation));
    num("z_noise_sigma", sc.z_noise_sigma);
    num("v_noise_sigma", f.run.v_noise_sigma);
    kv("align", f.run.align ? "true" : "false");
    num("align_window_s", f.run.align_window_s);
    kv("integrator", std::string(sim::to_string(f.run.integrator)));
    kv("out_dir", f.run.out_dir);
    return out.str();
}

}  // namespace arcplant::io
