#include <catch_amalgamated.hpp>

#include <cmath>
#include <limits>
#include <random>
#include <sstream>
#include <string>

#include "arcplant/io/csv.hpp"
#include "arcplant/io/reports.hpp"
#include "arcplant/io/scenario_file.hpp"

using namespace arcplant;
using namespace arcplant::io;
using Catch::Matchers::ContainsSubstring;

namespace {

const std::string kScenarios = ARCPLANT_SCENARIOS;

const char* const kMinimal = R"(
[hydraulics]
K = 15
T = 0.1

[circuit]
U1 = 35000
kT = 40.4
beta = 12
Xr = 5
XT = 3.2

[input]
program = step
u = 1

[run]
dt = 0.001
t_end = 1
L0 = 10
)";

ScenarioFile parse(const std::string& text, const std::string& base = kScenarios) {
    std::istringstream in(text);
    return parse_scenario(in, "test.ini", base);
}

std::string replace(std::string text, const std::string& from, const std::string& to) {
    const auto pos = text.find(from);
    REQUIRE(pos != std::string::npos);
    return text.replace(pos, from.size(), to);
}

}  // namespace

TEST_CASE("doubles round-trip through their text form", "[io][property]") {
    std::mt19937_64 rng(99);
    std::uniform_int_distribution<std::uint64_t> bits;
    int checked = 0;
    while (checked < 20000) {
        const std::uint64_t b = bits(rng);
        double x;
        std::memcpy(&x, &b, sizeof x);
        if (!std::isfinite(x)) continue;
        const auto back = parse_double(format_double(x));
        REQUIRE(back);
        REQUIRE(std::memcmp(&*back, &x, sizeof x) == 0);
        ++checked;
    }
    CHECK(format_double(std::numeric_limits<double>::infinity()) == "inf");
    CHECK(format_double(0.1) == "0.1");
    CHECK_FALSE(parse_double("1.5x"));
    CHECK_FALSE(parse_double(""));
    CHECK(*parse_double(" +2.5 ") == 2.5);
}

TEST_CASE("trajectory CSV round-trips at full precision", "[io][property]") {
    sim::Trajectory traj;
    std::mt19937_64 rng(3);
    std::normal_distribution<double> nd(0.0, 1e3);
    for (int k = 0; k < 500; ++k) {
        traj.samples.push_back({k * 1e-3, nd(rng), nd(rng), nd(rng), nd(rng), nd(rng), std::abs(nd(rng)) * 1e-5});
    }
    traj.samples.back().Z = std::numeric_limits<double>::infinity();
    std::stringstream buf;
    write_trajectory_csv(buf, traj);
    CHECK(buf.str().rfind("t_s,u_V,L_mm,v_mm_s,Ua_V,I_A,Z_ohm\n", 0) == 0);
    const auto back = read_trajectory_csv(buf, "mem");
    REQUIRE(back.size() == traj.samples.size());
    for (std::size_t i = 0; i + 1 < back.size(); ++i) CHECK(back[i] == traj.samples[i]);
    CHECK(std::isinf(back.back().Z));

    std::vector<arc::ArcOperatingPoint> pts{{0.0, 9.0, 62000.0, 0.008}, {1.25, 24.0, 61000.123456789, 0.0081}};
    std::stringstream sweep;
    write_sweep_csv(sweep, pts);
    const auto sp = read_sweep_csv(sweep, "mem");
    REQUIRE(sp.size() == 2);
    CHECK(sp[1].I == pts[1].I);

    std::istringstream wrong("L_mm,I_A\n1,2\n");
    CHECK_THROWS_AS(read_sweep_csv(wrong, "mem"), DataError);
}

TEST_CASE("field CSV parsing", "[io]") {
    std::istringstream good("# recorded 2019\n t_s , I_A\n0,62000\n\n# gap\n0.01,61900.5\n0.02,61800\n");
    const auto fs = read_field_series(good, "field.csv");
    CHECK(fs.channel == ident::Channel::Current);
    CHECK(fs.t == std::vector<double>{0.0, 0.01, 0.02});
    CHECK(fs.y[1] == 61900.5);

    std::istringstream vel("t_s,v_mm_s\n0,0\n");
    CHECK(read_field_series(vel, "f").channel == ident::Channel::Velocity);
    std::istringstream pos("t_s,L_mm\n0,0\n");
    CHECK(read_field_series(pos, "f").channel == ident::Channel::Position);

    std::istringstream unknown("t_s,P_W\n0,1\n");
    CHECK_THROWS_WITH(read_field_series(unknown, "f"), ContainsSubstring("unknown channel 'P_W'"));
    std::istringstream bad_num("t_s,I_A\n0,1\n0.1,abc\n");
    CHECK_THROWS_WITH(read_field_series(bad_num, "f.csv"), ContainsSubstring("f.csv:3"));
    std::istringstream ragged("t_s,I_A\n0,1,2\n");
    CHECK_THROWS_AS(read_field_series(ragged, "f"), DataError);
    std::istringstream empty("# nothing\n");
    CHECK_THROWS_AS(read_field_series(empty, "f"), DataError);

    ident::FieldSeries out{{0.0, 0.5}, {1.0, 2.0}, ident::Channel::Position};
    std::stringstream buf;
    write_field_series(buf, out);
    const auto back = read_field_series(buf, "mem");
    CHECK(back.t == out.t);
    CHECK(back.y == out.y);
    CHECK(back.channel == out.channel);
}

TEST_CASE("tap tables", "[io]") {
    const auto table = read_tap_table_file(kScenarios + "/taps_example.csv");
    CHECK(table.size() == 9);
    CHECK(table.at(7).Xr == 5.0);
    CHECK(table.at(7).XT == 3.2);
    CHECK_THROWS_AS(table.at(12), ConfigError);

    std::istringstream bad_header("tap,X\n1,2\n");
    CHECK_THROWS_AS(read_tap_table(bad_header, "t"), ConfigError);
    std::istringstream frac("tap,Xr_ohm,XT_ohm\n1.5,2,3\n");
    CHECK_THROWS_AS(read_tap_table(frac, "t"), ConfigError);
    std::istringstream dup("tap,Xr_ohm,XT_ohm\n1,2,3\n1,2,3\n");
    CHECK_THROWS_AS(read_tap_table(dup, "t"), ConfigError);
    CHECK_THROWS_AS(read_tap_table_file("/nonexistent/taps.csv"), ConfigError);
}

TEST_CASE("minimal config resolves defaults", "[io][config]") {
    const auto f = parse(kMinimal);
    CHECK(f.scenario.lti.K == 15.0);
    CHECK(f.scenario.lti.T == 0.1);
    CHECK(f.scenario.circuit.X2 == 3e-3);
    CHECK(f.scenario.circuit.R2 == 0.507e-3);
    CHECK(f.scenario.circuit.alpha == 9.0);
    CHECK(f.scenario.seed == 1);
    CHECK(f.scenario.decimation == 1);
    CHECK(f.controller.kind == sim::ControllerKind::None);
    CHECK(f.run.integrator == sim::Integrator::ExactZoh);
    CHECK(f.run.out_dir == ".");
    CHECK(std::holds_alternative<sim::StepInput>(f.scenario.input));
    CHECK(f.warnings.empty());
}

TEST_CASE("config strictness", "[io][config]") {
    CHECK_THROWS_WITH(parse(replace(kMinimal, "L0 = 10", "L0 = 10\nLO = 3")),
                      ContainsSubstring("test.ini:21: unknown key 'LO' in [run]"));
    CHECK_THROWS_WITH(parse(std::string(kMinimal) + "\n[plot]\nx = 1\n"), ContainsSubstring("unknown section [plot]"));
    CHECK_THROWS_WITH(parse(replace(kMinimal, "U1 = 35000\n", "")),
                      ContainsSubstring("missing required key 'U1' in [circuit]"));
    CHECK_THROWS_WITH(parse(replace(kMinimal, "T = 0.1\n", "")), ContainsSubstring("K and T must be given together"));
    CHECK_THROWS_WITH(parse(replace(kMinimal, "dt = 0.001", "dt = fast")), ContainsSubstring("test.ini:18: [run] dt"));
    CHECK_THROWS_WITH(parse(replace(kMinimal, "dt = 0.001", "dt = 0.05")), ContainsSubstring("T/5"));
    CHECK_THROWS_AS(parse(replace(kMinimal, "t_end = 1", "t_end = 1\nt_end = 2")), ConfigError);
    CHECK_THROWS_AS(parse(replace(kMinimal, "program = step", "program = ramp")), ConfigError);
    CHECK_THROWS_WITH(parse(replace(kMinimal, "u = 1", "u = 1\nschedule = 0:1")),
                      ContainsSubstring("not used by program 'step'"));
    CHECK_THROWS_AS(parse(replace(kMinimal, "L0 = 10", "L0 = 500")), ConfigError);
    CHECK_THROWS_AS(parse(replace(kMinimal, "[run]", "[run]\nseed = -1")), ConfigError);
    CHECK_THROWS_AS(parse(replace(kMinimal, "[run]", "[run]\nintegrator = euler")), ConfigError);
    CHECK_THROWS_AS(parse(replace(kMinimal, "[run]", "[run]\nalign = maybe")), ConfigError);
    CHECK_THROWS_AS(parse("[hydraulics]\nK 15\n"), ConfigError);
    CHECK_THROWS_AS(load_scenario("/nonexistent/x.ini"), ConfigError);
}

TEST_CASE("stage presets and beta overrides", "[io][config]") {
    const auto base = replace(kMinimal, "beta = 12", "stage = oxidization");
    CHECK(parse(base).scenario.circuit.beta == 3.7);
    CHECK(parse(replace(kMinimal, "beta = 12", "stage = reviving")).scenario.circuit.beta == 1.2);
    CHECK(parse(replace(kMinimal, "beta = 12", "stage = melting\nbeta = 8")).scenario.circuit.beta == 8.0);
    CHECK_THROWS_AS(parse(replace(kMinimal, "beta = 12", "stage = melting\nbeta = 13")), ConfigError);
    CHECK_THROWS_AS(parse(replace(kMinimal, "beta = 12", "stage = oxidization\nbeta = 4")), ConfigError);
    CHECK_THROWS_AS(parse(replace(kMinimal, "beta = 12", "stage = tapping")), ConfigError);
    CHECK_THROWS_WITH(parse(replace(kMinimal, "beta = 12\n", "")), ContainsSubstring("'beta'"));
}

TEST_CASE("tap selection from a table", "[io][config]") {
    const auto text = replace(kMinimal, "Xr = 5\nXT = 3.2", "tap = 3\ntap_table = taps_example.csv");
    const auto f = parse(text);
    const auto table = read_tap_table_file(kScenarios + "/taps_example.csv");
    CHECK(f.scenario.circuit.Xr == table.at(3).Xr);
    CHECK(f.scenario.circuit.XT == table.at(3).XT);
    CHECK(f.tap == 3);
    CHECK_THROWS_AS(parse(replace(text, "tap = 3", "tap = 42")), ConfigError);
    CHECK_THROWS_AS(parse(replace(text, "tap = 3\n", "")), ConfigError);
    CHECK_THROWS_AS(parse(replace(text, "tap = 3", "tap = 3\nXr = 1")), ConfigError);
}

TEST_CASE("explicit K, T next to hydraulic parameters", "[io][config]") {
    const std::string phys = "K = 15\nT = 0.1\nm = 7850\nA = 0.0154\nk1 = 0.000231\nk2 = -3.021146496815287e-09";
    const auto agree = parse(replace(kMinimal, "K = 15\nT = 0.1", phys));
    CHECK(agree.warnings.empty());
    CHECK(agree.hydraulics);

    const auto disagree = parse(replace(kMinimal, "K = 15\nT = 0.1", replace(phys, "K = 15", "K = 20")));
    REQUIRE(disagree.warnings.size() == 1);
    CHECK_THAT(disagree.warnings[0], ContainsSubstring("disagree"));
    CHECK(disagree.scenario.lti.K == 20.0);

    const auto derived = parse(replace(kMinimal, "K = 15\nT = 0.1", "m = 7850\nA = 0.0154\nk1 = 0.000231\nk2 = -3.021146496815287e-09"));
    CHECK(derived.scenario.lti.K == Catch::Approx(15.0).epsilon(1e-12));
    CHECK(derived.scenario.lti.T == Catch::Approx(0.1).epsilon(1e-12));

    CHECK_THROWS_AS(parse(replace(kMinimal, "K = 15\nT = 0.1", "k1 = 0.000231\nk2 = 0")), DomainError);
    CHECK_THROWS_AS(parse(replace(kMinimal, "K = 15\nT = 0.1", "k1 = 0.000231")), ConfigError);
}

TEST_CASE("closed-loop configs need a controller with a setpoint", "[io][config]") {
    const auto cl = replace(kMinimal, "program = step\nu = 1", "program = closed_loop");
    CHECK_THROWS_AS(parse(cl), ConfigError);
    CHECK_THROWS_WITH(parse(cl + "\n[controller]\nkind = p\nkp = 100\n"),
                      ContainsSubstring("missing required key 'setpoint_ohm'"));
    const auto ok = parse(cl + "\n[controller]\nkind = p\nkp = 100\nsetpoint_ohm = 0.0107\n");
    CHECK(ok.controller.kind == sim::ControllerKind::P);
    CHECK_THROWS_AS(parse(cl + "\n[controller]\nkind = pid\n"), ConfigError);
}

TEST_CASE("resolved config round-trips", "[io][config][property]") {
    for (const char* name : {"default.ini", "closed_loop.ini", "field_validation.ini"}) {
        INFO(name);
        const auto first = load_scenario(kScenarios + "/" + name);
        const std::string echo = echo_scenario(first);
        std::istringstream in(echo);
        const auto second = parse_scenario(in, "echo.ini");
        CHECK(second == first);
        CHECK(echo_scenario(second) == echo);
    }
    auto f = parse(replace(kMinimal, "[run]", "[run]\nseed = 18446744073709551615\ndecimation = 5\nalign = false"));
    CHECK(f.scenario.seed == 18446744073709551615ULL);
    f.scenario.circuit.E2 = 480.0;
    f.run.v_noise_sigma = 0.25;
    f.run.integrator = sim::Integrator::Rk4;
    std::istringstream in(echo_scenario(f));
    CHECK(parse_scenario(in, "echo.ini") == f);
}

TEST_CASE("report lines carry every field", "[io]") {
    ident::StepIdResult r{15.0, 0.1, ident::StepIdMethod::LeastSquares, 1e-7, 15.0001, 0.0999};
    const std::string line = step_record_line(r, 1.0, 1001);
    CHECK(line == "K_hat=15 T_hat=0.1 method=least_squares residual_rms=1e-07 K_crossing=15.0001 "
                  "T_crossing=0.0999 u_step=1 n_samples=1001");
    CHECK_THAT(step_report(r, 1.0, 1001), ContainsSubstring(line));

    ident::FitReport fr{93.5, 120.25, 751, ident::Channel::Current, -0.004};
    CHECK(fit_record_line(fr) == "fit_percent=93.5 rmse=120.25 n_samples=751 channel=I_A offset_s=-0.004");
    CHECK_THAT(fit_report(fr), ContainsSubstring("rmse"));
    CHECK(hex64(0xabcULL) == "0x0000000000000abc");
}
