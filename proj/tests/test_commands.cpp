#include <catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <iterator>
#include <map>
#include <sstream>
#include <string>

#include "arcplant/commands.hpp"
#include "support/oracles.hpp"

using namespace arcplant;
using namespace arcplant::cli;
using Catch::Matchers::ContainsSubstring;
namespace fs = std::filesystem;

namespace {

const std::string kScenarios = ARCPLANT_SCENARIOS;

fs::path fresh_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("arcplant_test_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

struct Run {
    int code;
    std::string out;
    std::string err;
};

Run run(Options opts) {
    std::ostringstream out;
    std::ostringstream err;
    const int code = dispatch(opts, out, err);
    return {code, out.str(), err.str()};
}

Options opts_for(Command c, const std::string& config, const fs::path& out) {
    Options o;
    o.command = c;
    o.config = config;
    o.out_dir = out.string();
    return o;
}

void write_text(const fs::path& p, const std::string& text) {
    std::ofstream out(p);
    out << text;
}

}  // namespace

TEST_CASE("sweep writes the requested number of monotone points", "[cli]") {
    const auto dir = fresh_dir("sweep");
    auto o = opts_for(Command::Sweep, kScenarios + "/default.ini", dir);
    o.n = 100;
    o.gnuplot = true;
    const auto r = run(o);
    REQUIRE(r.code == 0);
    std::ifstream in(dir / "sweep.csv");
    const auto pts = io::read_sweep_csv(in, "sweep.csv");
    REQUIRE(pts.size() == 100);
    for (std::size_t i = 1; i < pts.size(); ++i) {
        CHECK(pts[i].L > pts[i - 1].L);
        CHECK(pts[i].Ua > pts[i - 1].Ua);
        CHECK(pts[i].I < pts[i - 1].I);
        CHECK(pts[i].Z > pts[i - 1].Z);
    }
    CHECK(fs::exists(dir / "resolved.ini"));
    CHECK(fs::exists(dir / "sweep.gp"));

    o.n = 1;
    const auto bad = run(o);
    CHECK(bad.code == exit_code::kConfig);
    CHECK_THAT(bad.err, ContainsSubstring("usage"));
}

TEST_CASE("step on the default scenario recovers the plant", "[cli]") {
    const auto dir = fresh_dir("step");
    const auto r = run(opts_for(Command::Step, kScenarios + "/default.ini", dir));
    REQUIRE(r.code == 0);
    CHECK_THAT(r.out, ContainsSubstring("K_hat="));
    const std::string report = slurp(dir / "step_report.txt");
    const auto at = report.find("K_hat=");
    REQUIRE(at != std::string::npos);
    std::istringstream line(report.substr(at));
    std::string k_tok;
    std::string t_tok;
    line >> k_tok >> t_tok;
    const double K = std::stod(k_tok.substr(6));
    const double T = std::stod(t_tok.substr(6));
    CHECK(std::abs(K / 15.0 - 1.0) <= 1e-3);
    CHECK(std::abs(T / 0.1 - 1.0) <= 1e-2);
    for (const char* f : {"trajectory.csv", "trajectory.meta", "step_record.csv", "resolved.ini"}) {
        CHECK(fs::exists(dir / f));
    }
    CHECK_THAT(slurp(dir / "trajectory.meta"), ContainsSubstring("integrator=zoh"));
}

TEST_CASE("step with velocity noise stays within 1% on K", "[cli]") {
    const auto dir = fresh_dir("step_noise");
    std::string cfg = slurp(kScenarios + "/default.ini");
    cfg.replace(cfg.find("seed = 1"), 8, "seed = 11\nv_noise_sigma = 0.75");
    cfg.replace(cfg.find("taps_example.csv"), 16, kScenarios + "/taps_example.csv");
    write_text(dir / "noisy.ini", cfg);
    for (std::uint64_t seed : {11ULL, 12ULL, 13ULL}) {
        auto o = opts_for(Command::Step, (dir / "noisy.ini").string(), dir);
        o.seed = seed;
        REQUIRE(run(o).code == 0);
        const auto report = slurp(dir / "step_report.txt");
        const double K = std::stod(report.substr(report.find("K_hat=") + 6));
        INFO("seed " << seed);
        CHECK(std::abs(K / 15.0 - 1.0) <= 0.01);
        CHECK_THAT(slurp(dir / "resolved.ini"), ContainsSubstring("seed = " + std::to_string(seed)));
    }
}

TEST_CASE("step refuses a zero step", "[cli]") {
    const auto dir = fresh_dir("step_zero");
    std::string cfg = slurp(kScenarios + "/field_validation.ini");
    cfg.replace(cfg.find("u = 1"), 5, "u = 0");
    cfg.replace(cfg.find("taps_example.csv"), 16, kScenarios + "/taps_example.csv");
    write_text(dir / "zero.ini", cfg);
    const auto r = run(opts_for(Command::Step, (dir / "zero.ini").string(), dir));
    CHECK(r.code == exit_code::kConfig);
    CHECK_THAT(r.err, ContainsSubstring("nonzero"));
}

TEST_CASE("simulate writes trajectory and metadata", "[cli]") {
    const auto dir = fresh_dir("simulate");
    auto o = opts_for(Command::Simulate, kScenarios + "/closed_loop.ini", dir);
    REQUIRE(run(o).code == 0);
    std::ifstream in(dir / "trajectory.csv");
    const auto samples = io::read_trajectory_csv(in, "trajectory.csv");
    CHECK(samples.size() == 5001);
    const std::string meta = slurp(dir / "trajectory.meta");
    CHECK_THAT(meta, ContainsSubstring("scenario_hash=0x"));
    CHECK_THAT(meta, ContainsSubstring("samples=5001"));
    CHECK_THAT(meta, ContainsSubstring("# [controller]"));

    o.integrator = sim::Integrator::Rk4;
    REQUIRE(run(o).code == 0);
    CHECK_THAT(slurp(dir / "trajectory.meta"), ContainsSubstring("integrator=rk4"));
}

TEST_CASE("identical runs produce bit-identical artifacts", "[cli][determinism]") {
    for (auto [cmd, cfg] : {std::pair{Command::Sweep, "default.ini"}, std::pair{Command::Step, "default.ini"},
                            std::pair{Command::Simulate, "closed_loop.ini"}}) {
        const auto dir = fresh_dir("det");
        auto snapshot = [&] {
            REQUIRE(run(opts_for(cmd, kScenarios + "/" + cfg, dir)).code == 0);
            std::map<std::string, std::string> files;
            for (const auto& entry : fs::directory_iterator(dir)) files[entry.path().filename().string()] = slurp(entry.path());
            return files;
        };
        const auto first = snapshot();
        const auto second = snapshot();
        CHECK(first == second);
        const auto compared = first.size();
        CHECK(compared >= 2);
    }
}

TEST_CASE("validate against a field file", "[cli]") {
    const auto dir = fresh_dir("validate");
    const auto file = io::load_scenario(kScenarios + "/field_validation.ini");
    const auto traj = sim::rk4_reference(file.scenario);
    ident::FieldSeries field;
    field.channel = ident::Channel::Current;
    for (const auto& s : traj.samples) {
        field.t.push_back(s.t);
        field.y.push_back(s.I);
    }
    {
        std::ofstream out(dir / "field.csv");
        out << "# surrogate field record\n";
        io::write_field_series(out, field);
    }
    auto o = opts_for(Command::Validate, kScenarios + "/field_validation.ini", dir);
    o.field = (dir / "field.csv").string();
    const auto r = run(o);
    REQUIRE(r.code == 0);
    CHECK_THAT(r.out, ContainsSubstring("fit_percent="));
    CHECK_THAT(r.out, ContainsSubstring("offset_s="));
    const std::string rep = slurp(dir / "fit_report.txt");
    const double fit = std::stod(rep.substr(rep.find("fit_percent=") + 12));
    CHECK(fit >= 99.99);
    CHECK(fs::exists(dir / "validation.csv"));

    write_text(dir / "bad.csv", "t_s,Q\n0,1\n");
    o.field = (dir / "bad.csv").string();
    CHECK(run(o).code == exit_code::kData);
    o.field = (dir / "missing.csv").string();
    CHECK(run(o).code == exit_code::kData);
    o.field.reset();
    CHECK(run(o).code == exit_code::kConfig);
}

TEST_CASE("error classes map to exit codes", "[cli]") {
    const auto dir = fresh_dir("errors");
    CHECK(run(opts_for(Command::Simulate, (dir / "none.ini").string(), dir)).code == exit_code::kConfig);

    std::string cfg = slurp(kScenarios + "/closed_loop.ini");
    cfg.replace(cfg.find("K = 15\nT = 0.1"), 14, "k1 = 0.000231\nk2 = 1e-9");
    write_text(dir / "unstable.ini", cfg);
    const auto dom = run(opts_for(Command::Simulate, (dir / "unstable.ini").string(), dir));
    CHECK(dom.code == exit_code::kDomain);
    CHECK_THAT(dom.err, ContainsSubstring("domain error"));

    std::string weak = slurp(kScenarios + "/closed_loop.ini");
    weak.replace(weak.find("U1 = 35000"), 10, "U1 = 500");
    write_text(dir / "weak.ini", weak);
    CHECK(run(opts_for(Command::Sweep, (dir / "weak.ini").string(), dir)).code == exit_code::kDomain);
}
