#include <charconv>
#include <cstdint>
#include <cstdlib>
#include <iostream>
#include <map>
#include <string>
#include <string_view>
#include <system_error>

#include <CLI11.hpp>

#include "arcplant/commands.hpp"

int main(int argc, char** argv) {
    using arcplant::cli::Command;
    namespace sim = arcplant::sim;

    CLI::App app{"Electrode-lift plant of an arc furnace: sweep, step identification, simulation, validation"};
    app.name("arcplant");

    arcplant::cli::Options opts;
    std::string command;
    std::string integrator;
    app.add_option("command", command, "sweep | step | simulate | validate")
        ->required()
        ->check(CLI::IsMember({"sweep", "step", "simulate", "validate"}));
    app.add_option("--config", opts.config, "scenario file")->required();
    app.add_option("--field", opts.field, "field data CSV (t_s,<channel>) for validate");
    app.add_option("--out", opts.out_dir, "output directory (overrides [run] out_dir)");
    app.add_option("--integrator", integrator, "plant integrator")->check(CLI::IsMember({"zoh", "rk4"}));
    app.add_option("--n", opts.n, "sweep sample count");
    app.add_flag("--gnuplot", opts.gnuplot, "also write a gnuplot script");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return arcplant::exit_code::kConfig;
    }

    static const std::map<std::string, Command> commands{
        {"sweep", Command::Sweep}, {"step", Command::Step}, {"simulate", Command::Simulate}, {"validate", Command::Validate}};
    opts.command = commands.at(command);
    if (!integrator.empty()) opts.integrator = integrator == "rk4" ? sim::Integrator::Rk4 : sim::Integrator::ExactZoh;

    if (const char* seed = std::getenv("ARCPLANT_SEED")) {
        const std::string_view text(seed);
        std::uint64_t value = 0;
        const auto res = std::from_chars(text.data(), text.data() + text.size(), value);
        if (text.empty() || res.ec != std::errc{} || res.ptr != text.data() + text.size()) {
            std::cerr << "config error: ARCPLANT_SEED must be a non-negative integer, got '" << text << "'\n";
            return arcplant::exit_code::kConfig;
        }
        opts.seed = value;
    }

    return arcplant::cli::dispatch(opts, std::cout, std::cerr);
}
