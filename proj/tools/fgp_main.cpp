// fgp: desk-scale lab for functionally generated portfolios.
//
//   fgp simulate|decompose|replicate-check|price|hedge --config <file>
//       [--refine k] [--out dir]
//
// Exit codes: 0 success, 1 config/IO error, 2 verdict failure.

#include <chrono>
#include <exception>
#include <iostream>
#include <string>

#include "CLI11.hpp"

#include "fgp/errors.hpp"
#include "fgp/experiment.hpp"

namespace {

struct Cli {
    std::string config_file;
    std::string out_dir;
    int refine = 0;
};

int dispatch(const std::string& command, const Cli& cli) {
    using namespace fgp::lab;

    ExperimentConfig config = load_config(cli.config_file);
    if (!cli.out_dir.empty()) config.output_dir = cli.out_dir;

    const auto started = std::chrono::steady_clock::now();
    CommandResult result;
    if (command == "simulate") {
        result = run_simulate(config);
    } else if (command == "decompose") {
        result = run_decompose(config, cli.refine);
    } else if (command == "replicate-check") {
        result = run_replicate_check(config);
    } else if (command == "price") {
        result = run_price(config);
    } else if (command == "hedge") {
        result = run_hedge(config);
    }
    const auto elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();

    // wall clock stays out of the persisted report so regeneration is
    // byte-identical
    std::cout << result.report.dump(2) << "\n";
    std::cerr << command << ": " << elapsed << " s, exit " << result.exit_code << "\n";
    return result.exit_code;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"functionally generated portfolio lab"};
    app.require_subcommand(1);

    Cli cli;
    for (const char* name : {"simulate", "decompose", "replicate-check", "price", "hedge"}) {
        auto* sub = app.add_subcommand(name);
        sub->add_option("--config", cli.config_file, "experiment config JSON")->required();
        sub->add_option("--out", cli.out_dir, "output directory override");
        if (std::string(name) == "decompose")
            sub->add_option("--refine", cli.refine, "grid-halving levels for the gap study");
    }

    CLI11_PARSE(app, argc, argv);

    try {
        return dispatch(app.get_subcommands().front()->get_name(), cli);
    } catch (const fgp::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const fgp::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
