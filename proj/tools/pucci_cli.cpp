// pucci_cli: configuration-driven front end.
//
// Exit codes: 0 success, 2 configuration error, 3 runtime error.

#include <CLI11.hpp>

#include <iostream>
#include <optional>

#include "pucci/config.hpp"
#include "pucci/runner.hpp"

namespace {

struct Overrides {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<int> threads;
    std::optional<std::string> out;
};

CLI::App* add_run_command(CLI::App& app, const std::string& name, const std::string& help,
                          Overrides& o) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("-c,--config", o.config, "JSON config file")->required()->check(CLI::ExistingFile);
    sub->add_option("--seed", o.seed, "override the config seed");
    sub->add_option("--threads", o.threads, "worker count (0 = one per core, 1 = serial path)")
        ->check(CLI::NonNegativeNumber);
    sub->add_option("--out", o.out, "output directory (overrides config output)");
    return sub;
}

int execute(pucci::Command command, const Overrides& o) {
    try {
        pucci::RunConfig cfg = pucci::load_config(o.config);
        if (o.seed) cfg.set_seed(*o.seed);
        if (o.threads) cfg.threads = *o.threads;
        if (o.out) cfg.output = *o.out;
        const pucci::RunResult r = pucci::run(cfg, command);
        std::cout << "wrote " << r.outputs.size() + 1 << " files to " << cfg.output
                  << (r.manifest.contains("experiment") ? (r.pass ? " (pass)" : " (fail)") : "")
                  << "\n";
        return 0;
    } catch (const pucci::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Discrete extremal operators on random data clouds"};
    app.require_subcommand(1);
    app.footer("\n" + pucci::config_keys_help());

    Overrides gen, sol, exp;
    CLI::App* g = add_run_command(app, "generate", "sample a cloud (and partition)", gen);
    CLI::App* s = add_run_command(app, "solve", "solve the dynamic programming equation", sol);
    CLI::App* x = add_run_command(app, "experiment", "run a named experiment", exp);
    CLI::App* schema = app.add_subcommand("schema", "print the config JSON-Schema");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }
    if (g->parsed()) return execute(pucci::Command::Generate, gen);
    if (s->parsed()) return execute(pucci::Command::Solve, sol);
    if (x->parsed()) return execute(pucci::Command::Experiment, exp);
    if (schema->parsed()) {
        std::cout << pucci::config_schema().dump(2) << "\n";
        return 0;
    }
    return 2;
}
