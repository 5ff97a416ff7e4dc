// kforge: gain synthesis and closed-loop certification for triangular
// time-delay systems.

#include <iostream>

#include "CLI11.hpp"
#include "kforge/config.hpp"

int main(int argc, char** argv) {
    CLI::App app{"kforge: delay-free feedback synthesis and Lyapunov certification"};
    app.require_subcommand(0, 1);
    app.fallthrough(true);  // global flags may follow the subcommand

    std::string config_path;
    std::string out_dir;
    int seeds = -1;
    std::string override_b2;
    std::string convention;

    app.add_option("--config", config_path, "JSON config file");
    app.add_option("--out", out_dir, "output directory");
    app.add_option("--seeds", seeds, "number of seeded runs");
    app.add_option("--override-B2", override_b2, "closed-form override for the stage-2 bound, "
                                                 "an expression in s");
    app.add_option("--example-convention", convention,
                   "gain bookkeeping: paper-5.13 (conservative) or example-5.46 (benchmark forms)")
        ->check(CLI::IsMember({"paper-5.13", "example-5.46"}));

    auto* c_synth = app.add_subcommand("synthesize", "build gains and verify the dissipation bound");
    auto* c_sim = app.add_subcommand("simulate", "run closed- or open-loop trajectories");
    auto* c_verify = app.add_subcommand("verify", "sample the master dissipation inequality");
    auto* c_cert = app.add_subcommand("certify", "simulate and certify exponential decay");
    auto* c_rep = app.add_subcommand("reproduce-example",
                                     "diff synthesized gains against the built-in benchmark");

    CLI11_PARSE(app, argc, argv);

    try {
        kforge::cli::RunConfig cfg;
        if (!config_path.empty()) cfg = kforge::cli::load_config(config_path);
        else cfg = kforge::cli::default_benchmark_config();

        if (c_synth->parsed()) cfg.mode = "synthesize";
        else if (c_sim->parsed()) cfg.mode = "simulate";
        else if (c_verify->parsed()) cfg.mode = "verify";
        else if (c_cert->parsed()) cfg.mode = "certify";
        else if (c_rep->parsed()) cfg.mode = "reproduce-example";

        if (!out_dir.empty()) cfg.out_dir = out_dir;
        if (seeds > 0) cfg.seeds = seeds;
        if (!override_b2.empty()) cfg.override_B2 = override_b2;
        if (convention == "paper-5.13") cfg.convention = kforge::Convention::Conservative;
        else if (convention == "example-5.46") cfg.convention = kforge::Convention::Benchmark;

        return kforge::cli::run(cfg);
    } catch (const kforge::cli::SchemaError& e) {
        std::cerr << "kforge: schema: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "kforge: fatal: " << e.what() << "\n";
        return 4;
    }
}
