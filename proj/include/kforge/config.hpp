#pragma once

// Config ingestion and pipeline orchestration for the command-line front end:
// synthesize -> verify -> simulate -> certify, plus the reproduce mode that
// diffs synthesized gains against the built-in benchmark closed forms.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "kforge/backstep.hpp"

namespace kforge::cli {

struct SchemaError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct RunConfig {
    std::string mode;  // synthesize | simulate | verify | certify | reproduce-example

    // system block
    TriangularSpec system;
    bool has_system = false;

    // numerics block
    double dt = 0.0;          // default r/128
    double horizon = 20.0;
    int seeds = 32;
    int samples = 10000;
    double box = 3.0;
    double tolerance = 1e-3;
    double dwell = 0.0;       // default dt
    double x0_sup_norm = 2.0;
    bool open_loop = false;

    // output block
    std::string out_dir = "out";
    std::vector<std::string> formats = {"csv", "json"};

    // overrides
    std::optional<std::string> override_B2;  // expression in s
    Convention convention = Convention::Conservative;
    std::string gains_manifest;  // optional: certify against an exported manifest (hash check)

    // reproduce block
    double rep_sigma = 0.1;
    double rep_r = 1.0;
};

// Parses and schema-validates a JSON config file. Throws SchemaError.
RunConfig load_config(const std::string& path);

// Built-in benchmark configuration (used by reproduce-example without a file).
RunConfig default_benchmark_config();

int threads_cap();  // KFORGE_THREADS, defaulting to hardware concurrency

int cmd_synthesize(const RunConfig& cfg);
int cmd_simulate(const RunConfig& cfg);
int cmd_verify(const RunConfig& cfg);
int cmd_certify(const RunConfig& cfg);
int cmd_reproduce_example(const RunConfig& cfg);

// Dispatch on cfg.mode. Exit codes: 0 pass, 2 verification fail, 3 schema
// fail, 4 runtime fault.
int run(const RunConfig& cfg);

// Helpers shared with the test suites.
HistorySegment random_initial_history(std::uint64_t seed, int dim, double r, int m,
                                      double sup_target);
SynthesisOverrides make_overrides(const RunConfig& cfg);

}  // namespace kforge::cli
