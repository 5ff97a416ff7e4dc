#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "kforge/benchmark2.hpp"
#include "kforge/config.hpp"

using namespace kforge;
namespace fs = std::filesystem;

namespace {

std::string bin_path() {
    const char* p = std::getenv("KFORGE_BIN");
    return p ? p : "";
}

int run_cmd(const std::string& cmd) {
    int rc = std::system((cmd + " > /dev/null 2>&1").c_str());
    return WEXITSTATUS(rc);
}

std::string slurp(const fs::path& p) {
    std::ifstream is(p);
    std::ostringstream os;
    os << is.rdbuf();
    return os.str();
}

void write(const fs::path& p, const std::string& content) {
    std::ofstream os(p);
    os << content;
}

const char* kBenchmarkConfig = R"json({
  "mode": "synthesize",
  "system": {
    "n": 2, "r": 1.0, "sigma": 0.1,
    "phi": {"form": "const", "c": 1.0},
    "L": {"form": "affine", "c0": 1.0, "c1": 1.0},
    "f": ["d1*integral(sq(x1), r)", "d2*norm_r(x2)"],
    "g": ["1", "1"],
    "disturbance_box": [[-1, 1], [-1, 1]]
  },
  "numerics": {"samples": 2000, "box": 3.0},
  "output": {"dir": "OUTDIR"}
})json";

}  // namespace

TEST_CASE("config loading validates the schema") {
    fs::path dir = fs::temp_directory_path() / "kforge_cfg_test";
    fs::create_directories(dir);
    std::string cfg = kBenchmarkConfig;
    cfg.replace(cfg.find("OUTDIR"), 6, (dir / "out").string());
    write(dir / "good.json", cfg);
    auto loaded = cli::load_config((dir / "good.json").string());
    CHECK(loaded.system.n == 2);
    CHECK(loaded.dt == doctest::Approx(1.0 / 128));
    CHECK(loaded.dwell == loaded.dt);

    write(dir / "bad_sigma.json", R"json({"system": {"n": 2, "r": 1.0, "sigma": -0.5}})json");
    CHECK_THROWS_AS(cli::load_config((dir / "bad_sigma.json").string()), cli::SchemaError);

    write(dir / "not_json.json", "mode = synthesize");
    CHECK_THROWS_AS(cli::load_config((dir / "not_json.json").string()), cli::SchemaError);
    fs::remove_all(dir);
}

TEST_CASE("reproduce mode emits tiny deviations") {
    if (bin_path().empty()) return;  // needs the built binary
    fs::path dir = fs::temp_directory_path() / "kforge_cli_rep";
    fs::remove_all(dir);
    int rc = run_cmd(bin_path() + " reproduce-example --out " + dir.string());
    CHECK(rc == 0);
    std::string rep = slurp(dir / "reproduce_report.json");
    REQUIRE(!rep.empty());
    auto field_below = [&](const std::string& key, double bound) {
        auto pos = rep.find(key);
        REQUIRE(pos != std::string::npos);
        double v = std::strtod(rep.c_str() + rep.find(':', pos) + 1, nullptr);
        CHECK(v <= bound);
    };
    field_below("mu1_max_dev", 1e-9);
    field_below("gamma1_max_dev", 1e-9);
    field_below("k1_max_dev", 1e-9);
    field_below("rho1_max_dev", 1e-9);
    field_below("gamma2_max_dev_with_override", 1e-9);
    field_below("mu2_max_dev_with_override", 1e-9);
    field_below("u_max_dev_with_override", 1e-9);
    field_below("delta1_dev_after_adding_gradk1", 1e-9);
    fs::remove_all(dir);
}

TEST_CASE("reproduce mode honors parameter overrides") {
    if (bin_path().empty()) return;
    fs::path dir = fs::temp_directory_path() / "kforge_cli_rep_params";
    fs::remove_all(dir);
    fs::create_directories(dir);
    write(dir / "cfg.json", R"json({
      "mode": "reproduce-example",
      "reproduce": {"sigma": 0.3, "r": 0.5},
      "output": {"dir": ")json" + (dir / "out").string() + R"json("}
    })json");
    CHECK(run_cmd(bin_path() + " --config " + (dir / "cfg.json").string()) == 0);
    std::string rep = slurp(dir / "out" / "reproduce_report.json");
    CHECK(rep.find("\"sigma\": 0.3") != std::string::npos);
    CHECK(rep.find("\"r\": 0.5") != std::string::npos);
    auto pos = rep.find("mu1_max_dev");
    REQUIRE(pos != std::string::npos);
    CHECK(std::strtod(rep.c_str() + rep.find(':', pos) + 1, nullptr) <= 1e-9);
    fs::remove_all(dir);
}

TEST_CASE("synthesize mode writes gains, report and provenance") {
    if (bin_path().empty()) return;
    fs::path dir = fs::temp_directory_path() / "kforge_cli_synth";
    fs::remove_all(dir);
    fs::create_directories(dir);
    std::string cfg = kBenchmarkConfig;
    cfg.replace(cfg.find("OUTDIR"), 6, (dir / "out").string());
    write(dir / "cfg.json", cfg);
    int rc = run_cmd(bin_path() + " synthesize --config " + (dir / "cfg.json").string() +
                     " --example-convention example-5.46");
    CHECK(rc == 0);
    CHECK(fs::exists(dir / "out" / "gains_manifest.json"));
    CHECK(fs::exists(dir / "out" / "master_report.json"));
    CHECK(fs::exists(dir / "out" / "provenance.txt"));
    CHECK(slurp(dir / "out" / "master_report.json").find("\"pass\": true") != std::string::npos);
    fs::remove_all(dir);
}

TEST_CASE("schema violations exit with code 3") {
    if (bin_path().empty()) return;
    fs::path dir = fs::temp_directory_path() / "kforge_cli_schema";
    fs::remove_all(dir);
    fs::create_directories(dir);
    write(dir / "bad.json", R"json({"mode": "synthesize", "system": {"n": 2, "r": 1.0, "sigma": 0}})json");
    int rc = run_cmd(bin_path() + " --config " + (dir / "bad.json").string());
    CHECK(rc == 3);
    fs::remove_all(dir);
}

TEST_CASE("single-state closed loop certifies through the pipeline") {
    if (bin_path().empty()) return;
    fs::path dir = fs::temp_directory_path() / "kforge_cli_cert1";
    fs::remove_all(dir);
    fs::create_directories(dir);
    write(dir / "cfg.json", R"json({
      "mode": "certify",
      "system": {
        "n": 1, "r": 1.0, "sigma": 0.1,
        "phi": {"form": "const", "c": 1.0},
        "L": {"form": "affine", "c0": 1.0, "c1": 1.0},
        "f": ["d1*integral(sq(x1), r)"],
        "g": ["1"],
        "disturbance_box": [[-1, 1]]
      },
      "numerics": {"seeds": 4, "horizon": 8.0, "tolerance": 1e-3, "x0_sup_norm": 1.5},
      "output": {"dir": ")json" + (dir / "out").string() + R"json("}
    })json");
    int rc = run_cmd(bin_path() + " --config " + (dir / "cfg.json").string());
    CHECK(rc == 0);
    CHECK(fs::exists(dir / "out" / "certify_aggregate.json"));
    CHECK(slurp(dir / "out" / "certify_aggregate.json").find("\"all_pass\": true") !=
          std::string::npos);
    CHECK(fs::exists(dir / "out" / "plot_seed0.csv"));
    fs::remove_all(dir);
}

TEST_CASE("two-state mild closed loop certifies end to end") {
    if (bin_path().empty()) return;
    fs::path dir = fs::temp_directory_path() / "kforge_cli_cert2";
    fs::remove_all(dir);
    fs::create_directories(dir);
    // slow drift and short delay keep the synthesized gains within the
    // stability range of the explicit stepper at dt = r/128
    write(dir / "cfg.json", R"json({
      "mode": "certify",
      "system": {
        "n": 2, "r": 0.1, "sigma": 0.5,
        "phi": {"form": "const", "c": 1.0},
        "L": {"form": "const", "c": 0.05},
        "f": ["0.05*d1*delay(x1, r)", "0.05*d2*norm_r(x1)"],
        "g": ["1", "1"],
        "disturbance_box": [[-1, 1], [-1, 1]]
      },
      "numerics": {"seeds": 4, "horizon": 12.0, "tolerance": 1e-3, "x0_sup_norm": 1.0},
      "output": {"dir": ")json" + (dir / "out").string() + R"json("}
    })json");
    int rc = run_cmd(bin_path() + " --config " + (dir / "cfg.json").string());
    CHECK(rc == 0);
    CHECK(slurp(dir / "out" / "certify_aggregate.json").find("\"all_pass\": true") !=
          std::string::npos);

    // the same system without control fails the certificate
    std::string open_cfg = slurp(dir / "cfg.json");
    auto pos = open_cfg.find("\"seeds\": 4");
    REQUIRE(pos != std::string::npos);
    open_cfg.insert(pos, "\"open_loop\": true, ");
    auto opos = open_cfg.find((dir / "out").string());
    open_cfg.replace(opos, (dir / "out").string().size(), (dir / "open").string());
    write(dir / "open.json", open_cfg);
    CHECK(run_cmd(bin_path() + " --config " + (dir / "open.json").string()) == 2);
    CHECK(slurp(dir / "open" / "certify_aggregate.json").find("\"all_pass\": false") !=
          std::string::npos);
    fs::remove_all(dir);
}

TEST_CASE("simulation outputs are byte-identical across reruns") {
    if (bin_path().empty()) return;
    fs::path dir = fs::temp_directory_path() / "kforge_cli_det";
    fs::remove_all(dir);
    fs::create_directories(dir);
    write(dir / "cfg.json", R"json({
      "mode": "simulate",
      "system": {
        "n": 1, "r": 1.0, "sigma": 0.1,
        "phi": {"form": "const", "c": 1.0},
        "L": {"form": "affine", "c0": 1.0, "c1": 1.0},
        "f": ["d1*integral(sq(x1), r)"],
        "g": ["1"],
        "disturbance_box": [[-1, 1]]
      },
      "numerics": {"seeds": 2, "horizon": 4.0},
      "output": {"dir": ")json" + (dir / "a").string() + R"json("}
    })json");
    CHECK(run_cmd(bin_path() + " --config " + (dir / "cfg.json").string()) == 0);
    // a different thread cap must not change a single byte
    CHECK(run_cmd("KFORGE_THREADS=1 " + bin_path() + " --config " +
                  (dir / "cfg.json").string() + " --out " + (dir / "b").string()) == 0);
    for (int s = 0; s < 2; ++s) {
        std::string a = slurp(dir / "a" / ("traj_seed" + std::to_string(s) + ".csv"));
        std::string b = slurp(dir / "b" / ("traj_seed" + std::to_string(s) + ".csv"));
        CHECK(!a.empty());
        CHECK(a == b);
    }
    fs::remove_all(dir);
}

TEST_CASE("closed-form bound override flows through the flag") {
    if (bin_path().empty()) return;
    fs::path dir = fs::temp_directory_path() / "kforge_cli_ovr";
    fs::remove_all(dir);
    fs::create_directories(dir);
    std::string cfg = kBenchmarkConfig;
    cfg.replace(cfg.find("OUTDIR"), 6, (dir / "out").string());
    write(dir / "cfg.json", cfg);
    // dominates the scanned gain sum for sigma=0.1, r=1
    int rc = run_cmd(bin_path() + " synthesize --config " + (dir / "cfg.json").string() +
                     " --override-B2 '4.0 + 1.3*sq(s)'");
    CHECK(rc == 0);
    CHECK(slurp(dir / "out" / "gains_manifest.json").find("\"override_records\": [\n    2\n  ]") !=
          std::string::npos);
    // an inadmissible override is rejected as a verification failure
    int rc2 = run_cmd(bin_path() + " synthesize --config " + (dir / "cfg.json").string() +
                      " --override-B2 '0.5'");
    CHECK(rc2 == 2);
    fs::remove_all(dir);
}

TEST_CASE("certify validates the gains manifest hash") {
    if (bin_path().empty()) return;
    fs::path dir = fs::temp_directory_path() / "kforge_cli_hash";
    fs::remove_all(dir);
    fs::create_directories(dir);
    auto sys_block = [](double sigma) {
        return std::string(R"json(
      "system": {
        "n": 1, "r": 1.0, "sigma": )json") +
               std::to_string(sigma) + R"json(,
        "phi": {"form": "const", "c": 1.0},
        "L": {"form": "affine", "c0": 1.0, "c1": 1.0},
        "f": ["d1*integral(sq(x1), r)"],
        "g": ["1"],
        "disturbance_box": [[-1, 1]]
      })json";
    };
    write(dir / "synth.json", "{\n  \"mode\": \"synthesize\"," + sys_block(0.1) +
                                  ",\n  \"numerics\": {\"samples\": 500},\n  \"output\": {\"dir\": \"" +
                                  (dir / "g").string() + "\"}\n}");
    REQUIRE(run_cmd(bin_path() + " --config " + (dir / "synth.json").string()) == 0);
    std::string manifest = (dir / "g" / "gains_manifest.json").string();

    write(dir / "cert_ok.json",
          "{\n  \"mode\": \"certify\"," + sys_block(0.1) +
              ",\n  \"numerics\": {\"seeds\": 2, \"horizon\": 4.0},\n  \"gains_manifest\": \"" +
              manifest + "\",\n  \"output\": {\"dir\": \"" + (dir / "ok").string() + "\"}\n}");
    CHECK(run_cmd(bin_path() + " --config " + (dir / "cert_ok.json").string()) == 0);

    write(dir / "cert_bad.json",
          "{\n  \"mode\": \"certify\"," + sys_block(0.2) +
              ",\n  \"numerics\": {\"seeds\": 2, \"horizon\": 4.0},\n  \"gains_manifest\": \"" +
              manifest + "\",\n  \"output\": {\"dir\": \"" + (dir / "bad").string() + "\"}\n}");
    CHECK(run_cmd(bin_path() + " --config " + (dir / "cert_bad.json").string()) == 2);
    fs::remove_all(dir);
}

TEST_CASE("default benchmark config drives the reproduce pipeline in-process") {
    auto cfg = cli::default_benchmark_config();
    CHECK(cfg.mode == "reproduce-example");
    CHECK(cfg.system.n == 2);
    CHECK(cfg.has_system);
}
