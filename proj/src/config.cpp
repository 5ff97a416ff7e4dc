#include "kforge/config.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include "json.hpp"
#include "kforge/benchmark2.hpp"
#include "kforge/lyapunov.hpp"
#include "kforge/sysdsl.hpp"

namespace kforge::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct SplitMix {
    std::uint64_t s;
    std::uint64_t next() {
        std::uint64_t z = (s += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }
    double uniform01() { return double(next() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }
};

MonotoneEnvelope envelope_from_json(const json& j, const char* what) {
    if (!j.is_object() || !j.contains("form"))
        throw SchemaError(std::string(what) + ": expected an object with a 'form' key");
    std::string form = j.at("form").get<std::string>();
    if (form == "const") return MonotoneEnvelope::constant(j.at("c").get<double>());
    if (form == "affine")
        return MonotoneEnvelope::affine(j.at("c0").get<double>(), j.at("c1").get<double>());
    if (form == "nodes") {
        std::vector<std::pair<double, double>> nodes;
        for (const auto& row : j.at("nodes"))
            nodes.emplace_back(row.at(0).get<double>(), row.at(1).get<double>());
        return envelope_from_samples(nodes);
    }
    throw SchemaError(std::string(what) + ": unknown form '" + form + "'");
}

void write_file(const fs::path& p, const std::string& content) {
    std::ofstream os(p);
    if (!os) throw std::runtime_error("cannot write " + p.string());
    os << content;
}

std::string now_iso() {
    auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    char buf[40];
    std::strftime(buf, sizeof buf, "%FT%TZ", std::gmtime(&t));
    return buf;
}

json config_echo(const RunConfig& cfg) {
    json j;
    j["mode"] = cfg.mode;
    j["numerics"] = {{"dt", cfg.dt},
                     {"horizon", cfg.horizon},
                     {"seeds", cfg.seeds},
                     {"samples", cfg.samples},
                     {"box", cfg.box},
                     {"tolerance", cfg.tolerance},
                     {"dwell", cfg.dwell},
                     {"x0_sup_norm", cfg.x0_sup_norm},
                     {"open_loop", cfg.open_loop}};
    j["output"] = {{"dir", cfg.out_dir}, {"formats", cfg.formats}};
    j["convention"] =
        cfg.convention == Convention::Conservative ? "paper-5.13" : "example-5.46";
    if (cfg.override_B2) j["override_B2"] = *cfg.override_B2;
    if (cfg.has_system) {
        j["system"] = {{"n", cfg.system.n}, {"r", cfg.system.r}, {"sigma", cfg.system.sigma}};
        if (!cfg.system.f_exprs.empty()) {
            j["system"]["f"] = cfg.system.f_exprs;
            j["system"]["g"] = cfg.system.g_exprs;
        }
    }
    return j;
}

void emit_run_manifest(const RunConfig& cfg, const json& extra) {
    json j;
    j["config"] = config_echo(cfg);
    j["timestamp"] = now_iso();
    for (auto it = extra.begin(); it != extra.end(); ++it) j[it.key()] = it.value();
    write_file(fs::path(cfg.out_dir) / "run_manifest.json", j.dump(2) + "\n");
}

int fail_with(const RunConfig& cfg, int code, const std::string& kind, const std::string& why) {
    json j;
    j["error"] = kind;
    j["reason"] = why;
    std::error_code ec;
    fs::create_directories(cfg.out_dir, ec);
    if (!ec) write_file(fs::path(cfg.out_dir) / "error.json", j.dump(2) + "\n");
    std::cerr << "kforge: " << kind << ": " << why << "\n";
    return code;
}

}  // namespace

RunConfig load_config(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw SchemaError("cannot open config file " + path);
    json j;
    try {
        is >> j;
    } catch (const std::exception& e) {
        throw SchemaError(std::string("config is not valid JSON: ") + e.what());
    }
    RunConfig cfg;
    try {
        cfg.mode = j.value("mode", "synthesize");
        if (j.contains("system")) {
            const json& s = j.at("system");
            cfg.system.n = s.at("n").get<int>();
            cfg.system.r = s.at("r").get<double>();
            cfg.system.sigma = s.at("sigma").get<double>();
            cfg.system.phi = s.contains("phi") ? envelope_from_json(s.at("phi"), "phi")
                                               : MonotoneEnvelope::constant(1.0);
            cfg.system.L = s.contains("L") ? envelope_from_json(s.at("L"), "L")
                                           : MonotoneEnvelope::affine(1.0, cfg.system.r);
            if (s.contains("f")) cfg.system.f_exprs = s.at("f").get<std::vector<std::string>>();
            if (s.contains("g")) cfg.system.g_exprs = s.at("g").get<std::vector<std::string>>();
            if (s.contains("disturbance_box"))
                for (const auto& row : s.at("disturbance_box"))
                    cfg.system.disturbance_box.emplace_back(row.at(0).get<double>(),
                                                            row.at(1).get<double>());
            cfg.has_system = true;
            if (cfg.system.n < 1 || cfg.system.n > 6)
                throw SchemaError("system.n must be in 1..6");
            if (!(cfg.system.sigma > 0)) throw SchemaError("system.sigma must be positive");
            if (!(cfg.system.r > 0)) throw SchemaError("system.r must be positive");
            if (!cfg.system.f_exprs.empty() &&
                cfg.system.f_exprs.size() != size_t(cfg.system.n))
                throw SchemaError("system.f must have n rows");
            if (cfg.system.f_exprs.size() != cfg.system.g_exprs.size())
                throw SchemaError("system.f and system.g must have matching rows");
        }
        if (j.contains("numerics")) {
            const json& nj = j.at("numerics");
            cfg.dt = nj.value("dt", 0.0);
            cfg.horizon = nj.value("horizon", cfg.horizon);
            cfg.seeds = nj.value("seeds", cfg.seeds);
            cfg.samples = nj.value("samples", cfg.samples);
            cfg.box = nj.value("box", cfg.box);
            cfg.tolerance = nj.value("tolerance", cfg.tolerance);
            cfg.dwell = nj.value("dwell", 0.0);
            cfg.x0_sup_norm = nj.value("x0_sup_norm", cfg.x0_sup_norm);
            cfg.open_loop = nj.value("open_loop", false);
            if (cfg.seeds < 1) throw SchemaError("numerics.seeds must be >= 1");
            if (cfg.horizon <= 0) throw SchemaError("numerics.horizon must be positive");
        }
        if (j.contains("output")) {
            cfg.out_dir = j.at("output").value("dir", cfg.out_dir);
            if (j.at("output").contains("formats"))
                cfg.formats = j.at("output").at("formats").get<std::vector<std::string>>();
        }
        if (j.contains("overrides")) {
            const json& o = j.at("overrides");
            if (o.contains("B2")) cfg.override_B2 = o.at("B2").get<std::string>();
            if (o.contains("convention")) {
                std::string c = o.at("convention").get<std::string>();
                if (c == "paper-5.13") cfg.convention = Convention::Conservative;
                else if (c == "example-5.46") cfg.convention = Convention::Benchmark;
                else throw SchemaError("unknown convention '" + c + "'");
            }
        }
        if (j.contains("reproduce")) {
            cfg.rep_sigma = j.at("reproduce").value("sigma", cfg.rep_sigma);
            cfg.rep_r = j.at("reproduce").value("r", cfg.rep_r);
        }
        cfg.gains_manifest = j.value("gains_manifest", std::string{});
    } catch (const SchemaError&) {
        throw;
    } catch (const std::exception& e) {
        throw SchemaError(std::string("config schema violation: ") + e.what());
    }
    if (cfg.dt == 0.0 && cfg.has_system) cfg.dt = cfg.system.r / 128.0;
    if (cfg.dwell == 0.0) cfg.dwell = cfg.dt;
    return cfg;
}

RunConfig default_benchmark_config() {
    RunConfig cfg;
    cfg.mode = "reproduce-example";
    benchmark2::Params p;
    cfg.system = benchmark2::make_spec(p);
    cfg.has_system = true;
    cfg.dt = cfg.system.r / 128.0;
    cfg.dwell = cfg.dt;
    return cfg;
}

int threads_cap() {
    if (const char* env = std::getenv("KFORGE_THREADS")) {
        int v = std::atoi(env);
        if (v >= 1) return v;
    }
    unsigned hc = std::thread::hardware_concurrency();
    return hc == 0 ? 2 : static_cast<int>(hc);
}

HistorySegment random_initial_history(std::uint64_t seed, int dim, double r, int m,
                                      double sup_target) {
    SplitMix rng{seed * 0x9e3779b97f4a7c15ULL + 0xD1B54A32D192ED03ULL};
    std::vector<double> A(static_cast<size_t>(dim), 0.0), B(A), W(A), P(A);
    for (int c = 0; c < dim; ++c) {
        A[size_t(c)] = rng.uniform(-1.0, 1.0);
        B[size_t(c)] = rng.uniform(-1.0, 1.0);
        W[size_t(c)] = rng.uniform(0.5, 6.0);
        P[size_t(c)] = rng.uniform(0.0, 6.283185307179586);
    }
    double target = sup_target * rng.uniform(0.3, 1.0);
    HistorySegment x = HistorySegment::sample(r, dim, m, [&](double theta, std::span<double> out) {
        for (int c = 0; c < dim; ++c)
            out[size_t(c)] = A[size_t(c)] * std::sin(W[size_t(c)] * theta + P[size_t(c)]) +
                             B[size_t(c)];
    });
    double sn = sup_norm(x);
    if (sn > 0) {
        double scale = target / sn;
        for (double& v : x.samples) v *= scale;
    }
    return x;
}

SynthesisOverrides make_overrides(const RunConfig& cfg) {
    SynthesisOverrides ov;
    ov.convention = cfg.convention;
    if (cfg.override_B2) {
        std::vector<std::string> fv{"s"};
        auto expr = sysdsl::parse(*cfg.override_B2, fv);
        ScalarFn eval{ExprScalarFn{expr}};
        auto dual_eval = [expr](D1 s) { return sysdsl::eval_scalar<D1>(*expr, s); };
        MonotoneEnvelope ds = deriv_sup_numeric(dual_eval, 1e4, 512);
        ov.B[2] = {eval, ds.eval_fn()};
    }
    return ov;
}

int cmd_synthesize(const RunConfig& cfg) {
    if (!cfg.has_system) return fail_with(cfg, 3, "schema", "synthesize needs a system block");
    fs::create_directories(cfg.out_dir);
    try {
        SynthesisResult res = synthesize(cfg.system, make_overrides(cfg));
        MasterReport master = verify_master_inequality(res, cfg.system.n, cfg.samples, cfg.box);
        write_file(fs::path(cfg.out_dir) / "gains_manifest.json", res.manifest_json() + "\n");
        write_file(fs::path(cfg.out_dir) / "master_report.json", master.to_json() + "\n");
        std::ostringstream prov;
        for (const auto& line : res.provenance) prov << line << "\n";
        write_file(fs::path(cfg.out_dir) / "provenance.txt", prov.str());
        emit_run_manifest(cfg, {{"spec_hash", res.spec_hash}, {"master_pass", master.pass}});
        std::cout << "synthesize: master inequality " << (master.pass ? "PASS" : "FAIL")
                  << " (worst margin " << master.worst_margin << ")\n";
        return master.pass ? 0 : 2;
    } catch (const SynthesisError& e) {
        return fail_with(cfg, 2, "synthesis", e.what());
    } catch (const std::exception& e) {
        return fail_with(cfg, 4, "runtime", e.what());
    }
}

int cmd_verify(const RunConfig& cfg) {
    if (!cfg.has_system) return fail_with(cfg, 3, "schema", "verify needs a system block");
    fs::create_directories(cfg.out_dir);
    try {
        SynthesisResult res = synthesize(cfg.system, make_overrides(cfg));
        MasterReport master = verify_master_inequality(res, cfg.system.n, cfg.samples, cfg.box);
        write_file(fs::path(cfg.out_dir) / "master_report.json", master.to_json() + "\n");
        emit_run_manifest(cfg, {{"spec_hash", res.spec_hash}, {"master_pass", master.pass}});
        std::cout << "verify: " << (master.pass ? "PASS" : "FAIL") << "\n";
        return master.pass ? 0 : 2;
    } catch (const SynthesisError& e) {
        return fail_with(cfg, 2, "synthesis", e.what());
    } catch (const std::exception& e) {
        return fail_with(cfg, 4, "runtime", e.what());
    }
}

namespace {

struct SeedOutcome {
    std::uint64_t seed = 0;
    RunStatus status = RunStatus::Completed;
    bool certified = false;
    CertifyReport report;
    TrajectoryRecord traj;
};

// fan seeds out over the thread cap; results land by index
template <class Fn>
void for_each_seed(int seeds, Fn&& fn) {
    int cap = std::max(1, threads_cap());
    std::vector<std::thread> pool;
    std::atomic<int> next{0};
    for (int w = 0; w < std::min(cap, seeds); ++w)
        pool.emplace_back([&] {
            for (;;) {
                int s = next.fetch_add(1);
                if (s >= seeds) return;
                fn(s);
            }
        });
    for (auto& t : pool) t.join();
}

}  // namespace

int cmd_simulate(const RunConfig& cfg) {
    if (!cfg.has_system || !cfg.system.has_dynamics())
        return fail_with(cfg, 3, "schema", "simulate needs a system block with f/g expressions");
    fs::create_directories(cfg.out_dir);
    try {
        TriangularSpec spec = cfg.system;
        spec.validate_and_normalize();
        GeneralRfdeSpec rfde = spec.to_rfde();
        FeedbackFn fb;
        std::string spec_hash = "open-loop";
        if (!cfg.open_loop) {
            SynthesisResult res = synthesize(cfg.system, make_overrides(cfg));
            fb = feedback_law(res);
            spec_hash = res.spec_hash;
        }
        int m = static_cast<int>(std::round(spec.r / cfg.dt));
        std::vector<SeedOutcome> outs(size_t(cfg.seeds));
        for_each_seed(cfg.seeds, [&](int s) {
            auto x0 = random_initial_history(std::uint64_t(s), spec.n, spec.r, m, cfg.x0_sup_norm);
            auto d = make_disturbance(std::uint64_t(s), cfg.dwell, spec.disturbance_box, 0.0,
                                      cfg.horizon);
            outs[size_t(s)].seed = std::uint64_t(s);
            outs[size_t(s)].traj = integrate(rfde, x0, d, fb, 0.0, cfg.horizon, cfg.dt);
            outs[size_t(s)].status = outs[size_t(s)].traj.status;
        });
        bool all_ok = true;
        for (const auto& o : outs) {
            write_file(fs::path(cfg.out_dir) / ("traj_seed" + std::to_string(o.seed) + ".csv"),
                       o.traj.to_csv());
            write_file(fs::path(cfg.out_dir) / ("run_seed" + std::to_string(o.seed) + ".json"),
                       o.traj.run_manifest_json(o.seed, cfg.horizon) + "\n");
            all_ok = all_ok && o.status == RunStatus::Completed;
        }
        emit_run_manifest(cfg, {{"spec_hash", spec_hash}, {"all_completed", all_ok}});
        std::cout << "simulate: " << cfg.seeds << " seeds, "
                  << (all_ok ? "all completed" : "failures present") << "\n";
        return all_ok ? 0 : 2;
    } catch (const SynthesisError& e) {
        return fail_with(cfg, 2, "synthesis", e.what());
    } catch (const IntegrateError& e) {
        return fail_with(cfg, 2, "integration", e.what());
    } catch (const std::exception& e) {
        return fail_with(cfg, 4, "runtime", e.what());
    }
}

int cmd_certify(const RunConfig& cfg) {
    if (!cfg.has_system || !cfg.system.has_dynamics())
        return fail_with(cfg, 3, "schema", "certify needs a system block with f/g expressions");
    fs::create_directories(cfg.out_dir);
    try {
        TriangularSpec spec = cfg.system;
        spec.validate_and_normalize();
        SynthesisResult res = synthesize(cfg.system, make_overrides(cfg));
        if (!cfg.gains_manifest.empty()) {
            // the law must re-instantiate the manifest it claims to certify
            std::ifstream is(cfg.gains_manifest);
            if (!is) return fail_with(cfg, 3, "schema", "cannot open gains manifest");
            json m;
            is >> m;
            if (m.value("spec_hash", "") != res.spec_hash)
                return fail_with(cfg, 2, "verification",
                                 "gains manifest hash does not match this configuration");
        }
        GeneralRfdeSpec rfde = spec.to_rfde();
        MaxTypeFunctional V = build_srclf(res);
        FeedbackFn fb = cfg.open_loop ? FeedbackFn{} : feedback_law(res);

        int m = static_cast<int>(std::round(spec.r / cfg.dt));
        std::vector<SeedOutcome> outs(size_t(cfg.seeds));
        for_each_seed(cfg.seeds, [&](int s) {
            auto x0 = random_initial_history(std::uint64_t(s), spec.n, spec.r, m, cfg.x0_sup_norm);
            auto d = make_disturbance(std::uint64_t(s), cfg.dwell, spec.disturbance_box, 0.0,
                                      cfg.horizon);
            SeedOutcome& o = outs[size_t(s)];
            o.seed = std::uint64_t(s);
            o.traj = integrate(rfde, x0, d, fb, 0.0, cfg.horizon, cfg.dt);
            o.status = o.traj.status;
            CertifyOptions opts;
            opts.mode = CertifyMode::Exponential;
            opts.sigma = res.sigma;
            opts.tol = cfg.tolerance;
            o.report = certify_decay(o.traj, [&](const HistorySegment& h) { return eval_V(V, h); },
                                     opts);
            o.certified = o.report.pass;
        });

        json agg;
        agg["seeds"] = cfg.seeds;
        agg["tolerance"] = cfg.tolerance;
        bool all_pass = true;
        json failures = json::array();
        auto fnl = [&](const HistorySegment& h) { return eval_V(V, h); };
        for (const auto& o : outs) {
            std::string tag = "seed" + std::to_string(o.seed);
            write_file(fs::path(cfg.out_dir) / ("traj_" + tag + ".csv"), o.traj.to_csv(fnl));
            write_file(fs::path(cfg.out_dir) / ("decay_" + tag + ".json"),
                       o.report.to_json() + "\n");
            // plot data: t, V, e^{2 sigma t} V
            std::ostringstream plot;
            plot << "t,V,V_scaled\n";
            for (size_t k = 0; k < o.traj.times.size(); ++k) {
                double t = o.traj.times[k];
                double v = fnl(o.traj.history_at(static_cast<int>(k)));
                plot << t << "," << v << "," << v * std::exp(2.0 * res.sigma * t) << "\n";
            }
            write_file(fs::path(cfg.out_dir) / ("plot_" + tag + ".csv"), plot.str());
            if (!o.certified) {
                all_pass = false;
                failures.push_back(o.seed);
            }
        }
        agg["all_pass"] = all_pass;
        agg["failing_seeds"] = failures;
        write_file(fs::path(cfg.out_dir) / "certify_aggregate.json", agg.dump(2) + "\n");
        emit_run_manifest(cfg, {{"spec_hash", res.spec_hash}, {"all_pass", all_pass}});
        std::cout << "certify: " << (all_pass ? "PASS" : "FAIL") << " (" << failures.size() << "/"
                  << cfg.seeds << " seeds failing)\n";
        return all_pass ? 0 : 2;
    } catch (const SynthesisError& e) {
        return fail_with(cfg, 2, "synthesis", e.what());
    } catch (const IntegrateError& e) {
        return fail_with(cfg, 2, "integration", e.what());
    } catch (const std::exception& e) {
        return fail_with(cfg, 4, "runtime", e.what());
    }
}

int cmd_reproduce_example(const RunConfig& cfg) {
    fs::create_directories(cfg.out_dir);
    try {
        benchmark2::Params prm{cfg.rep_sigma, cfg.rep_r};
        TriangularSpec spec = benchmark2::make_spec(prm);

        SynthesisOverrides conservative;
        conservative.convention = Convention::Conservative;
        SynthesisResult res_cons = synthesize(spec, conservative);

        SynthesisOverrides matched;
        matched.convention = Convention::Benchmark;
        matched.B[2] = benchmark2::B2_override(prm);
        SynthesisResult res_bench = synthesize(spec, matched);

        auto dev = [](double a, double b) { return std::fabs(a - b) / (1.0 + std::fabs(b)); };
        json rep;
        rep["sigma"] = prm.sigma;
        rep["r"] = prm.r;

        double d_mu1 = 0, d_g1 = 0, d_k1 = 0, d_rho1 = 0;
        for (int k = 0; k <= 800; ++k) {
            double xi = -5.0 + 10.0 * k / 800;
            double s = 5.0 * k / 800;
            double xiv[1] = {xi};
            d_mu1 = std::max(d_mu1, dev(res_bench.mu(1, xiv), benchmark2::mu1(prm, xi)));
            d_k1 = std::max(d_k1, dev(res_bench.k(1, xiv), benchmark2::k1(prm, xi)));
            d_g1 = std::max(d_g1, dev(res_bench.gamma(1, s), benchmark2::gamma1(prm, s)));
            d_rho1 = std::max(d_rho1, dev(res_bench.rho(1, s), benchmark2::rho1(prm, s)));
        }
        rep["mu1_max_dev"] = d_mu1;
        rep["gamma1_max_dev"] = d_g1;
        rep["k1_max_dev"] = d_k1;
        rep["rho1_max_dev"] = d_rho1;

        double d_g2 = 0, d_mu2 = 0, d_u = 0;
        for (int k = 0; k <= 400; ++k) {
            double s = 5.0 * k / 400;
            d_g2 = std::max(d_g2, dev(res_bench.gamma(2, s), benchmark2::gamma2(prm, s)));
        }
        for (int a = 0; a <= 40; ++a)
            for (int b = 0; b <= 40; ++b) {
                double x1 = -3.0 + 6.0 * a / 40, x2 = -3.0 + 6.0 * b / 40;
                double xiv[2] = {x1, x2};
                d_mu2 = std::max(d_mu2, dev(res_bench.mu(2, xiv), benchmark2::mu2(prm, x1, x2)));
                d_u = std::max(d_u, dev(res_bench.k(2, xiv), benchmark2::feedback(prm, x1, x2)));
            }
        rep["gamma2_max_dev_with_override"] = d_g2;
        rep["mu2_max_dev_with_override"] = d_mu2;
        rep["u_max_dev_with_override"] = d_u;

        // conservative bookkeeping carries the extra |grad k1| term in the
        // coupling weight; report the discrepancy explicitly
        double d_delta_raw = 0, d_delta_explained = 0;
        for (int k = 0; k <= 400; ++k) {
            double xi = -5.0 + 10.0 * k / 400;
            double xiv[1] = {xi};
            double syn = res_cons.delta(1, xiv);
            double ref = benchmark2::delta1(prm, xi);
            auto g = res_cons.grad_k(1, xiv);
            double gn = std::fabs(g[0]);
            d_delta_raw = std::max(d_delta_raw, dev(syn, ref));
            d_delta_explained = std::max(d_delta_explained, dev(syn, ref + gn));
        }
        rep["delta1_dev_conservative_vs_benchmark"] = d_delta_raw;
        rep["delta1_dev_after_adding_gradk1"] = d_delta_explained;
        rep["note"] = "conservative bookkeeping adds |grad k1| to the coupling weight; "
                      "the benchmark forms carry the gain sum only";

        write_file(fs::path(cfg.out_dir) / "reproduce_report.json", rep.dump(2) + "\n");
        emit_run_manifest(cfg, {{"spec_hash", res_bench.spec_hash}});
        std::cout << "reproduce: max deviations -- mu1 " << d_mu1 << ", gamma1 " << d_g1 << ", k1 "
                  << d_k1 << ", rho1 " << d_rho1 << ", gamma2 " << d_g2 << ", mu2 " << d_mu2
                  << ", u " << d_u << "\n";
        return 0;
    } catch (const SynthesisError& e) {
        return fail_with(cfg, 2, "synthesis", e.what());
    } catch (const std::exception& e) {
        return fail_with(cfg, 4, "runtime", e.what());
    }
}

int run(const RunConfig& cfg) {
    if (cfg.mode == "synthesize") return cmd_synthesize(cfg);
    if (cfg.mode == "simulate") return cmd_simulate(cfg);
    if (cfg.mode == "verify") return cmd_verify(cfg);
    if (cfg.mode == "certify") return cmd_certify(cfg);
    if (cfg.mode == "reproduce-example") return cmd_reproduce_example(cfg);
    std::cerr << "kforge: unknown mode '" << cfg.mode << "'\n";
    return 3;
}

}  // namespace kforge::cli
