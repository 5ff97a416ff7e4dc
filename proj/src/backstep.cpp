#include "kforge/backstep.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "json.hpp"
#include "kforge/sysdsl.hpp"

namespace kforge {

namespace {

std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string hash_hex(const std::string& s) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

double halton(int index, int base) {
    double f = 1.0, r = 0.0;
    while (index > 0) {
        f /= base;
        r += f * (index % base);
        index /= base;
    }
    return r;
}

constexpr int kHaltonBases[6] = {2, 3, 5, 7, 11, 13};

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

// phi must stay >= 1 for the two-sided gain bound to be self-consistent.
ScalarFn raise_to_one(const ScalarFn& f, double grid_max, bool& changed) {
    changed = false;
    double lowest = std::numeric_limits<double>::infinity();
    for (int k = 0; k <= 256; ++k) lowest = std::min(lowest, f(grid_max * k / 256.0));
    if (lowest >= 1.0 - 1e-12) return f;
    changed = true;
    return std::visit(
        [&](const auto& g) -> ScalarFn {
            using F = std::decay_t<decltype(g)>;
            if constexpr (std::is_same_v<F, ConstFn>) return ScalarFn::constant(std::max(g.c, 1.0));
            else if constexpr (std::is_same_v<F, AffineFn>) {
                if (g.c1 <= 0.0) return ScalarFn::constant(std::max(g.c0, 1.0));
                double knee = (1.0 - g.c0) / g.c1;
                PlFn pl;
                pl.s = {0.0, knee, knee + 1.0};
                pl.v = {1.0, 1.0, 1.0 + g.c1};
                return ScalarFn(std::move(pl));
            } else if constexpr (std::is_same_v<F, PlFn>) {
                PlFn pl = g;
                for (double& v : pl.v) v = std::max(v, 1.0);
                return ScalarFn(std::move(pl));
            } else if constexpr (std::is_same_v<F, PchipFn>) {
                PchipFn pc = g;
                for (double& v : pc.v) v = std::max(v, 1.0);
                for (size_t k = 0; k < pc.v.size(); ++k)
                    if (pc.v[k] <= 1.0) pc.m[k] = 0.0;
                return ScalarFn(std::move(pc));
            } else {
                throw SynthesisError(
                    "phi dips below 1 and cannot be normalized for this representation; supply "
                    "phi >= 1");
            }
        },
        f.rep());
}

}  // namespace

void TriangularSpec::validate_and_normalize(std::uint64_t probe_seed) {
    if (n < 1 || n > 6) throw SynthesisError("triangular spec: order n must be in 1..6");
    if (!(r > 0)) throw SynthesisError("triangular spec: delay r must be positive");
    if (!(sigma > 0)) throw SynthesisError("triangular spec: decay rate sigma must be positive");
    if (!phi.scalar_backed() || !L.scalar_backed())
        throw SynthesisError("triangular spec: phi and L must be node tables or closed forms");
    if (!f_exprs.empty() &&
        (f_exprs.size() != size_t(n) || g_exprs.size() != size_t(n)))
        throw SynthesisError("triangular spec: f/g expression lists must have n rows");

    bool changed = false;
    ScalarFn raised = raise_to_one(phi.eval_fn(), 20.0, changed);
    if (changed) phi = MonotoneEnvelope(raised, phi.deriv_sup_fn(), phi.provenance());

    if (auto bad = phi.check_invariants(20.0)) throw SynthesisError("phi: " + *bad);
    if (auto bad = L.check_invariants(20.0)) throw SynthesisError("L: " + *bad);

    if (!f_exprs.empty() && !disturbance_box.empty()) {
        // sampled two-sided gain check on random histories
        SplitMix rng{probe_seed * 2654435761ULL + 1};
        for (int trial = 0; trial < 24; ++trial) {
            double amp = rng.uniform(0.1, 3.0);
            HistorySegment x = HistorySegment::sample(
                r, n, 32,
                [&](double theta, std::span<double> out) {
                    for (int c = 0; c < n; ++c)
                        out[size_t(c)] = amp * std::sin(3.0 * (c + 1) * theta + double(c));
                });
            std::vector<double> d(disturbance_box.size());
            for (size_t c = 0; c < d.size(); ++c)
                d[c] = rng.uniform(disturbance_box[c].first, disturbance_box[c].second);
            double t = rng.uniform(0.0, 10.0);
            for (int i = 1; i <= n; ++i) {
                double norm_i = 0.0;
                for (int k = 0; k <= x.m; ++k) {
                    double s2 = 0;
                    for (int c = 0; c < i; ++c) s2 += x.node(k)[size_t(c)] * x.node(k)[size_t(c)];
                    norm_i = std::max(norm_i, s2);
                }
                norm_i = std::sqrt(norm_i);
                sysdsl::EvalEnv env{t, 0.0, d, &x, r};
                double gi = sysdsl::eval(*sysdsl::parse(g_exprs[size_t(i - 1)]), env);
                double hi = phi(norm_i), lo = 1.0 / hi;
                if (gi < lo - 1e-9 * (1 + hi) || gi > hi + 1e-9 * (1 + hi))
                    throw SynthesisError("triangular spec: g_" + std::to_string(i) +
                                         " escapes the phi envelope at a sampled history");
            }
        }
    }
}

GeneralRfdeSpec TriangularSpec::to_rfde() const {
    if (f_exprs.empty()) throw SynthesisError("triangular spec: no concrete dynamics declared");
    std::vector<std::string> rows(static_cast<size_t>(n));
    for (int i = 1; i <= n; ++i) {
        std::string tail = i < n ? ("x" + std::to_string(i + 1) + "(0)") : std::string("u");
        rows[size_t(i - 1)] =
            "(" + f_exprs[size_t(i - 1)] + ") + (" + g_exprs[size_t(i - 1)] + ")*" + tail;
    }
    auto bound = sysdsl::bind_rhs(rows, n, static_cast<int>(disturbance_box.size()), r);
    GeneralRfdeSpec spec;
    spec.dim = n;
    spec.r = r;
    spec.disturbance_box = disturbance_box;
    spec.rhs = [b = std::move(bound)](double t, std::span<const double> d,
                                      const HistorySegment& x, double u, std::span<double> out) {
        b(t, d, x, u, out);
    };
    return spec;
}

std::vector<double> GainChain::grad_k(int j, std::span<const double> xi) const {
    std::vector<double> g(static_cast<size_t>(j), 0.0);
    std::vector<D1> a(static_cast<size_t>(j), D1{});
    for (int l = 0; l < j; ++l) {
        for (int m2 = 0; m2 < j; ++m2) a[size_t(m2)] = D1(xi[size_t(m2)], m2 == l ? 1.0 : 0.0);
        g[size_t(l)] = k<D1>(j, {a.data(), size_t(j)}).d;
    }
    return g;
}

double GainChain::master_margin(int stage, std::span<const double> xi, double mu_top_scale) const {
    std::vector<double> zv(size_t(stage) + 1, 0.0);
    zv[1] = xi[0];
    for (int j = 2; j <= stage; ++j) zv[size_t(j)] = z(j, xi.first(size_t(j)));
    double s = 0.0;
    for (int j = 1; j <= stage; ++j) s += std::fabs(zv[size_t(j)]);

    double lhs = -xi[0] * xi[0] * b(1, s) * mu(1, xi.first(1)) + s * std::fabs(xi[0]) * gamma(1, s);
    double sumsq = xi[0] * xi[0];
    for (int j = 2; j <= stage; ++j) {
        double muj = mu(j, xi.first(size_t(j)));
        if (j == stage) muj *= mu_top_scale;
        double zj = zv[size_t(j)];
        lhs += -zj * zj * b(j, s) * muj + s * std::fabs(zj) * gamma(j, s);
        double sum_g = 0.0;
        for (int k2 = 1; k2 <= j - 1; ++k2) sum_g += gamma(k2, s);
        lhs += s * std::fabs(zj) * sum_g * delta(j - 1, xi.first(size_t(j - 1)));
        sumsq += zj * zj;
    }
    double rhs = -(double(core.n) + 1.0 - double(stage)) * core.sigma * sumsq;
    return lhs - rhs;
}

MonotoneEnvelope rho_majorant(const MonotoneEnvelope& gamma_j) {
    auto ev = [g = gamma_j](double s) { return g(s) + s * g.deriv_sup(s); };
    auto ds = [g = gamma_j](double s) { return 2.0 * g.deriv_sup(s); };
    return MonotoneEnvelope(std::function<double(double)>(ev), std::function<double(double)>(ds),
                            "majorant: gamma + s * deriv_sup(gamma)");
}

BoundBResult bound_B(int stage, const GainChain& partial, double s_max, int grid_n) {
    if (stage < 2) throw SynthesisError("bound_B: stages start at 2");
    if (int(partial.stages.size()) < stage - 2)
        throw SynthesisError("bound_B: earlier stages incomplete");
    const int q = stage - 1;  // z_i maximizes at 0; effective scan dimension
    const int G = q == 1 ? 129 : (q == 2 ? 33 : 9);

    // recover xi from simplex coordinates z
    std::vector<double> xi(static_cast<size_t>(q), 0.0);
    auto gain_sum = [&](std::span<const double> zc) -> double {
        for (int j = 1; j <= q; ++j) {
            double kprev = j == 1 ? 0.0 : partial.k(j - 1, std::span<const double>(xi).first(size_t(j - 1)));
            xi[size_t(j - 1)] = zc[size_t(j - 1)] + kprev;
        }
        double acc = 0.0;
        for (int j = 1; j <= q; ++j)
            acc += partial.mu(j, std::span<const double>(xi).first(size_t(j)));
        return acc;
    };

    auto scan_at = [&](double s) -> double {
        double best = 0.0;
        std::vector<double> zc(size_t(q), 0.0);
        if (q == 1) {
            for (int g = 0; g <= G; ++g) {
                double z1 = -s + 2.0 * s * g / G;
                zc[0] = z1;
                best = std::max(best, gain_sum(zc));
            }
        } else if (q == 2) {
            for (int ga = 0; ga <= G; ++ga) {
                double a = -1.0 + 2.0 * ga / G;
                double rem = 1.0 - std::fabs(a);
                for (int gb = 0; gb <= G; ++gb) {
                    double bfrac = rem <= 0 ? 0.0 : -rem + 2.0 * rem * gb / G;
                    zc[0] = a * s;
                    zc[1] = bfrac * s;
                    best = std::max(best, gain_sum(zc));
                }
            }
        } else {
            std::function<void(int, double)> rec = [&](int d, double budget) {
                if (d == q - 1) {
                    for (int g = 0; g <= G; ++g) {
                        zc[size_t(d)] = -budget + 2.0 * budget * g / std::max(G, 1);
                        best = std::max(best, gain_sum(zc));
                        if (budget == 0) break;
                    }
                    return;
                }
                for (int g = 0; g <= G; ++g) {
                    double v = -budget + 2.0 * budget * g / std::max(G, 1);
                    zc[size_t(d)] = v;
                    rec(d + 1, budget - std::fabs(v));
                    if (budget == 0) break;
                }
            };
            rec(0, s);
        }
        return best;
    };

    // the gain sum grows doubly exponentially with the stage index; shrink
    // the scan range until its top node is representable
    {
        std::vector<double> corner(size_t(q), 0.0);
        int shrink = 0;
        for (; shrink < 600; ++shrink) {
            corner[0] = s_max;
            double probe = gain_sum(corner);
            if (std::isfinite(probe)) break;
            s_max *= 0.5;
        }
        if (shrink == 600)
            throw SynthesisError("bound_B: non-finite gain sum during scan at |z|_1 = " +
                                 std::to_string(s_max));
    }

    BoundBResult out;
    grid_n = std::max(grid_n, 8);
    double run = 0.0;
    for (int k = 0; k <= grid_n; ++k) {
        double frac = double(k) / grid_n;
        double s = s_max * frac * frac;  // dense near the origin
        double v = scan_at(s);
        if (!std::isfinite(v)) {
            if (k >= 8) break;  // keep the finite prefix; envelope extends linearly
            throw SynthesisError("bound_B: non-finite gain sum during scan at |z|_1 = " +
                                 std::to_string(s));
        }
        run = std::max(run, 1.0 + v);
        out.node_s.push_back(s);
        out.node_v.push_back(run * 1.1);
    }
    // a C1 monotone envelope keeps downstream gradients clean
    ScalarFn eval = pchip_monotone(out.node_s, out.node_v);
    ScalarFn dsup = pchip_deriv_sup(eval);
    out.envelope = MonotoneEnvelope(std::move(eval), std::move(dsup),
                                    "simplex scan, margin 1.1, C1 monotone envelope");
    return out;
}

namespace {

// worst-case argument of the stage-i gain over the probe box, to size the
// B_i scan range
double probe_p_max(const GainChain& chain, int stage, double box) {
    const int G = 6;
    std::vector<double> xi(static_cast<size_t>(stage), 0.0);
    double pmax = stage == 2 ? 1.0 : double(stage) / 2.0;
    std::function<void(int)> rec = [&](int d) {
        if (d == stage) {
            double p = stage == 2 ? 1.0 : double(stage) / 2.0;
            p += xi[0] * xi[0];
            for (int j = 2; j <= stage; ++j) {
                double zj = chain.z(j, std::span<const double>(xi).first(size_t(j)));
                p += zj * zj;
            }
            if (std::isfinite(p)) pmax = std::max(pmax, p);
            return;
        }
        for (int g = 0; g <= G; ++g) {
            xi[size_t(d)] = -box + 2.0 * box * g / G;
            rec(d + 1);
        }
    };
    rec(0);
    return pmax;
}

void validate_rho_override(const GainChain& chain, int j, const ScalarFn& rho_fn, double s_hi) {
    SplitMix rng{0xAB12CD34EF560000ULL + std::uint64_t(j)};
    for (int trial = 0; trial < 10000; ++trial) {
        double s = rng.uniform(0.0, s_hi);
        double sp = rng.uniform(0.0, s);
        double lhs = chain.b(j, s) - chain.b(j, sp) + s * chain.gamma(j, s) -
                     sp * chain.gamma(j, sp);
        double rhs = (s - sp) * rho_fn(s);
        if (lhs > rhs * (1 + 1e-9) + 1e-12)
            throw SynthesisError("rho override for stage " + std::to_string(j) +
                                 " violates the majorant inequality at s' = " + std::to_string(sp) +
                                 ", s = " + std::to_string(s));
    }
}

}  // namespace

SynthesisResult synthesize(const TriangularSpec& spec_in, const SynthesisOverrides& overrides) {
    TriangularSpec spec = spec_in;
    spec.validate_and_normalize();
    for (const auto& [i, fn] : overrides.B)
        if (i < 2 || i > spec.n)
            throw SynthesisError("B override stage " + std::to_string(i) + " out of range 2.." +
                                 std::to_string(spec.n));
    for (const auto& [j, fn] : overrides.rho)
        if (j < 1 || j > spec.n - 1)
            throw SynthesisError("rho override index " + std::to_string(j) + " out of range 1.." +
                                 std::to_string(spec.n - 1));

    auto chain = std::make_shared<GainChain>();
    chain->core.n = spec.n;
    chain->core.sigma = spec.sigma;
    chain->core.r = spec.r;
    chain->core.esr = std::exp(spec.sigma * spec.r);
    chain->core.phi = spec.phi.eval_fn();
    chain->core.phi_ds = spec.phi.deriv_sup_fn();
    chain->core.L = spec.L.eval_fn();
    chain->core.L_ds = spec.L.deriv_sup_fn();
    chain->core.conv = overrides.convention;
    chain->rho_over.assign(size_t(std::max(spec.n - 1, 0)), std::nullopt);

    SynthesisResult res;
    res.n = spec.n;
    res.sigma = spec.sigma;
    res.r = spec.r;
    res.convention = overrides.convention;

    auto log = [&](std::string s) { res.provenance.push_back(std::move(s)); };
    log("stage 1: gamma_1 from the scaled drift and gain envelopes; mu_1 = (gamma_1(1+s^2) + n "
        "sigma) / b_1(1+s^2)");
    log(std::string("bookkeeping convention: ") +
        (overrides.convention == Convention::Conservative ? "conservative (1 + gain sum)"
                                                          : "benchmark (gain sum only)"));
    log("smoothness: internally scanned B_i are C1 monotone cubics through inflated scan nodes; "
        "the recursion needs only their monotone bounds");

    for (int i = 2; i <= spec.n; ++i) {
        double pmax = probe_p_max(*chain, i, 5.0);
        double smax = double(i) * chain->core.esr * pmax * 1.25;
        auto it = overrides.B.find(i);
        GainChain::Stage stage;
        if (it != overrides.B.end()) {
            // admissibility: dominate the scanned gain sum (without the +1
            // headroom, which the benchmark forms do not carry)
            BoundBResult req = bound_B(i, *chain, smax, 32);
            for (size_t k = 0; k < req.node_s.size(); ++k) {
                double need = (req.node_v[k] / 1.1) - 1.0;  // raw scan maximum
                double got = it->second.first(req.node_s[k]);
                if (got < need * (1 - 1e-9) - 1e-12)
                    throw SynthesisError("B override for stage " + std::to_string(i) +
                                         " falls below the scanned gain sum at s = " +
                                         fmt17(req.node_s[k]) + " (needs " + fmt17(need) +
                                         ", has " + fmt17(got) + ")");
            }
            stage.B = it->second.first;
            stage.B_ds = it->second.second;
            stage.overridden = true;
            log("stage " + std::to_string(i) + ": B override accepted (dominates the scanned gain "
                "sum on " + std::to_string(req.node_s.size()) + " nodes up to s = " + fmt17(smax) +
                ")");
        } else {
            BoundBResult bb = bound_B(i, *chain, smax, 48);
            stage.B = bb.envelope.eval_fn();
            stage.B_ds = bb.envelope.deriv_sup_fn();
            log("stage " + std::to_string(i) + ": B from internal simplex scan, " +
                std::to_string(bb.node_s.size()) + " nodes up to s = " + fmt17(smax) +
                ", margin 1.1");
        }
        chain->stages.push_back(std::move(stage));

        int j = i - 1;  // majorant feeding this stage
        auto rit = overrides.rho.find(j);
        if (rit != overrides.rho.end()) {
            validate_rho_override(*chain, j, rit->second, std::min(std::max(10.0, smax), 1e8));
            chain->rho_over[size_t(j - 1)] = rit->second;
            log("rho_" + std::to_string(j) + ": override accepted (sampled majorant inequality on "
                "10^4 pairs)");
        } else {
            log("rho_" + std::to_string(j) +
                ": gamma + s * deriv_sup(gamma) + gain-bound modulus term");
        }
        log("stage " + std::to_string(i) + ": mu_" + std::to_string(i) +
            " by the stage selection at the shifted quadratic argument");
    }

    // probe the top gain for finiteness
    {
        std::vector<double> probe(static_cast<size_t>(spec.n), 0.3);
        std::span<const double> pspan(probe);
        double v = chain->mu(spec.n, pspan);
        if (!std::isfinite(v))
            throw SynthesisError("synthesize: non-finite gain at probe point (0.3, ..., 0.3)");
        for (int jj = 1; jj <= spec.n; ++jj) {
            double kv = chain->k(jj, pspan.first(size_t(jj)));
            if (!std::isfinite(kv))
                throw SynthesisError("synthesize: non-finite virtual control at probe point");
        }
    }

    res.chain = chain;
    for (int i = 1; i <= spec.n; ++i) {
        auto ev = [chain, i](double s) { return chain->gamma(i, s); };
        auto ds = [chain, i](double s) { return chain->gamma_dsup(i, s); };
        res.gamma_env.emplace_back(std::function<double(double)>(ev),
                                   std::function<double(double)>(ds),
                                   "gamma_" + std::to_string(i));
    }
    for (int i = 2; i <= spec.n; ++i) {
        const auto& st = chain->stages[size_t(i - 2)];
        res.B_env.emplace_back(st.B, st.B_ds,
                               st.overridden ? "B override" : "B internal scan");
    }
    for (int j = 1; j + 1 <= spec.n; ++j) {
        auto ev = [chain, j](double s) { return chain->rho(j, s); };
        auto ds = [chain, j](double s) { return 2.0 * chain->gamma_dsup(j, s); };
        res.rho_env.emplace_back(std::function<double(double)>(ev),
                                 std::function<double(double)>(ds), "rho_" + std::to_string(j));
    }

    {
        std::ostringstream os;
        os << spec.n << "|" << fmt17(spec.sigma) << "|" << fmt17(spec.r) << "|"
           << (overrides.convention == Convention::Conservative ? "cons" : "bench");
        for (auto [s, v] : spec.phi.node_table(10.0, 16)) os << ";" << fmt17(s) << "," << fmt17(v);
        os << "|L";
        for (auto [s, v] : spec.L.node_table(10.0, 16)) os << ";" << fmt17(s) << "," << fmt17(v);
        for (const auto& e : spec.f_exprs) os << "|f:" << e;
        for (const auto& e : spec.g_exprs) os << "|g:" << e;
        for (auto [lo, hi] : spec.disturbance_box) os << "|d:" << fmt17(lo) << "," << fmt17(hi);
        for (const auto& [i, fn] : overrides.B) os << "|OB" << i;
        res.spec_hash = hash_hex(os.str());
    }
    return res;
}

std::string MasterReport::to_json() const {
    nlohmann::json j;
    j["pass"] = pass;
    j["stage"] = stage;
    j["samples"] = samples;
    j["worst_margin"] = worst_margin;
    j["worst_point"] = worst_point;
    j["tolerance"] = tolerance;
    return j.dump(2);
}

MasterReport verify_master_inequality(const SynthesisResult& res, int stage, int samples,
                                      double box, double mu_top_scale) {
    if (stage < 1 || stage > res.n) throw SynthesisError("verify: stage out of range");
    MasterReport rep;
    rep.stage = stage;
    rep.samples = samples;
    rep.worst_margin = -std::numeric_limits<double>::infinity();
    rep.worst_point.assign(size_t(stage), 0.0);
    std::vector<double> xi(static_cast<size_t>(stage), 0.0);
    for (int s = 0; s < samples; ++s) {
        for (int d = 0; d < stage; ++d)
            xi[size_t(d)] = box * (2.0 * halton(s + 1, kHaltonBases[d]) - 1.0);
        double margin = res.chain->master_margin(stage, xi, mu_top_scale);
        double sumsq = xi[0] * xi[0];
        for (int j = 2; j <= stage; ++j) {
            double zj = res.chain->z(j, std::span<const double>(xi).first(size_t(j)));
            sumsq += zj * zj;
        }
        double rhs = (double(res.n) + 1.0 - double(stage)) * res.sigma * sumsq;
        double normalized = margin / (1.0 + std::fabs(rhs));
        if (normalized > rep.worst_margin) {
            rep.worst_margin = normalized;
            rep.worst_point = xi;
        }
    }
    rep.pass = rep.worst_margin <= rep.tolerance;
    return rep;
}

MaxTypeFunctional build_srclf(const SynthesisResult& res) {
    auto chain = res.chain;
    int n = res.n;
    MaxTypeFunctional F;
    F.sigma = res.sigma;
    F.r = res.r;
    F.dim = n;
    F.Q = [chain, n](std::span<const double> xi) {
        double q = xi[0] * xi[0];
        for (int j = 2; j <= n; ++j) {
            double zj = chain->z(j, xi.first(size_t(j)));
            q += zj * zj;
        }
        return q;
    };
    F.gradQ = [chain, n](std::span<const double> xi) {
        std::vector<double> g(static_cast<size_t>(n), 0.0);
        std::vector<D1> a(static_cast<size_t>(n), D1{});
        for (int l = 0; l < n; ++l) {
            for (int m2 = 0; m2 < n; ++m2) a[size_t(m2)] = D1(xi[size_t(m2)], m2 == l ? 1.0 : 0.0);
            D1 q = a[0] * a[0];
            for (int j = 2; j <= n; ++j) {
                D1 zj = chain->z<D1>(j, std::span<const D1>(a).first(size_t(j)));
                q = q + zj * zj;
            }
            g[size_t(l)] = q.d;
        }
        return g;
    };
    return F;
}

FeedbackFn feedback_law(const SynthesisResult& res) {
    auto chain = res.chain;
    int n = res.n;
    return [chain, n](double, const HistorySegment& x) -> double {
        if (x.dim != n) throw SynthesisError("feedback: dimension mismatch");
        return chain->k(n, x.newest());
    };
}

std::string SynthesisResult::manifest_json() const {
    nlohmann::json j;
    j["schema"] = "kforge-gains-v1";
    j["spec_hash"] = spec_hash;
    j["n"] = n;
    j["sigma"] = sigma;
    j["r"] = r;
    j["convention"] = convention == Convention::Conservative ? "paper-5.13" : "example-5.46";
    auto table = [](const MonotoneEnvelope& e) {
        nlohmann::json t = nlohmann::json::array();
        for (auto [s, v] : e.node_table()) t.push_back({s, v});
        return t;
    };
    nlohmann::json overridden = nlohmann::json::array();
    for (int i = 1; i <= n; ++i) {
        nlohmann::json stage;
        stage["i"] = i;
        stage["gamma_nodes"] = table(gamma_env[size_t(i - 1)]);
        if (i >= 2) {
            stage["B_nodes"] = table(B_env[size_t(i - 2)]);
            stage["B_overridden"] = chain->stages[size_t(i - 2)].overridden;
            if (chain->stages[size_t(i - 2)].overridden) overridden.push_back(i);
        }
        if (i <= n - 1) stage["rho_nodes"] = table(rho_env[size_t(i - 1)]);
        nlohmann::json bt = nlohmann::json::array();
        for (int k = 0; k <= 16; ++k) {
            double s = 10.0 * k / 16;
            bt.push_back({s, chain->b(i, s)});
        }
        stage["b_nodes"] = bt;
        j["stages"].push_back(stage);
    }
    j["override_records"] = overridden;
    j["provenance"] = provenance;
    return j.dump(2);
}

}  // namespace kforge
