#pragma once

// Recursive synthesis engine for triangular time-delay systems. Builds the
// per-stage gains mu_i, the virtual controls k_i, the scalar envelopes
// gamma_i / b_i / rho_j / B_i and the coupling weights delta_j, emits the
// delay-free feedback law u = k_n(x(0)) and the max-type functional whose
// decay the closed loop certifies, and verifies the master dissipation
// inequality by sampling.

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "kforge/dde_sim.hpp"
#include "kforge/dual.hpp"
#include "kforge/funclass.hpp"
#include "kforge/lyapunov.hpp"

namespace kforge {

// Gain-term bookkeeping. Conservative keeps the (1 + sum of gains) factor in
// the coupling weights and the state-dependent cross term in the stage-2
// gain; Benchmark matches the algebra of the built-in two-state benchmark
// design (sum-only coupling weights, symmetric Young splits at stage 2).
enum class Convention { Conservative, Benchmark };

struct SynthesisError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// ---- declarative system description ----------------------------------------

struct TriangularSpec {
    int n = 0;
    double r = 0.0;
    double sigma = 0.0;
    MonotoneEnvelope phi;  // two-sided bound on the g_i; normalized to >= 1
    MonotoneEnvelope L;    // linear-growth bound on the f_i
    std::vector<std::string> f_exprs;  // optional concrete drift terms (DSL)
    std::vector<std::string> g_exprs;  // optional concrete input gains (DSL)
    std::vector<std::pair<double, double>> disturbance_box;

    // sigma, r > 0; 1 <= n <= 6; phi >= 1 on a grid (raised to 1 otherwise);
    // when concrete g_i are given, samples 1/phi <= g_i <= phi on random
    // histories. Throws SynthesisError on violation.
    void validate_and_normalize(std::uint64_t probe_seed = 1);

    bool has_dynamics() const { return !f_exprs.empty(); }
    // Full rhs: f_i + g_i * x_{i+1}(0), last row f_n + g_n * u.
    GeneralRfdeSpec to_rfde() const;
};

// ---- gain chain (jet-generic evaluation core) -------------------------------

namespace chain_detail {

template <class T>
T to_jet(double x) {
    if constexpr (std::is_same_v<T, double>) return x;
    else {
        T out;
        out.v = to_jet<decltype(out.v)>(x);
        return out;
    }
}

}  // namespace chain_detail

class GainChain {
  public:
    struct Core {
        int n = 0;
        double sigma = 0.0, r = 0.0, esr = 1.0;  // esr = exp(sigma r)
        ScalarFn phi, phi_ds, L, L_ds;
        Convention conv = Convention::Conservative;
    };
    struct Stage {  // stage i >= 2, stored at index i-2
        ScalarFn B, B_ds;
        bool overridden = false;
    };

    Core core;
    std::vector<Stage> stages;
    std::vector<std::optional<ScalarFn>> rho_over;  // index j-1, j = 1..n-1

    template <class T>
    T gamma(int i, const T& s) const {
        if (i == 1) {
            T w = s * core.esr;
            return core.esr * core.L(w) + core.phi(w);
        }
        const Stage& st = stages[size_t(i - 2)];
        T w2 = (double(i) * core.esr) * s;
        T Bv = st.B(w2);
        T w = w2 * Bv;
        return (double(i) * core.esr) * core.L(w) * Bv + core.phi(w);
    }

    // 1/b_i(s) = phi evaluated at the stage argument; b_i maps into (0, 1].
    template <class T>
    T inv_b(int i, const T& s) const {
        if (i == 1) return core.phi(s * core.esr);
        const Stage& st = stages[size_t(i - 2)];
        T w2 = (double(i) * core.esr) * s;
        T w = w2 * st.B(w2);
        return core.phi(w);
    }
    double b(int i, double s) const { return 1.0 / inv_b(i, s); }

    // Nondecreasing upper bound on the derivative of gamma_i, composed from
    // the leaf envelopes' own derivative bounds.
    template <class T>
    T gamma_dsup(int i, const T& s) const {
        if (i == 1) {
            T w = s * core.esr;
            return (core.esr * core.esr) * core.L_ds(w) + core.esr * core.phi_ds(w);
        }
        const Stage& st = stages[size_t(i - 2)];
        double ie = double(i) * core.esr;
        T w2 = ie * s;
        T Bv = st.B(w2);
        T dB = st.B_ds(w2);
        T w = w2 * Bv;
        T wprime = ie * (Bv + w2 * dB);
        return ie * (core.L_ds(w) * wprime * Bv + core.L(w) * dB * ie) + core.phi_ds(w) * wprime;
    }

    // Nondecreasing upper bound on |b_i'| over [0, s] (phi >= 1 absorbs the
    // 1/phi^2 factor).
    template <class T>
    T b_lip(int i, const T& s) const {
        if (i == 1) return core.esr * core.phi_ds(s * core.esr);
        const Stage& st = stages[size_t(i - 2)];
        double ie = double(i) * core.esr;
        T w2 = ie * s;
        T Bv = st.B(w2);
        T dB = st.B_ds(w2);
        T w = w2 * Bv;
        T wprime = ie * (Bv + w2 * dB);
        return core.phi_ds(w) * wprime;
    }

    // Majorant rho_j: dominates both the mean-value increment of s*gamma_j(s)
    // and the modulus of b_j. Coincides with gamma_j(s) + s*deriv_sup when phi
    // is constant.
    template <class T>
    T rho(int j, const T& s) const {
        if (rho_over[size_t(j - 1)]) return (*rho_over[size_t(j - 1)])(s);
        return gamma(j, s) + s * gamma_dsup(j, s) + b_lip(j, s);
    }

    template <class T>
    T z(int j, std::span<const T> xi) const {
        if (j == 1) return xi[0];
        return xi[size_t(j - 1)] - k(j - 1, xi.first(size_t(j - 1)));
    }

    template <class T>
    T k(int j, std::span<const T> xi) const {
        return -mu(j, xi) * z(j, xi);
    }

    // |grad k_j| times the gain sum (plus one under the conservative
    // convention). Differentiating this requires one more jet level, hence
    // the depth guard.
    template <class T>
    T delta(int j, std::span<const T> xi) const {
        if constexpr (jet_order_v<T> >= kMaxJetOrder) {
            throw SynthesisError("gain chain: jet depth exceeded (system order too large)");
        } else {
            using DT = Dual<T>;
            std::vector<DT> a(static_cast<size_t>(j), DT{});
            T g2 = chain_detail::to_jet<T>(0.0);
            for (int l = 0; l < j; ++l) {
                for (int m2 = 0; m2 < j; ++m2)
                    a[size_t(m2)] = DT(xi[size_t(m2)], chain_detail::to_jet<T>(m2 == l ? 1.0 : 0.0));
                DT kl = k<DT>(j, {a.data(), size_t(j)});
                g2 = g2 + kl.d * kl.d;
            }
            T gn = sqrt(g2);
            T msum = chain_detail::to_jet<T>(core.conv == Convention::Conservative ? 1.0 : 0.0);
            for (int l = 1; l <= j; ++l) msum = msum + mu(l, xi.first(size_t(l)));
            return gn * msum;
        }
    }

    template <class T>
    T mu(int i, std::span<const T> xi) const {
        const double sg = core.sigma;
        if (i == 1) {
            T p = 1.0 + xi[0] * xi[0];
            return (gamma(1, p) + double(core.n) * sg) * inv_b(1, p);
        }
        std::vector<T> zv(size_t(i) + 1);
        for (int j = 2; j <= i; ++j) zv[size_t(j)] = z(j, xi.first(size_t(j)));
        T p;
        if (i == 2) {
            p = 1.0 + xi[0] * xi[0] + zv[2] * zv[2];
        } else {
            p = chain_detail::to_jet<T>(double(i) / 2.0) + xi[0] * xi[0];
            for (int j = 2; j <= i; ++j) p = p + zv[size_t(j)] * zv[size_t(j)];
        }
        T invb = inv_b(i, p);
        if (i == 2) {
            T g2p = gamma(2, p);
            T g1p = gamma(1, p);
            T d1 = delta(1, xi.first(1));
            T r1 = rho(1, p);
            if (core.conv == Convention::Benchmark) {
                T bracket = (double(core.n) - 1.0) * sg + g2p + g1p * d1 +
                            (3.0 / (4.0 * sg)) * (g2p * g2p + g1p * g1p * d1 * d1 + r1 * r1);
                return invb * bracket;
            }
            T m1 = mu(1, xi.first(1));
            T bracket = (double(core.n) - 1.0) * sg + g2p + g1p * d1 + (1.0 / sg) * (g2p * g2p) +
                        (1.0 / sg) * (g1p * g1p * d1 * d1) +
                        (1.0 / sg) * (1.0 + m1 * m1 * xi[0] * xi[0]) * (r1 * r1);
            return invb * bracket;
        }
        // stage i > 2
        T gip = gamma(i, p);
        T sum_g = chain_detail::to_jet<T>(0.0);
        for (int k2 = 1; k2 <= i - 1; ++k2) sum_g = sum_g + gamma(k2, p);
        T dprev = delta(i - 1, xi.first(size_t(i - 1)));
        T termA = (double(core.n) + 1.0 - double(i)) * sg +
                  (5.0 * (double(i) - 1.0) / (4.0 * sg)) * gip * gip + gip + sum_g * dprev;
        T accA = chain_detail::to_jet<T>(0.0);
        for (int j = 2; j <= i - 1; ++j) {
            T rj = rho(j, p);
            T mj = mu(j, xi.first(size_t(j)));
            accA = accA + zv[size_t(j)] * zv[size_t(j)] * rj * rj * mj * mj;
        }
        termA = termA + (5.0 / (4.0 * sg)) * accA;
        T termB = ((double(i) - 1.0) / sg) * sum_g * sum_g * dprev * dprev;
        for (int j = 1; j <= i - 1; ++j) {
            T rj = rho(j, p);
            termB = termB + rj * rj;
        }
        for (int j = 2; j <= i - 1; ++j) {
            T sr = chain_detail::to_jet<T>(0.0);
            for (int k2 = 1; k2 <= j - 1; ++k2) sr = sr + rho(k2, p);
            T dj = delta(j - 1, xi.first(size_t(j - 1)));
            termB = termB + sr * sr * dj * dj;
        }
        {
            T r1 = rho(1, p);
            T m1 = mu(1, xi.first(1));
            termB = termB + xi[0] * xi[0] * r1 * r1 * m1 * m1;
        }
        return invb * (termA + (5.0 / (4.0 * sg)) * termB);
    }

    std::vector<double> grad_k(int j, std::span<const double> xi) const;

    // LHS - RHS of the stage-i master inequality at xi, optionally scaling the
    // top gain (mutation testing).
    double master_margin(int stage, std::span<const double> xi, double mu_top_scale = 1.0) const;
};

// ---- synthesis result --------------------------------------------------------

struct SynthesisOverrides {
    // B_i overrides keyed by stage index i (>= 2): eval + deriv_sup pair.
    std::map<int, std::pair<ScalarFn, ScalarFn>> B;
    // rho_j overrides keyed by j.
    std::map<int, ScalarFn> rho;
    Convention convention = Convention::Conservative;
};

struct SynthesisResult {
    int n = 0;
    double sigma = 0.0, r = 0.0;
    Convention convention = Convention::Conservative;
    std::shared_ptr<const GainChain> chain;

    std::vector<MonotoneEnvelope> gamma_env;  // gamma_i, index i-1
    std::vector<MonotoneEnvelope> B_env;      // B_i, i >= 2, index i-2
    std::vector<MonotoneEnvelope> rho_env;    // rho_j, index j-1, j <= n-1
    std::vector<std::string> provenance;
    std::string spec_hash;

    double mu(int i, std::span<const double> xi) const { return chain->mu(i, xi); }
    double k(int j, std::span<const double> xi) const { return chain->k(j, xi); }
    double b(int i, double s) const { return chain->b(i, s); }
    double gamma(int i, double s) const { return chain->gamma(i, s); }
    double rho(int j, double s) const { return chain->rho(j, s); }
    double delta(int j, std::span<const double> xi) const { return chain->delta(j, xi); }
    std::vector<double> grad_k(int j, std::span<const double> xi) const {
        return chain->grad_k(j, xi);
    }

    std::string manifest_json() const;
};

// ---- operations ----------------------------------------------------------------

// Runs the n-step recursion. Overrides replace internally computed B_i /
// rho_j after admissibility checks (B_i must dominate the scanned simplex
// maximum of the gain sum; rho_j must satisfy the sampled majorant
// inequality).
SynthesisResult synthesize(const TriangularSpec& spec, const SynthesisOverrides& overrides = {});

// rho_j(s) := gamma_j(s) + s * deriv_sup(gamma_j)(s). The b_j difference in
// the majorant inequality is <= 0, the gamma part is covered by the
// mean-value estimate.
MonotoneEnvelope rho_majorant(const MonotoneEnvelope& gamma_j);

struct BoundBResult {
    MonotoneEnvelope envelope;
    std::vector<double> node_s, node_v;  // inflated scan maxima (margin 1.1)
};

// Scans max{1 + sum_{j<i} mu_j} over the transformed simplex |z|_1 <= s per
// grid node, inflates by 1.1, and returns a C1 monotone envelope through the
// nodes. Overestimation is admissible.
BoundBResult bound_B(int stage, const GainChain& partial, double s_max, int grid_n);

struct MasterReport {
    bool pass = false;
    int stage = 0;
    int samples = 0;
    double worst_margin = 0.0;  // normalized: (LHS-RHS)/(1+|RHS|)
    std::vector<double> worst_point;
    double tolerance = 1e-9;

    std::string to_json() const;
};

// Samples LHS-RHS of the stage master inequality at quasi-random points in
// [-box, box]^stage; pass iff the worst normalized margin <= 1e-9.
MasterReport verify_master_inequality(const SynthesisResult& res, int stage, int samples,
                                      double box, double mu_top_scale = 1.0);

// V with Q(xi) = xi_1^2 + sum |xi_j - k_{j-1}|^2 and the matching gradient.
MaxTypeFunctional build_srclf(const SynthesisResult& res);

// u = k_n of the newest sample only; time invariant, delay independent.
FeedbackFn feedback_law(const SynthesisResult& res);

}  // namespace kforge
