#pragma once

// Max-type Lyapunov-Krasovskii functionals V(x) = max_theta e^{2 sigma theta}
// Q(x(theta)), numeric Dini-derivative estimation along the shift operator,
// the matching analytic two-branch bound, and trajectory decay certification.

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "kforge/dde_sim.hpp"
#include "kforge/history.hpp"

namespace kforge {

struct MaxTypeFunctional {
    double sigma = 0.0;  // decay rate > 0
    double r = 0.0;
    int dim = 0;
    std::function<double(std::span<const double>)> Q;                 // C1, >= 0, Q(0) = 0
    std::function<std::vector<double>(std::span<const double>)> gradQ;

    double operator()(const HistorySegment& x) const;  // eval_V
};

// max over the sample grid of e^{2 sigma theta} Q(x(theta)), refined by three
// golden-section iterations on the interpolant around the best node.
double eval_V(const MaxTypeFunctional& F, const HistorySegment& x);

struct DiniSchedule {
    double h0 = 1e-2;
    int steps = 13;   // h_k = h0 * 2^-k, k = 0..steps-1
    int keep = 4;     // estimate = max of the last `keep` quotients
};

struct DiniEstimate {
    double estimate = 0.0;
    std::vector<double> h;
    std::vector<double> quotient;
};

// Upper-biased limsup surrogate of (V(E_h(x;v)) - V(x))/h over the schedule.
// Works for any functional handle, not only max-type.
DiniEstimate dini_upper_estimate(const std::function<double(const HistorySegment&)>& V,
                                 const HistorySegment& x, std::span<const double> v,
                                 const DiniSchedule& schedule = {});

// Analytic two-branch bound for max-type functionals:
//   interior maximum  -> -2 sigma V(x)
//   tie at theta = 0  -> max{-2 sigma V(x), gradQ(x(0)) . v}
// tie_tol = 1e-9 (1 + V(x)). Throws if Q(x(0)) > V(x) + tie_tol.
double dini_bound_maxtype(const MaxTypeFunctional& F, const HistorySegment& x,
                          std::span<const double> v);

// ---- trajectory decay certification -----------------------------------------

enum class CertifyMode { Exponential, Dissipation };

struct CertifyOptions {
    CertifyMode mode = CertifyMode::Exponential;
    double sigma = 0.0;                         // exponential mode
    std::function<double(double)> rho;          // dissipation mode: rho(V)
    std::function<double(double)> q;            // dissipation mode: q(t)
    double tol = 1e-3;
};

struct CertifyReport {
    bool pass = false;
    std::string mode;
    double worst_margin = 0.0;
    double worst_time = 0.0;
    double tolerance = 0.0;
    int samples = 0;
    std::string failure;  //非 empty on structural failure (degenerate V(t0), blow-up)

    std::string to_json() const;
};

// Exponential mode checks sup_t V e^{2 sigma (t-t0)} / V(t0) <= 1 + tol and
// stepwise monotonicity of e^{2 sigma (t-t0)} V within tol. Dissipation mode
// checks dV/dt <= -rho(V) + q(t) + tol stepwise.
CertifyReport certify_decay(const TrajectoryRecord& traj,
                            const std::function<double(const HistorySegment&)>& V,
                            const CertifyOptions& opts);

}  // namespace kforge
