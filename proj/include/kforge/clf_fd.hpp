#pragma once

// Finite-dimensional CLF toolkit for systems whose V-derivative is quadratic
// in the scalar control: the two Psi constructions, the explicit negative-a
// feedback, min-norm selection over an interval control set, implication
// probes, and trajectory certification for ODE closed loops.

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "kforge/dde_sim.hpp"

namespace kforge::clf {

struct QuadraticControlData {
    // Coefficients of sup_d dV/dt = a u^2 + b u + c along the system.
    std::function<double(double, std::span<const double>)> a, b, c;
    std::function<double(double)> rho;  // positive definite, of V
    std::function<double(double)> q;    // class E, of t
    std::function<double(double, std::span<const double>)> V;

    // Closed-form infimum over u of a u^2 + b u + c at (t, x): -b^2/(4a)+c for
    // a > 0; -inf for a < 0 or (a = 0, b != 0); c otherwise.
    double inf_over_u(double t, std::span<const double> x) const;

    // Samples the admissibility condition inf_u(...) <= -rho(V) + q(t).
    bool admissible_at(double t, std::span<const double> x) const;
};

enum class PsiVariant { Full, LinearTail };

// Full: rho(V) + (a u^2 + b u + c) for a >= 0, else rho(V) - b^2/(4a) + c.
// LinearTail: same for a >= 0, else rho(V) + b u + c.
double psi_quadratic(const QuadraticControlData& data, double t, std::span<const double> x,
                     double u, PsiVariant variant);

struct WrongRegionError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// u = (sqrt(b^2 + 4|ac| + 4|a| rho(V)) - b) / (2a), defined on a < 0 only;
// postcondition a u^2 + b u + c + rho(V) <= 0 is checked to 1e-10.
double feedback_k1_negative_a(const QuadraticControlData& data, double t,
                              std::span<const double> x);

struct MinNormResult {
    bool feasible = false;
    double u = 0.0;
    double residual = 0.0;  // min over U of Psi - q when infeasible
};

// Minimum-|u| element of {u in U : Psi(t,x,u) <= q(t)}, from the quadratic's
// roots in closed form.
MinNormResult min_norm_feedback(const QuadraticControlData& data, double t,
                                std::span<const double> x, std::pair<double, double> U,
                                PsiVariant variant = PsiVariant::Full);

struct ProbeGrid {
    std::vector<double> t;
    std::vector<std::vector<double>> x;
    // Index chains into the probe list approaching a = 0 from a < 0.
    std::vector<std::vector<std::size_t>> sequences;
    double ratio_tol = 1e-6;
};

struct ImplicationReport {
    bool neg_a_ok = true;      // inf bound holds wherever a < 0
    bool zero_b_ok = true;     // c <= -rho(V)+q wherever a < 0, b == 0
    bool ratio_ok = true;      // b^2/|a| -> 0 along the declared sequences
    std::optional<std::size_t> first_neg_a_violation;
    std::optional<std::size_t> first_zero_b_violation;
    std::vector<std::vector<double>> sequence_ratios;
    std::string to_json() const;
};

ImplicationReport implication_checks(const QuadraticControlData& data, const ProbeGrid& grid);

struct OdeCertifyReport {
    bool pass = false;
    RunStatus status = RunStatus::Completed;
    double worst_margin = 0.0;
    double worst_time = 0.0;
    double tolerance = 0.0;
    std::string to_json() const;
};

// RK4 integration of the closed loop, then the stepwise dissipation check
// dV/dt <= -rho(V) + q(t) + tol via the chain rule at step midpoints.
OdeCertifyReport ode_certify(
    int dim, const OdeRhsFn& rhs, const OdeFeedbackFn& feedback,
    const std::function<double(double, std::span<const double>)>& V,
    const std::function<double(double, std::span<const double>)>& dV_dt,
    const std::function<std::vector<double>(double, std::span<const double>)>& gradV,
    const std::function<double(double)>& rho, const std::function<double(double)>& q,
    std::span<const double> x0, const DisturbanceSignal& dist, double horizon, double dt,
    double tol = 1e-9);

}  // namespace kforge::clf
