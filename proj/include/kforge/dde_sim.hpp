#pragma once

// Method-of-steps integrator for retarded functional differential equations
// with disturbance inputs and feedback laws. Fixed-step classical RK4; each
// stage sees the stage-shifted history rebuilt from cubic-hermite dense
// output. dt must divide both r and the disturbance dwell so that
// breakpoints land on grid nodes.

#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "kforge/history.hpp"

namespace kforge {

using RhsFn = std::function<void(double t, std::span<const double> d, const HistorySegment& x,
                                 double u, std::span<double> out)>;
using FeedbackFn = std::function<double(double t, const HistorySegment& x)>;

struct GeneralRfdeSpec {
    int dim = 0;
    double r = 0.0;
    RhsFn rhs;
    std::vector<std::pair<double, double>> disturbance_box;  // compact D, per component
    std::pair<double, double> control_set = {-std::numeric_limits<double>::infinity(),
                                             std::numeric_limits<double>::infinity()};

    // Samples f(t, d, 0-history, 0) over a few (t, d) probes; returns the worst
    // |f| (hypothesis: identically zero).
    double zero_equilibrium_residual() const;
};

struct DisturbanceSignal {
    double t0 = 0.0;
    double dwell = 0.0;
    int dims = 0;
    std::uint64_t seed = 0;
    std::vector<double> values;  // K x dims, piecewise constant, right-continuous

    std::span<const double> at(double t) const;
    static DisturbanceSignal zero(int dims, double t0, double horizon, double dwell);
};

// Reproducible piecewise-constant signal uniform in the box. Rejects
// degenerate boxes (lo > hi) and non-positive dwell.
DisturbanceSignal make_disturbance(std::uint64_t seed, double dwell,
                                   std::span<const std::pair<double, double>> box, double t0,
                                   double horizon);

enum class RunStatus { Completed, BlowUp, StepFailure };

struct TrajectoryRecord {
    double t0 = 0.0;
    double dt = 0.0;
    int dim = 0;
    RunStatus status = RunStatus::Completed;
    double fail_time = 0.0;

    std::vector<double> times;
    std::vector<double> states;    // times.size() x dim
    std::vector<double> derivs;    // rhs at each node (dense-output slopes)
    std::vector<double> controls;  // u at each node
    std::vector<double> dists;     // times.size() x l
    int n_dist = 0;

    HistorySegment initial;  // the supplied x0 window

    std::span<const double> state_at(int k) const {
        return {states.data() + size_t(k) * dim, size_t(dim)};
    }
    // Reconstructs the r-history window ending at times[k] from the recorded
    // dense output (no re-integration).
    HistorySegment history_at(int k) const;

    std::string to_csv(const std::function<double(const HistorySegment&)>& functional = {}) const;
    std::string run_manifest_json(std::uint64_t seed, double horizon) const;
};

struct IntegrateError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline constexpr double kBlowUpThreshold = 1e8;

// Integrates the closed loop from t0 to T. Preconditions: dt divides r and
// the disturbance dwell exactly (to grid tolerance), T > t0.
TrajectoryRecord integrate(const GeneralRfdeSpec& spec, const HistorySegment& x0,
                           const DisturbanceSignal& d, const FeedbackFn& feedback, double t0,
                           double T, double dt);

// Plain RK4 for delay-free systems (r treated as absent); states only.
struct OdeRecord {
    RunStatus status = RunStatus::Completed;
    double fail_time = 0.0;
    std::vector<double> times;
    std::vector<double> states;  // times.size() x dim
    int dim = 0;
    std::span<const double> state_at(int k) const {
        return {states.data() + size_t(k) * dim, size_t(dim)};
    }
};

using OdeRhsFn = std::function<void(double t, std::span<const double> d, std::span<const double> x,
                                    double u, std::span<double> out)>;
using OdeFeedbackFn = std::function<double(double t, std::span<const double> x)>;

OdeRecord integrate_ode(int dim, const OdeRhsFn& rhs, std::span<const double> x0,
                        const DisturbanceSignal& d, const OdeFeedbackFn& feedback, double t0,
                        double T, double dt);

// ---- integrator validation ---------------------------------------------------

struct OrderCheckResult {
    std::vector<double> dts;
    std::vector<double> errors;
    std::vector<double> observed_orders;  // log2(e_k / e_{k+1})
    bool saturated = false;               // errors at the roundoff floor
};

// problem: "linear_decay" (xdot = -x, analytic) or "delayed_linear"
// (xdot = -x(t-1), hand-solved through t = 2).
OrderCheckResult order_check(const std::string& problem, int halvings);

}  // namespace kforge
