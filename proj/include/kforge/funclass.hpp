#pragma once

// Scalar comparison-function machinery: positive nondecreasing envelopes that
// carry their own derivative bound, class-K style membership checks, and the
// interval projection. Envelopes are the currency of the synthesis engine;
// carrying deriv_sup alongside eval means downstream majorant constructions
// never have to re-differentiate.

#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "kforge/dual.hpp"
#include "kforge/sysdsl.hpp"

namespace kforge {

// ---- ScalarFn: closed set of jet-evaluable scalar function shapes ---------

struct ConstFn {
    double c;
};
struct AffineFn {
    double c0, c1;  // c0 + c1*s
};
// Piecewise linear through strictly increasing abscissae; constant to the
// left of the first node, last-slope linear to the right.
struct PlFn {
    std::vector<double> s, v;
};
// Right-continuous nondecreasing step: value v[k] on (s[k-1], s[k]]; v[0]
// up to s[0]; v.back() beyond.
struct StepFn {
    std::vector<double> s, v;
};
// C1 monotone cubic (Fritsch-Carlson slopes) through nodes; constant left,
// linear right with the terminal slope.
struct PchipFn {
    std::vector<double> s, v, m;
};
struct ExprScalarFn {
    sysdsl::ExprPtr expr;
};

class ScalarFn {
  public:
    ScalarFn() : rep_(ConstFn{0.0}) {}
    ScalarFn(ConstFn f) : rep_(std::move(f)) {}
    ScalarFn(AffineFn f) : rep_(std::move(f)) {}
    ScalarFn(PlFn f) : rep_(std::move(f)) {}
    ScalarFn(StepFn f) : rep_(std::move(f)) {}
    ScalarFn(PchipFn f) : rep_(std::move(f)) {}
    ScalarFn(ExprScalarFn f) : rep_(std::move(f)) {}

    static ScalarFn constant(double c) { return ScalarFn(ConstFn{c}); }
    static ScalarFn affine(double c0, double c1) { return ScalarFn(AffineFn{c0, c1}); }

    template <class T>
    T operator()(const T& x) const;

    // Exact derivative (a.e. for piecewise shapes), as another ScalarFn where
    // the shape is closed under differentiation. Expression-backed functions
    // have no symbolic derivative; callers differentiate those with jets.
    std::optional<ScalarFn> derivative() const;

    bool is_expr() const { return std::holds_alternative<ExprScalarFn>(rep_); }

    const std::variant<ConstFn, AffineFn, PlFn, StepFn, PchipFn, ExprScalarFn>& rep() const {
        return rep_;
    }

  private:
    std::variant<ConstFn, AffineFn, PlFn, StepFn, PchipFn, ExprScalarFn> rep_;
};

namespace detail {

// index of the segment containing x: largest k with s[k] <= x, clamped.
inline int locate(const std::vector<double>& s, double x) {
    if (x <= s.front()) return -1;
    if (x >= s.back()) return static_cast<int>(s.size()) - 1;
    int lo = 0, hi = static_cast<int>(s.size()) - 1;
    while (hi - lo > 1) {
        int mid = (lo + hi) / 2;
        if (s[mid] <= x) lo = mid;
        else hi = mid;
    }
    return lo;
}

template <class T>
T eval_pl(const PlFn& f, const T& x) {
    const auto& s = f.s;
    const auto& v = f.v;
    double xv = value_of(x);
    int n = static_cast<int>(s.size());
    if (n == 1 || xv <= s.front()) return T(v.front());
    int k = locate(s, xv);
    if (k >= n - 1) k = n - 2;  // extend by the last slope
    double slope = (v[k + 1] - v[k]) / (s[k + 1] - s[k]);
    return v[k] + slope * (x - s[k]);
}

template <class T>
T eval_step(const StepFn& f, const T& x) {
    double xv = value_of(x);
    int n = static_cast<int>(f.s.size());
    int k = 0;
    while (k < n - 1 && xv > f.s[k]) ++k;
    return T(f.v[k]);
}

template <class T>
T eval_pchip(const PchipFn& f, const T& x) {
    const auto& s = f.s;
    const auto& v = f.v;
    const auto& m = f.m;
    double xv = value_of(x);
    int n = static_cast<int>(s.size());
    if (n == 1 || xv <= s.front()) return T(v.front());
    if (xv >= s.back()) return v.back() + m.back() * (x - s.back());
    int k = locate(s, xv);
    double h = s[k + 1] - s[k];
    T t = (x - s[k]) / h;
    T t2 = t * t, t3 = t2 * t;
    return (2.0 * t3 - 3.0 * t2 + 1.0) * v[k] + (t3 - 2.0 * t2 + t) * (h * m[k]) +
           (-2.0 * t3 + 3.0 * t2) * v[k + 1] + (t3 - t2) * (h * m[k + 1]);
}

}  // namespace detail

template <class T>
T ScalarFn::operator()(const T& x) const {
    return std::visit(
        [&](const auto& f) -> T {
            using F = std::decay_t<decltype(f)>;
            if constexpr (std::is_same_v<F, ConstFn>) return T(f.c);
            else if constexpr (std::is_same_v<F, AffineFn>) return f.c0 + f.c1 * x;
            else if constexpr (std::is_same_v<F, PlFn>) return detail::eval_pl(f, x);
            else if constexpr (std::is_same_v<F, StepFn>) return detail::eval_step(f, x);
            else if constexpr (std::is_same_v<F, PchipFn>) return detail::eval_pchip(f, x);
            else return sysdsl::eval_scalar(*f.expr, x);
        },
        rep_);
}

// ---- MonotoneEnvelope ------------------------------------------------------

// A positive nondecreasing function with an attached nondecreasing derivative
// bound: deriv_sup(s) >= sup over [0,s] of the derivative of eval. Backed
// either by ScalarFn shapes (then jet-evaluable, usable as synthesis input)
// or by plain callables (synthesized composites).
class MonotoneEnvelope {
  public:
    MonotoneEnvelope() = default;
    MonotoneEnvelope(ScalarFn eval, ScalarFn deriv_sup, std::string provenance = {})
        : eval_(std::move(eval)), dsup_(std::move(deriv_sup)), provenance_(std::move(provenance)) {}
    MonotoneEnvelope(std::function<double(double)> eval, std::function<double(double)> deriv_sup,
                     std::string provenance = {})
        : eval_g_(std::move(eval)), dsup_g_(std::move(deriv_sup)),
          provenance_(std::move(provenance)) {}

    static MonotoneEnvelope constant(double c, std::string provenance = {}) {
        return {ScalarFn::constant(c), ScalarFn::constant(0.0), std::move(provenance)};
    }
    static MonotoneEnvelope affine(double c0, double c1, std::string provenance = {}) {
        return {ScalarFn::affine(c0, c1), ScalarFn::constant(c1), std::move(provenance)};
    }

    double operator()(double s) const { return eval_ ? (*eval_)(s) : eval_g_(s); }
    double deriv_sup(double s) const { return dsup_ ? (*dsup_)(s) : dsup_g_(s); }

    bool scalar_backed() const { return eval_.has_value() && dsup_.has_value(); }
    const ScalarFn& eval_fn() const { return *eval_; }
    const ScalarFn& deriv_sup_fn() const { return *dsup_; }
    const std::string& provenance() const { return provenance_; }

    // Node table for manifests (sampled if the shape has no natural nodes).
    std::vector<std::pair<double, double>> node_table(double s_max = 10.0, int n = 33) const;

    // Grid checks of the type invariants: positivity, monotonicity, and the
    // mean-value property against deriv_sup. Returns a violation message.
    std::optional<std::string> check_invariants(double s_max, int n = 257) const;

  private:
    std::optional<ScalarFn> eval_, dsup_;
    std::function<double(double)> eval_g_, dsup_g_;
    std::string provenance_;
};

// ---- funclass operations ----------------------------------------------------

struct EnvelopeError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Piecewise-linear interpolant of the running maximum of the sample values;
// deriv_sup is the running maximum of segment slopes. Rejects empty input and
// non-positive values (naming the offending index).
MonotoneEnvelope envelope_from_samples(std::span<const std::pair<double, double>> nodes);

// Running maximum over the grid of the forward-mode derivative of f on
// [0, s_max], inflated by the 1.05 safety factor. Fails naming the grid point
// if the derivative is non-finite.
MonotoneEnvelope deriv_sup_numeric(const std::function<D1(D1)>& f, double s_max, int grid_n);

// Clamp to [lo, hi] (either side may be infinite). Rejects lo > hi.
double project_interval(double u, double lo, double hi);

// ---- class-function checks ---------------------------------------------------

enum class FunctionClass { K, Kinf, Kplus, ClassE, PositiveDefinite };

struct ClassFunction {
    FunctionClass kind;
    std::function<double(double)> f;
};

struct SamplingPlan {
    double s_max = 10.0;
    int count = 256;
    double t_big = 100.0;  // horizon for the class-E integral
};

struct ClassReport {
    bool pass = false;
    double first_violation = std::numeric_limits<double>::quiet_NaN();
    double integral = std::numeric_limits<double>::quiet_NaN();  // class E only
    std::string message;  // "consistent with class X on grid ..." or the violation
};

ClassReport check_class(const ClassFunction& cf, const SamplingPlan& grid = {});

// Monotone C1 cubic through (s_k, v_k) with nondecreasing data; exposed for
// envelope construction over scanned maxima.
ScalarFn pchip_monotone(std::span<const double> s, std::span<const double> v);

// deriv_sup ScalarFn for a pchip shape: running max of per-piece derivative
// maxima, as a step function.
ScalarFn pchip_deriv_sup(const ScalarFn& pchip);

}  // namespace kforge
