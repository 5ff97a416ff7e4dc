#include "kforge/funclass.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace kforge {

std::optional<ScalarFn> ScalarFn::derivative() const {
    return std::visit(
        [](const auto& f) -> std::optional<ScalarFn> {
            using F = std::decay_t<decltype(f)>;
            if constexpr (std::is_same_v<F, ConstFn>) return ScalarFn::constant(0.0);
            else if constexpr (std::is_same_v<F, AffineFn>) return ScalarFn::constant(f.c1);
            else if constexpr (std::is_same_v<F, PlFn>) {
                StepFn d;
                size_t nseg = f.s.size() - 1;
                if (nseg == 0) return ScalarFn::constant(0.0);
                for (size_t k = 0; k < nseg; ++k) {
                    d.s.push_back(f.s[k + 1]);
                    d.v.push_back((f.v[k + 1] - f.v[k]) / (f.s[k + 1] - f.s[k]));
                }
                return ScalarFn(std::move(d));
            } else if constexpr (std::is_same_v<F, StepFn>) return ScalarFn::constant(0.0);
            else return std::nullopt;  // pchip derivative handled via deriv_sup; expr has none
        },
        rep());
}

std::vector<std::pair<double, double>> MonotoneEnvelope::node_table(double s_max, int n) const {
    std::vector<std::pair<double, double>> out;
    if (eval_) {
        if (const auto* pl = std::get_if<PlFn>(&eval_->rep())) {
            for (size_t k = 0; k < pl->s.size(); ++k) out.emplace_back(pl->s[k], pl->v[k]);
            return out;
        }
        if (const auto* pc = std::get_if<PchipFn>(&eval_->rep())) {
            for (size_t k = 0; k < pc->s.size(); ++k) out.emplace_back(pc->s[k], pc->v[k]);
            return out;
        }
    }
    for (int k = 0; k <= n; ++k) {
        double s = s_max * k / n;
        out.emplace_back(s, (*this)(s));
    }
    return out;
}

std::optional<std::string> MonotoneEnvelope::check_invariants(double s_max, int n) const {
    const MonotoneEnvelope& f = *this;
    double prev = f(0.0);
    if (!(prev > 0.0)) return "eval(0) is not positive";
    for (int k = 1; k <= n; ++k) {
        double s = s_max * k / n;
        double v = f(s);
        if (!(v > 0.0)) return "eval not positive at s = " + std::to_string(s);
        if (v < prev - 1e-12 * (1 + std::fabs(prev)))
            return "eval decreases at s = " + std::to_string(s);
        prev = v;
    }
    // mean-value property against deriv_sup
    for (int k = 0; k <= n; ++k) {
        double s = s_max * k / n;
        double fs = f(s);
        double ds = f.deriv_sup(s);
        for (int j = 0; j < k; j += std::max(1, n / 16)) {
            double sp = s_max * j / n;
            double lhs = fs - f(sp);
            if (lhs > (s - sp) * ds + 1e-12 * (1 + std::fabs(fs)))
                return "mean-value bound fails between s' = " + std::to_string(sp) +
                       " and s = " + std::to_string(s);
        }
    }
    return std::nullopt;
}

MonotoneEnvelope envelope_from_samples(std::span<const std::pair<double, double>> nodes) {
    if (nodes.empty()) throw EnvelopeError("envelope_from_samples: empty node list");
    PlFn pl;
    double run = -std::numeric_limits<double>::infinity();
    for (size_t i = 0; i < nodes.size(); ++i) {
        auto [s, v] = nodes[i];
        if (!(v > 0.0))
            throw EnvelopeError("envelope_from_samples: non-positive value at index " +
                                std::to_string(i));
        if (i > 0 && s <= pl.s.back())
            throw EnvelopeError("envelope_from_samples: abscissae not strictly increasing at index " +
                                std::to_string(i));
        run = std::max(run, v);
        pl.s.push_back(s);
        pl.v.push_back(run);
    }
    ScalarFn eval{pl};
    ScalarFn dsup = [&]() -> ScalarFn {
        if (pl.s.size() == 1) return ScalarFn::constant(0.0);
        StepFn st;
        double best = 0.0;
        for (size_t k = 0; k + 1 < pl.s.size(); ++k) {
            best = std::max(best, (pl.v[k + 1] - pl.v[k]) / (pl.s[k + 1] - pl.s[k]));
            st.s.push_back(pl.s[k + 1]);
            st.v.push_back(best);
        }
        return ScalarFn(std::move(st));
    }();
    return {std::move(eval), std::move(dsup), "piecewise-linear envelope of samples"};
}

MonotoneEnvelope deriv_sup_numeric(const std::function<D1(D1)>& f, double s_max, int grid_n) {
    if (grid_n < 1) throw EnvelopeError("deriv_sup_numeric: need at least one grid interval");
    PlFn pl;
    double run = 0.0;
    for (int k = 0; k <= grid_n; ++k) {
        double s = s_max * k / grid_n;
        D1 y = f(D1(s, 1.0));
        if (!std::isfinite(y.d))
            throw EnvelopeError("deriv_sup_numeric: non-finite derivative at s = " +
                                std::to_string(s));
        run = std::max(run, y.d);
        pl.s.push_back(s);
        pl.v.push_back(run * 1.05);
    }
    ScalarFn dsup = [&]() -> ScalarFn {
        StepFn st;
        double best = 0.0;
        for (size_t k = 0; k + 1 < pl.s.size(); ++k) {
            best = std::max(best, (pl.v[k + 1] - pl.v[k]) / (pl.s[k + 1] - pl.s[k]));
            st.s.push_back(pl.s[k + 1]);
            st.v.push_back(best);
        }
        return ScalarFn(std::move(st));
    }();
    return {ScalarFn(std::move(pl)), std::move(dsup), "numeric derivative bound (factor 1.05)"};
}

double project_interval(double u, double lo, double hi) {
    if (lo > hi) throw EnvelopeError("project_interval: lo > hi");
    return std::min(hi, std::max(lo, u));
}

ClassReport check_class(const ClassFunction& cf, const SamplingPlan& grid) {
    ClassReport rep;
    auto fail = [&](double s, const std::string& why) {
        rep.pass = false;
        rep.first_violation = s;
        rep.message = why + " at s = " + std::to_string(s);
        return rep;
    };
    const int n = std::max(grid.count, 8);
    switch (cf.kind) {
        case FunctionClass::PositiveDefinite:
        case FunctionClass::K:
        case FunctionClass::Kinf: {
            if (std::fabs(cf.f(0.0)) > 1e-12) return fail(0.0, "f(0) != 0");
            double prev = cf.f(0.0);
            for (int k = 1; k <= n; ++k) {
                double s = grid.s_max * k / n;
                double v = cf.f(s);
                if (!(v > 0.0)) return fail(s, "not positive");
                if (cf.kind != FunctionClass::PositiveDefinite && !(v > prev))
                    return fail(s, "not strictly increasing");
                prev = v;
            }
            if (cf.kind == FunctionClass::Kinf) {
                // sampled surrogate for unboundedness: dyadic increments must
                // not collapse (saturating functions have ratio well below 1)
                double f1 = cf.f(grid.s_max * 0.25), f2 = cf.f(grid.s_max * 0.5),
                       f3 = cf.f(grid.s_max);
                double lo = f2 - f1, hi = f3 - f2;
                if (!(lo > 0) || hi < 0.75 * lo)
                    return fail(grid.s_max, "growth saturates on the grid tail");
            }
            break;
        }
        case FunctionClass::Kplus: {
            for (int k = 0; k <= n; ++k) {
                double s = grid.s_max * k / n;
                if (!(cf.f(s) > 0.0)) return fail(s, "not positive");
            }
            break;
        }
        case FunctionClass::ClassE: {
            // nonincreasing tail over the last quarter of [0, t_big]
            double prev = cf.f(0.75 * grid.t_big);
            for (int k = 1; k <= n / 4; ++k) {
                double s = 0.75 * grid.t_big + 0.25 * grid.t_big * k / (n / 4);
                double v = cf.f(s);
                if (v > prev + 1e-12) return fail(s, "tail not nonincreasing");
                prev = v;
            }
            if (cf.f(grid.t_big) > 1e-6 * (1 + std::fabs(cf.f(0.0))))
                return fail(grid.t_big, "tail does not vanish");
            double acc = 0.0, fp = cf.f(0.0);
            for (int k = 1; k <= n; ++k) {
                double s = grid.t_big * k / n;
                double v = cf.f(s);
                if (v < -1e-15) return fail(s, "negative value");
                acc += 0.5 * (fp + v) * (grid.t_big / n);
                fp = v;
            }
            rep.integral = acc;
            if (!std::isfinite(acc)) return fail(grid.t_big, "integral not finite");
            break;
        }
    }
    rep.pass = true;
    std::ostringstream os;
    os << "consistent with class ";
    switch (cf.kind) {
        case FunctionClass::K: os << "K"; break;
        case FunctionClass::Kinf: os << "Kinf"; break;
        case FunctionClass::Kplus: os << "K+"; break;
        case FunctionClass::ClassE: os << "E"; break;
        case FunctionClass::PositiveDefinite: os << "positive-definite"; break;
    }
    os << " on grid [0, " << (cf.kind == FunctionClass::ClassE ? grid.t_big : grid.s_max) << "] with "
       << n << " samples";
    rep.message = os.str();
    return rep;
}

ScalarFn pchip_monotone(std::span<const double> s, std::span<const double> v) {
    size_t n = s.size();
    if (n != v.size() || n < 2) throw EnvelopeError("pchip: need matching node arrays, >= 2 nodes");
    PchipFn f;
    f.s.assign(s.begin(), s.end());
    f.v.assign(v.begin(), v.end());
    f.m.assign(n, 0.0);
    std::vector<double> d(n - 1);
    for (size_t k = 0; k + 1 < n; ++k) {
        if (!(s[k + 1] > s[k])) throw EnvelopeError("pchip: abscissae not increasing");
        d[k] = (v[k + 1] - v[k]) / (s[k + 1] - s[k]);
        if (d[k] < 0) throw EnvelopeError("pchip: data not nondecreasing");
    }
    // Fritsch-Carlson: harmonic-mean interior slopes, clipped endpoints
    f.m[0] = d[0];
    f.m[n - 1] = d[n - 2];
    for (size_t k = 1; k + 1 < n; ++k) {
        if (d[k - 1] * d[k] <= 0.0) f.m[k] = 0.0;
        else {
            double w1 = 2 * (s[k + 1] - s[k]) + (s[k] - s[k - 1]);
            double w2 = (s[k + 1] - s[k]) + 2 * (s[k] - s[k - 1]);
            f.m[k] = (w1 + w2) / (w1 / d[k - 1] + w2 / d[k]);
        }
    }
    for (size_t k = 0; k + 1 < n; ++k) {
        if (d[k] == 0.0) {
            f.m[k] = 0.0;
            f.m[k + 1] = 0.0;
            continue;
        }
        double a = f.m[k] / d[k], b2 = f.m[k + 1] / d[k];
        double t = a * a + b2 * b2;
        if (t > 9.0) {
            double tau = 3.0 / std::sqrt(t);
            f.m[k] = tau * a * d[k];
            f.m[k + 1] = tau * b2 * d[k];
        }
    }
    return ScalarFn(std::move(f));
}

ScalarFn pchip_deriv_sup(const ScalarFn& pchip) {
    const auto* f = std::get_if<PchipFn>(&pchip.rep());
    if (!f) throw EnvelopeError("pchip_deriv_sup: not a pchip shape");
    StepFn st;
    double best = 0.0;
    size_t n = f->s.size();
    for (size_t k = 0; k + 1 < n; ++k) {
        double h = f->s[k + 1] - f->s[k];
        double d = (f->v[k + 1] - f->v[k]) / h;
        // derivative of the cubic piece is quadratic in t; max over endpoints
        // and the interior critical point
        double m0 = f->m[k], m1 = f->m[k + 1];
        double pmax = std::max(m0, m1);
        // p'(t) = m0 h00' ... expressed via: H'(t)/h in t in [0,1]
        // H'(t) = (6t^2-6t)v0 + (3t^2-4t+1)h m0 + (-6t^2+6t)v1 + (3t^2-2t)h m1, /h
        double A = 6 * (f->v[k] - f->v[k + 1]) + 3 * h * (m0 + m1);
        double B = 6 * (f->v[k + 1] - f->v[k]) - h * (4 * m0 + 2 * m1);
        if (std::fabs(A) > 1e-300) {
            double tc = -B / (2 * A);
            if (tc > 0 && tc < 1) {
                double t2 = tc * tc;
                double val = ((6 * t2 - 6 * tc) * f->v[k] + (3 * t2 - 4 * tc + 1) * h * m0 +
                              (-6 * t2 + 6 * tc) * f->v[k + 1] + (3 * t2 - 2 * tc) * h * m1) /
                             h;
                pmax = std::max(pmax, val);
            }
        }
        pmax = std::max(pmax, d);
        best = std::max(best, pmax);
        st.s.push_back(f->s[k + 1]);
        st.v.push_back(best);
    }
    if (st.s.empty()) return ScalarFn::constant(0.0);
    return ScalarFn(std::move(st));
}

}  // namespace kforge
