#include "kforge/lyapunov.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace kforge {

namespace {

std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace

double MaxTypeFunctional::operator()(const HistorySegment& x) const { return eval_V(*this, x); }

double eval_V(const MaxTypeFunctional& F, const HistorySegment& x) {
    if (x.dim != F.dim) throw std::invalid_argument("eval_V: dimension mismatch");
    auto weighted = [&](double theta) {
        std::vector<double> v(size_t(x.dim));
        x.value_at(theta, v);
        return std::exp(2.0 * F.sigma * theta) * F.Q(v);
    };
    int best = 0;
    double best_v = -1.0;
    for (int k = 0; k <= x.m; ++k) {
        double theta = x.theta_at(k);
        auto row = x.node(k);
        double qv = std::exp(2.0 * F.sigma * theta) * F.Q(row);
        if (qv > best_v) {
            best_v = qv;
            best = k;
        }
    }
    // golden-section refinement on the interpolant around the best node
    double lo = x.theta_at(std::max(0, best - 1));
    double hi = x.theta_at(std::min(x.m, best + 1));
    const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
    double a = lo, b = hi;
    double c = b - gr * (b - a), d = a + gr * (b - a);
    double fc = weighted(c), fd = weighted(d);
    for (int it = 0; it < 3; ++it) {
        if (fc > fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - gr * (b - a);
            fc = weighted(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + gr * (b - a);
            fd = weighted(d);
        }
    }
    return std::max({best_v, fc, fd});
}

DiniEstimate dini_upper_estimate(const std::function<double(const HistorySegment&)>& V,
                                 const HistorySegment& x, std::span<const double> v,
                                 const DiniSchedule& schedule) {
    DiniEstimate out;
    double vx = V(x);
    double h = schedule.h0;
    for (int k = 0; k < schedule.steps; ++k, h *= 0.5) {
        HistorySegment shifted = shift_Eh(x, v, h);
        double q = (V(shifted) - vx) / h;
        if (!std::isfinite(q))
            throw std::runtime_error("dini_upper_estimate: non-finite quotient at h = " +
                                     std::to_string(h));
        out.h.push_back(h);
        out.quotient.push_back(q);
    }
    int keep = std::min<int>(schedule.keep, int(out.quotient.size()));
    double est = -std::numeric_limits<double>::infinity();
    for (int k = 0; k < keep; ++k)
        est = std::max(est, out.quotient[out.quotient.size() - 1 - size_t(k)]);
    out.estimate = est;
    return out;
}

double dini_bound_maxtype(const MaxTypeFunctional& F, const HistorySegment& x,
                          std::span<const double> v) {
    double Vx = eval_V(F, x);
    double q0 = F.Q(x.newest());
    double tie_tol = 1e-9 * (1.0 + Vx);
    if (q0 > Vx + tie_tol)
        throw std::runtime_error("dini_bound_maxtype: Q(x(0)) exceeds V(x); inconsistent inputs");
    if (q0 < Vx - tie_tol) return -2.0 * F.sigma * Vx;
    auto g = F.gradQ(x.newest());
    double dir = 0.0;
    for (size_t c = 0; c < g.size(); ++c) dir += g[c] * v[c];
    return std::max(-2.0 * F.sigma * Vx, dir);
}

std::string CertifyReport::to_json() const {
    std::ostringstream os;
    os << "{\"mode\": \"" << mode << "\", \"pass\": " << (pass ? "true" : "false")
       << ", \"worst_margin\": " << fmt17(worst_margin) << ", \"worst_time\": " << fmt17(worst_time)
       << ", \"tolerance\": " << fmt17(tolerance) << ", \"samples\": " << samples;
    if (!failure.empty()) os << ", \"failure\": \"" << failure << "\"";
    os << "}";
    return os.str();
}

CertifyReport certify_decay(const TrajectoryRecord& traj,
                            const std::function<double(const HistorySegment&)>& V,
                            const CertifyOptions& opts) {
    CertifyReport rep;
    rep.tolerance = opts.tol;
    rep.mode = opts.mode == CertifyMode::Exponential ? "exponential" : "dissipation";
    if (traj.status != RunStatus::Completed) {
        rep.failure = traj.status == RunStatus::BlowUp ? "trajectory blow-up" : "step failure";
        rep.worst_time = traj.fail_time;
        return rep;
    }
    size_t K = traj.times.size();
    rep.samples = static_cast<int>(K);
    std::vector<double> Vs(K);
    for (size_t k = 0; k < K; ++k) Vs[k] = V(traj.history_at(static_cast<int>(k)));

    if (opts.mode == CertifyMode::Exponential) {
        double V0 = Vs[0];
        double t0 = traj.times[0];
        bool traj_nonzero = false;
        for (size_t k = 0; k < K; ++k) {
            auto st = traj.state_at(static_cast<int>(k));
            for (double x : st)
                if (std::fabs(x) > 1e-14) traj_nonzero = true;
        }
        if (V0 <= 0.0) {
            if (traj_nonzero) {
                rep.failure = "degenerate normalization: V(t0) = 0 on a nonzero trajectory";
                return rep;
            }
            // zero trajectory: decays trivially
            rep.pass = true;
            rep.worst_margin = 0.0;
            return rep;
        }
        double worst = -std::numeric_limits<double>::infinity();
        double worst_t = t0;
        double prevW = 1.0;
        double mono = -std::numeric_limits<double>::infinity();
        double mono_t = t0;
        for (size_t k = 0; k < K; ++k) {
            double W = std::exp(2.0 * opts.sigma * (traj.times[k] - t0)) * Vs[k] / V0;
            double margin = W - 1.0;
            if (margin > worst) {
                worst = margin;
                worst_t = traj.times[k];
            }
            if (k > 0) {
                double dW = W - prevW;
                if (dW > mono) {
                    mono = dW;
                    mono_t = traj.times[k];
                }
            }
            prevW = W;
        }
        rep.worst_margin = std::max(worst, mono);
        rep.worst_time = worst >= mono ? worst_t : mono_t;
        rep.pass = worst <= opts.tol && mono <= opts.tol;
        return rep;
    }

    // dissipation mode: discrete quotient against -rho(V) + q(t)
    double worst = -std::numeric_limits<double>::infinity();
    double worst_t = traj.times[0];
    for (size_t k = 0; k + 1 < K; ++k) {
        double dtk = traj.times[k + 1] - traj.times[k];
        double quotient = (Vs[k + 1] - Vs[k]) / dtk;
        double bound = -(opts.rho ? opts.rho(Vs[k]) : 0.0) + (opts.q ? opts.q(traj.times[k]) : 0.0);
        double margin = quotient - bound;
        if (margin > worst) {
            worst = margin;
            worst_t = traj.times[k];
        }
    }
    rep.worst_margin = worst;
    rep.worst_time = worst_t;
    rep.pass = worst <= opts.tol;
    return rep;
}

}  // namespace kforge
