#include "kforge/clf_fd.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace kforge::clf {

namespace {

std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

constexpr double kZeroB = 1e-12;

}  // namespace

double QuadraticControlData::inf_over_u(double t, std::span<const double> x) const {
    double av = a(t, x), bv = b(t, x), cv = c(t, x);
    if (av > 0.0) return -bv * bv / (4.0 * av) + cv;
    if (av < 0.0 || std::fabs(bv) > kZeroB) return -std::numeric_limits<double>::infinity();
    return cv;
}

bool QuadraticControlData::admissible_at(double t, std::span<const double> x) const {
    return inf_over_u(t, x) <= -rho(V(t, x)) + q(t) + 1e-12;
}

double psi_quadratic(const QuadraticControlData& data, double t, std::span<const double> x,
                     double u, PsiVariant variant) {
    double av = data.a(t, x), bv = data.b(t, x), cv = data.c(t, x);
    double head = data.rho(data.V(t, x));
    if (av >= 0.0) return head + av * u * u + bv * u + cv;
    if (variant == PsiVariant::Full) return head - bv * bv / (4.0 * av) + cv;
    return head + bv * u + cv;
}

double feedback_k1_negative_a(const QuadraticControlData& data, double t,
                              std::span<const double> x) {
    double av = data.a(t, x), bv = data.b(t, x), cv = data.c(t, x);
    if (av >= 0.0) throw WrongRegionError("feedback_k1_negative_a: a(t,x) >= 0");
    double rv = data.rho(data.V(t, x));
    double u = (std::sqrt(bv * bv + 4.0 * std::fabs(av * cv) + 4.0 * std::fabs(av) * rv) - bv) /
               (2.0 * av);
    double residual = av * u * u + bv * u + cv + rv;
    if (residual > 1e-10)
        throw std::runtime_error("feedback_k1_negative_a: postcondition residual " +
                                 fmt17(residual));
    return u;
}

MinNormResult min_norm_feedback(const QuadraticControlData& data, double t,
                                std::span<const double> x, std::pair<double, double> U,
                                PsiVariant variant) {
    double av = data.a(t, x), bv = data.b(t, x), cv = data.c(t, x);
    double rv = data.rho(data.V(t, x));
    double qv = data.q(t);
    double cp = rv + cv - qv;  // admissible iff a u^2 + b u + cp <= 0 (a >= 0 branch)
    auto clamp = [&](double u) { return std::min(U.second, std::max(U.first, u)); };

    MinNormResult out;
    if (av > 0.0) {
        double disc = bv * bv - 4.0 * av * cp;
        if (disc < 0.0) {
            out.feasible = false;
            double uv = clamp(-bv / (2.0 * av));
            out.residual = av * uv * uv + bv * uv + cp;
            out.u = uv;
            return out;
        }
        double sq = std::sqrt(disc);
        double lo = (-bv - sq) / (2.0 * av);
        double hi = (-bv + sq) / (2.0 * av);
        double ilo = std::max(lo, U.first), ihi = std::min(hi, U.second);
        if (ilo > ihi) {
            out.feasible = false;
            double uv = clamp(-bv / (2.0 * av));
            out.residual = av * uv * uv + bv * uv + cp;
            out.u = uv;
            return out;
        }
        out.feasible = true;
        out.u = ilo <= 0.0 && 0.0 <= ihi ? 0.0 : (std::fabs(ilo) < std::fabs(ihi) ? ilo : ihi);
        return out;
    }
    if (av == 0.0 || (av < 0.0 && variant == PsiVariant::LinearTail)) {
        if (std::fabs(bv) <= kZeroB) {
            if (cp <= 0.0) {
                out.feasible = true;
                out.u = clamp(0.0);
                return out;
            }
            out.feasible = false;
            out.residual = cp;
            out.u = clamp(0.0);
            return out;
        }
        double boundary = -cp / bv;
        double lo = bv > 0 ? -std::numeric_limits<double>::infinity() : boundary;
        double hi = bv > 0 ? boundary : std::numeric_limits<double>::infinity();
        double ilo = std::max(lo, U.first), ihi = std::min(hi, U.second);
        if (ilo > ihi) {
            out.feasible = false;
            double uv = clamp(bv > 0 ? U.first : U.second);
            out.residual = bv * uv + cp;
            out.u = uv;
            return out;
        }
        out.feasible = true;
        out.u = ilo <= 0.0 && 0.0 <= ihi ? 0.0 : (std::fabs(ilo) < std::fabs(ihi) ? ilo : ihi);
        return out;
    }
    // a < 0, full variant: Psi is u-independent
    double psi0 = rv - bv * bv / (4.0 * av) + cv;
    if (psi0 <= qv) {
        out.feasible = true;
        out.u = clamp(0.0);
        return out;
    }
    out.feasible = true;  // the explicit negative-region law still decreases V
    out.u = clamp(feedback_k1_negative_a(data, t, x));
    return out;
}

std::string ImplicationReport::to_json() const {
    std::ostringstream os;
    os << "{\"neg_a_ok\": " << (neg_a_ok ? "true" : "false")
       << ", \"zero_b_ok\": " << (zero_b_ok ? "true" : "false")
       << ", \"ratio_ok\": " << (ratio_ok ? "true" : "false") << ", \"sequences\": [";
    for (size_t i = 0; i < sequence_ratios.size(); ++i) {
        os << (i ? ", " : "") << "[";
        for (size_t k = 0; k < sequence_ratios[i].size(); ++k)
            os << (k ? ", " : "") << fmt17(sequence_ratios[i][k]);
        os << "]";
    }
    os << "]}";
    return os.str();
}

ImplicationReport implication_checks(const QuadraticControlData& data, const ProbeGrid& grid) {
    ImplicationReport rep;
    for (size_t i = 0; i < grid.t.size(); ++i) {
        double t = grid.t[i];
        std::span<const double> x(grid.x[i]);
        double av = data.a(t, x), bv = data.b(t, x), cv = data.c(t, x);
        double bound = -data.rho(data.V(t, x)) + data.q(t);
        if (av < 0.0) {
            if (-bv * bv / (4.0 * av) + cv > bound + 1e-12 && rep.neg_a_ok) {
                rep.neg_a_ok = false;
                rep.first_neg_a_violation = i;
            }
            if (std::fabs(bv) <= kZeroB && cv > bound + 1e-12 && rep.zero_b_ok) {
                rep.zero_b_ok = false;
                rep.first_zero_b_violation = i;
            }
        }
    }
    for (const auto& seq : grid.sequences) {
        std::vector<double> ratios;
        for (size_t idx : seq) {
            double t = grid.t[idx];
            std::span<const double> x(grid.x[idx]);
            double av = data.a(t, x), bv = data.b(t, x);
            if (av < 0.0) ratios.push_back(bv * bv / std::fabs(av));
        }
        bool ok = !ratios.empty() && ratios.back() <= grid.ratio_tol;
        for (size_t k = 1; k < ratios.size(); ++k)
            if (ratios[k] > ratios[k - 1] + 1e-12) ok = false;
        if (!ok) rep.ratio_ok = false;
        rep.sequence_ratios.push_back(std::move(ratios));
    }
    return rep;
}

std::string OdeCertifyReport::to_json() const {
    std::ostringstream os;
    const char* st = status == RunStatus::Completed  ? "completed"
                     : status == RunStatus::BlowUp   ? "blow-up"
                                                     : "step-failure";
    os << "{\"mode\": \"dissipation\", \"pass\": " << (pass ? "true" : "false")
       << ", \"status\": \"" << st << "\", \"worst_margin\": " << fmt17(worst_margin)
       << ", \"worst_time\": " << fmt17(worst_time) << ", \"tolerance\": " << fmt17(tolerance)
       << "}";
    return os.str();
}

OdeCertifyReport ode_certify(
    int dim, const OdeRhsFn& rhs, const OdeFeedbackFn& feedback,
    const std::function<double(double, std::span<const double>)>& V,
    const std::function<double(double, std::span<const double>)>& dV_dt,
    const std::function<std::vector<double>(double, std::span<const double>)>& gradV,
    const std::function<double(double)>& rho, const std::function<double(double)>& q,
    std::span<const double> x0, const DisturbanceSignal& dist, double horizon, double dt,
    double tol) {
    OdeCertifyReport rep;
    rep.tolerance = tol;
    auto rec = integrate_ode(dim, rhs, x0, dist, feedback, dist.t0, dist.t0 + horizon, dt);
    rep.status = rec.status;
    if (rec.status != RunStatus::Completed) {
        rep.worst_time = rec.fail_time;
        return rep;
    }
    double worst = -std::numeric_limits<double>::infinity();
    double worst_t = dist.t0;
    std::vector<double> mid(static_cast<size_t>(dim), 0.0), f(mid);
    for (size_t k = 0; k + 1 < rec.times.size(); ++k) {
        double tm = 0.5 * (rec.times[k] + rec.times[k + 1]);
        auto a = rec.state_at(static_cast<int>(k));
        auto b2 = rec.state_at(static_cast<int>(k + 1));
        for (int c = 0; c < dim; ++c) mid[size_t(c)] = 0.5 * (a[size_t(c)] + b2[size_t(c)]);
        double u = feedback ? feedback(tm, mid) : 0.0;
        rhs(tm, dist.at(tm), mid, u, f);
        auto g = gradV(tm, mid);
        double dv = dV_dt ? dV_dt(tm, mid) : 0.0;
        for (int c = 0; c < dim; ++c) dv += g[size_t(c)] * f[size_t(c)];
        double margin = dv + rho(V(tm, mid)) - (q ? q(tm) : 0.0);
        if (margin > worst) {
            worst = margin;
            worst_t = tm;
        }
    }
    rep.worst_margin = worst;
    rep.worst_time = worst_t;
    rep.pass = worst <= tol;
    return rep;
}

}  // namespace kforge::clf
