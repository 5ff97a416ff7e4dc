#include "kforge/benchmark2.hpp"

#include <cmath>
#include <cstdio>

namespace kforge::benchmark2 {

namespace {
double esr(const Params& p) { return std::exp(p.sigma * p.r); }
}  // namespace

double mu1(const Params& p, double xi1) {
    double e = esr(p);
    return e * (1.0 + p.r * (1.0 + xi1 * xi1) * e) + 1.0 + 2.0 * p.sigma;
}

double gamma1(const Params& p, double s) {
    double e = esr(p);
    return e * (1.0 + p.r * s * e) + 1.0;
}

double k1(const Params& p, double xi1) { return -mu1(p, xi1) * xi1; }

// |d k1 / d xi1| * mu1: the sum-only coupling weight of the worked design
double delta1(const Params& p, double xi1) {
    double e = esr(p);
    double grad = e * (1.0 + p.r * (1.0 + 3.0 * xi1 * xi1) * e) + 1.0 + 2.0 * p.sigma;
    return grad * mu1(p, xi1);
}

double B2(const Params& p, double s) {
    double e = esr(p);
    return e * (1.0 + p.r * (1.0 + s * s) * e) + 1.0 + 2.0 * p.sigma;
}

double gamma2(const Params& p, double s) {
    double e = esr(p);
    double X = e * (1.0 + p.r * (1.0 + 4.0 * s * s * e * e) * e) + 1.0 + 2.0 * p.sigma;
    return 2.0 * e * X + 4.0 * e * e * p.r * s * X * X + 1.0;
}

double rho1(const Params& p, double s) {
    double e = esr(p);
    return e * (1.0 + 2.0 * p.r * s * e) + 1.0;
}

double p_arg(const Params& p, double xi1, double xi2) {
    double z2 = xi2 + mu1(p, xi1) * xi1;
    return 1.0 + xi1 * xi1 + z2 * z2;
}

double mu2(const Params& p, double xi1, double xi2) {
    double q = p_arg(p, xi1, xi2);
    double g2 = gamma2(p, q), g1 = gamma1(p, q), d1 = delta1(p, xi1), r1 = rho1(p, q);
    return p.sigma + g2 + g1 * d1 +
           (3.0 / (4.0 * p.sigma)) * (g2 * g2 + g1 * g1 * d1 * d1 + r1 * r1);
}

double feedback(const Params& p, double x1, double x2) {
    return -mu2(p, x1, x2) * (x2 + mu1(p, x1) * x1);
}

double Q(const Params& p, double xi1, double xi2) {
    double z2 = xi2 + mu1(p, xi1) * xi1;
    return xi1 * xi1 + z2 * z2;
}

std::vector<std::string> f_exprs() {
    return {"d1*integral(sq(x1), r)", "d2*norm_r(x2)"};
}

std::vector<std::string> g_exprs() { return {"1", "1"}; }

TriangularSpec make_spec(const Params& p) {
    TriangularSpec spec;
    spec.n = 2;
    spec.r = p.r;
    spec.sigma = p.sigma;
    spec.phi = MonotoneEnvelope::constant(1.0, "benchmark: unit gain envelope");
    spec.L = MonotoneEnvelope::affine(1.0, p.r, "benchmark: 1 + r w drift bound");
    spec.f_exprs = f_exprs();
    spec.g_exprs = g_exprs();
    spec.disturbance_box = {{-1.0, 1.0}, {-1.0, 1.0}};
    return spec;
}

std::pair<ScalarFn, ScalarFn> B2_override(const Params& p) {
    double e = esr(p);
    double c0 = e * (1.0 + p.r * e) + 1.0 + 2.0 * p.sigma;
    double c1 = p.r * e * e;  // B2(s) = c0 + c1 s^2
    char buf[160];
    std::snprintf(buf, sizeof buf, "%.17g + %.17g*sq(s)", c0, c1);
    std::vector<std::string> fv{"s"};
    ScalarFn eval{ExprScalarFn{sysdsl::parse(buf, fv)}};
    ScalarFn dsup = ScalarFn::affine(0.0, 2.0 * c1);  // derivative 2 c1 s
    return {std::move(eval), std::move(dsup)};
}

}  // namespace kforge::benchmark2
