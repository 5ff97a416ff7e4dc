#pragma once

// Hand-derived closed forms for the built-in two-state benchmark: a delayed
// window-integral drift feeding an integrator, with a sup-norm drift on the
// second state. Serves as the reference the synthesis engine is diffed
// against (reproduce mode) and as a ready-made certification target.
//
//   x1' = d1 * integral of x1^2 over the trailing window + x2
//   x2' = d2 * ||x2 window||_sup + u,   d in [-1,1]^2
//
// Bounds: phi == 1, L(w) = 1 + r w.

#include <string>
#include <vector>

#include "kforge/backstep.hpp"

namespace kforge::benchmark2 {

struct Params {
    double sigma = 0.1;
    double r = 1.0;
};

double mu1(const Params& p, double xi1);
double gamma1(const Params& p, double s);
double k1(const Params& p, double xi1);
double delta1(const Params& p, double xi1);  // sum-only coupling weight
double B2(const Params& p, double s);
double gamma2(const Params& p, double s);
double rho1(const Params& p, double s);
double mu2(const Params& p, double xi1, double xi2);
double p_arg(const Params& p, double xi1, double xi2);
double feedback(const Params& p, double x1, double x2);  // u = k2
double Q(const Params& p, double xi1, double xi2);       // functional integrand

std::vector<std::string> f_exprs();
std::vector<std::string> g_exprs();

TriangularSpec make_spec(const Params& p);

// B2 as an override pair (closed form plus its derivative bound).
std::pair<ScalarFn, ScalarFn> B2_override(const Params& p);

}  // namespace kforge::benchmark2
