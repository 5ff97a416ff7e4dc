#include <cmath>

#include "doctest.h"
#include "kforge/clf_fd.hpp"

using namespace kforge;
using namespace kforge::clf;

namespace {

// data with externally pinned coefficient values at every probe
QuadraticControlData const_data(double a, double b, double c, double rhoV = 0.0, double q = 0.0) {
    QuadraticControlData d;
    d.a = [a](double, std::span<const double>) { return a; };
    d.b = [b](double, std::span<const double>) { return b; };
    d.c = [c](double, std::span<const double>) { return c; };
    d.rho = [rhoV](double) { return rhoV; };
    d.q = [q](double) { return q; };
    d.V = [](double, std::span<const double> x) { return x.empty() ? 1.0 : x[0] * x[0]; };
    return d;
}

std::uint64_t rng_state = 31337;
double rnd() {
    rng_state = rng_state * 6364136223846793005ULL + 1442695040888963407ULL;
    return double(rng_state >> 11) * 0x1.0p-53;
}

const std::vector<double> x1{1.0};

}  // namespace

TEST_CASE("psi branches on the sign of the quadratic coefficient") {
    CHECK(psi_quadratic(const_data(1, -2, 0), 0, x1, 1.0, PsiVariant::Full) ==
          doctest::Approx(-1.0));
    CHECK(psi_quadratic(const_data(-1, 2, 0), 0, x1, 7.0, PsiVariant::Full) ==
          doctest::Approx(1.0));  // -b^2/(4a) + c
    CHECK(psi_quadratic(const_data(0, 0, 0), 0, x1, 0.0, PsiVariant::Full) == 0.0);
    // linear tail keeps the control in play for a < 0
    CHECK(psi_quadratic(const_data(-1, 2, 0.5), 0, x1, 3.0, PsiVariant::LinearTail) ==
          doctest::Approx(6.5));
}

TEST_CASE("negative-region feedback satisfies its postcondition") {
    auto d1 = const_data(-1, 0, 0, 1.0);
    double u = feedback_k1_negative_a(d1, 0, x1);
    CHECK(u == doctest::Approx(-1.0).epsilon(1e-12));

    auto d2 = const_data(-1, 2, 0, 0.0);
    CHECK(feedback_k1_negative_a(d2, 0, x1) == doctest::Approx(0.0).epsilon(1e-12));

    auto d3 = const_data(-2, 0, -3, 0.0);
    double u3 = feedback_k1_negative_a(d3, 0, x1);
    CHECK(u3 == doctest::Approx(-std::sqrt(24.0) / 4.0).epsilon(1e-12));
    CHECK(-2 * u3 * u3 + 0 * u3 - 3 <= 0.0);

    CHECK_THROWS_AS(feedback_k1_negative_a(const_data(1, 0, 0), 0, x1), WrongRegionError);
}

TEST_CASE("postcondition residual over random negative-region tuples") {
    for (int trial = 0; trial < 2000; ++trial) {
        double a = -(0.01 + rnd() * 5.0);
        double b = (rnd() - 0.5) * 10.0;
        double c = (rnd() - 0.5) * 10.0;
        double rv = rnd() * 5.0;
        auto d = const_data(a, b, c, rv);
        double u = feedback_k1_negative_a(d, 0, x1);
        double residual = a * u * u + b * u + c + rv;
        CHECK(residual <= 1e-10);
    }
}

TEST_CASE("min-norm selection from the quadratic roots") {
    auto r1 = min_norm_feedback(const_data(1, 0, -1), 0, x1,
                                {-std::numeric_limits<double>::infinity(),
                                 std::numeric_limits<double>::infinity()});
    CHECK(r1.feasible);
    CHECK(r1.u == 0.0);

    auto r2 = min_norm_feedback(const_data(1, 0, 1), 0, x1,
                                {-std::numeric_limits<double>::infinity(),
                                 std::numeric_limits<double>::infinity()});
    CHECK(!r2.feasible);
    CHECK(r2.residual == doctest::Approx(1.0));

    auto r3 = min_norm_feedback(const_data(0, 2, 1), 0, x1,
                                {-std::numeric_limits<double>::infinity(),
                                 std::numeric_limits<double>::infinity()});
    CHECK(r3.feasible);
    CHECK(r3.u == doctest::Approx(-0.5));

    // bounded control set clamps the admissible interval
    auto r4 = min_norm_feedback(const_data(1, -6, 8), 0, x1, {0.0, 10.0});
    CHECK(r4.feasible);
    CHECK(r4.u == doctest::Approx(2.0));  // roots [2, 4], nearest to zero
}

TEST_CASE("min-norm returns the scan minimizer") {
    for (int trial = 0; trial < 200; ++trial) {
        double a = rnd() * 2.0;  // nonnegative branch
        double b = (rnd() - 0.5) * 6.0;
        double c = (rnd() - 0.5) * 4.0;
        auto d = const_data(a, b, c);
        std::pair<double, double> U{-5.0, 5.0};
        auto r = min_norm_feedback(d, 0, x1, U);
        if (!r.feasible) continue;
        CHECK(psi_quadratic(d, 0, x1, r.u, PsiVariant::Full) <= 1e-9);
        // no admissible point found by a dense line scan beats the closed form
        int undercuts = 0;
        for (int k = 0; k <= 100000; ++k) {
            double u = -5.0 + 10.0 * k / 100000;
            if (psi_quadratic(d, 0, x1, u, PsiVariant::Full) <= 0.0 &&
                std::fabs(u) < std::fabs(r.u) - 1e-9)
                ++undercuts;
        }
        CHECK(undercuts == 0);
    }
}

TEST_CASE("quasi-convexity of the nonnegative branch") {
    for (int trial = 0; trial < 1000; ++trial) {
        double a = rnd() * 3.0;
        double b = (rnd() - 0.5) * 8.0;
        double c = (rnd() - 0.5) * 8.0;
        auto d = const_data(a, b, c, rnd());
        double u1 = (rnd() - 0.5) * 10.0, u2 = (rnd() - 0.5) * 10.0;
        double lam = rnd();
        double mix = psi_quadratic(d, 0, x1, lam * u1 + (1 - lam) * u2, PsiVariant::Full);
        double worst = std::max(psi_quadratic(d, 0, x1, u1, PsiVariant::Full),
                                psi_quadratic(d, 0, x1, u2, PsiVariant::Full));
        CHECK(mix <= worst + 1e-10);
    }
}

TEST_CASE("implication probes") {
    // all probes in the nonnegative region: vacuous pass
    {
        ProbeGrid grid;
        for (int i = 0; i < 5; ++i) {
            grid.t.push_back(0.0);
            grid.x.push_back({0.1 * i});
        }
        auto rep = implication_checks(const_data(1, 1, -1), grid);
        CHECK(rep.neg_a_ok);
        CHECK(rep.zero_b_ok);
        CHECK(rep.ratio_ok);  // no sequences declared
    }
    // a = -eps, b = eps: ratio eps -> 0 passes
    {
        QuadraticControlData d;
        d.a = [](double, std::span<const double> x) { return -x[0]; };
        d.b = [](double, std::span<const double> x) { return x[0]; };
        d.c = [](double, std::span<const double>) { return -10.0; };
        d.rho = [](double) { return 0.0; };
        d.q = [](double) { return 0.0; };
        d.V = [](double, std::span<const double>) { return 1.0; };
        ProbeGrid grid;
        for (int k = 0; k < 8; ++k) {
            grid.t.push_back(0.0);
            grid.x.push_back({std::pow(10.0, -k)});
        }
        grid.sequences = {{0, 1, 2, 3, 4, 5, 6, 7}};
        auto rep = implication_checks(d, grid);
        CHECK(rep.ratio_ok);
        CHECK(rep.neg_a_ok);
    }
    // a = -eps, b = sqrt(eps): ratio stays at 1, flagged
    {
        QuadraticControlData d;
        d.a = [](double, std::span<const double> x) { return -x[0]; };
        d.b = [](double, std::span<const double> x) { return std::sqrt(x[0]); };
        d.c = [](double, std::span<const double>) { return -10.0; };
        d.rho = [](double) { return 0.0; };
        d.q = [](double) { return 0.0; };
        d.V = [](double, std::span<const double>) { return 1.0; };
        ProbeGrid grid;
        for (int k = 0; k < 8; ++k) {
            grid.t.push_back(0.0);
            grid.x.push_back({std::pow(10.0, -k)});
        }
        grid.sequences = {{0, 1, 2, 3, 4, 5, 6, 7}};
        auto rep = implication_checks(d, grid);
        CHECK(!rep.ratio_ok);
    }
}

TEST_CASE("admissibility sampling uses the closed-form infimum") {
    auto good = const_data(1, 0, -1, 0.5);  // inf = -1 <= -0.5
    CHECK(good.admissible_at(0, x1));
    auto neg = const_data(-1, 1, 0);  // inf = -inf
    CHECK(neg.admissible_at(0, x1));
    auto bad = const_data(0, 0, 1, 0.5);  // inf = 1 > -0.5
    CHECK(!bad.admissible_at(0, x1));
}

TEST_CASE("trajectory certification for ODE closed loops") {
    OdeRhsFn rhs = [](double, std::span<const double>, std::span<const double> x, double u,
                      std::span<double> o) { o[0] = -x[0] + u; };
    auto V = [](double, std::span<const double> x) { return 0.5 * x[0] * x[0]; };
    auto dVdt = [](double, std::span<const double>) { return 0.0; };
    auto gradV = [](double, std::span<const double> x) { return std::vector<double>{x[0]}; };
    std::vector<double> x0{1.0};
    auto dist = DisturbanceSignal::zero(0, 0.0, 5.0, 0.01);

    // open loop: dV/dt = -x^2 = -2V exactly, margin 0
    auto rep = ode_certify(1, rhs, {}, V, dVdt, gradV, [](double v) { return 2.0 * v; },
                           [](double) { return 0.0; }, x0, dist, 5.0, 0.01);
    CHECK(rep.pass);
    CHECK(std::fabs(rep.worst_margin) <= 1e-9);

    // disturbance-robust contraction under u = -2x
    OdeRhsFn rhs_d = [](double, std::span<const double> d, std::span<const double> x, double u,
                        std::span<double> o) { o[0] = d[0] * x[0] + u; };
    OdeFeedbackFn fb = [](double, std::span<const double> x) { return -2.0 * x[0]; };
    std::vector<std::pair<double, double>> box{{-1.0, 1.0}};
    auto d1 = make_disturbance(5, 0.01, box, 0.0, 5.0);
    auto rep2 = ode_certify(1, rhs_d, fb, V, dVdt, gradV, [](double v) { return v; },
                            [](double) { return 0.0; }, x0, d1, 5.0, 0.01);
    CHECK(rep2.pass);

    // sign-flipped feedback destroys the certificate
    OdeFeedbackFn bad = [](double, std::span<const double> x) { return +2.0 * x[0]; };
    auto rep3 = ode_certify(1, rhs_d, bad, V, dVdt, gradV, [](double v) { return v; },
                            [](double) { return 0.0; }, x0, d1, 5.0, 0.01);
    CHECK(!rep3.pass);
    CHECK(rep3.worst_margin > 0.0);
}

TEST_CASE("reports serialize") {
    auto rep = implication_checks(const_data(1, 0, -1), {});
    CHECK(rep.to_json().find("\"neg_a_ok\": true") != std::string::npos);
    OdeCertifyReport r;
    r.pass = false;
    r.worst_margin = 0.25;
    CHECK(r.to_json().find("\"pass\": false") != std::string::npos);
}
