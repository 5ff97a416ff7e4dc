#include <cmath>

#include "doctest.h"
#include "kforge/funclass.hpp"

using namespace kforge;

TEST_CASE("envelope_from_samples interpolates and flattens dips") {
    std::vector<std::pair<double, double>> a{{0, 1}, {1, 2}, {2, 4}};
    auto env = envelope_from_samples(a);
    CHECK(env(1.5) == doctest::Approx(3.0).epsilon(1e-15));

    std::vector<std::pair<double, double>> b{{0, 2}, {1, 1}, {2, 3}};
    auto envb = envelope_from_samples(b);
    CHECK(envb(1.0) == doctest::Approx(2.0).epsilon(1e-15));  // running max flattens the dip

    std::vector<std::pair<double, double>> c{{0, 1}, {1, 3}};
    auto envc = envelope_from_samples(c);
    CHECK(envc.deriv_sup(0.5) == doctest::Approx(2.0).epsilon(1e-15));
}

TEST_CASE("envelope_from_samples rejects bad input") {
    std::vector<std::pair<double, double>> empty;
    CHECK_THROWS_AS(envelope_from_samples(empty), EnvelopeError);
    std::vector<std::pair<double, double>> neg{{0, 1}, {1, -2}};
    CHECK_THROWS_WITH_AS(envelope_from_samples(neg),
                         doctest::Contains("non-positive value at index 1"), EnvelopeError);
    std::vector<std::pair<double, double>> dup{{0, 1}, {0, 2}};
    CHECK_THROWS_AS(envelope_from_samples(dup), EnvelopeError);
}

TEST_CASE("envelopes are idempotent under re-enveloping") {
    std::vector<std::pair<double, double>> nodes{{0, 1}, {0.5, 1.2}, {1, 2.5}, {3, 2.6}};
    auto env = envelope_from_samples(nodes);
    std::vector<std::pair<double, double>> resampled;
    for (auto [s, v] : nodes) resampled.emplace_back(s, env(s));
    auto env2 = envelope_from_samples(resampled);
    for (auto [s, v] : nodes) CHECK(env2(s) == doctest::Approx(env(s)).epsilon(1e-15));
}

TEST_CASE("envelope invariants hold on a grid") {
    std::vector<std::pair<double, double>> nodes{{0, 0.5}, {1, 1.0}, {2, 1.1}, {5, 4.0}};
    auto env = envelope_from_samples(nodes);
    CHECK(!env.check_invariants(6.0));
}

TEST_CASE("deriv_sup_numeric brackets the true derivative") {
    auto env = deriv_sup_numeric([](D1 s) { return s * s; }, 2.0, 64);
    CHECK(env(2.0) >= 4.0);
    CHECK(env(2.0) <= 4.2 + 1e-12);

    auto flat = deriv_sup_numeric([](D1) { return D1(3.0); }, 2.0, 16);
    CHECK(flat(1.0) == 0.0);

    // drift envelope of the benchmark design at sigma = 0.1, r = 1: the
    // derivative is the constant r e^{2 sigma r}
    double e = std::exp(0.1);
    auto g1 = deriv_sup_numeric(
        [e](D1 s) { return e * (1.0 + s * e) + 1.0; }, 5.0, 128);
    double truth = e * e;
    CHECK(g1(5.0) >= truth - 1e-12);
    CHECK(g1(5.0) <= truth * 1.05 + 1e-12);
}

TEST_CASE("deriv_sup_numeric reports non-finite points") {
    CHECK_THROWS_WITH_AS(
        deriv_sup_numeric([](D1 s) { return 1.0 / (s - 1.0); }, 2.0, 4),
        doctest::Contains("non-finite"), EnvelopeError);
}

TEST_CASE("mean-value property of numeric derivative bounds") {
    auto f = [](D1 s) { return exp(0.3 * s) + s * s; };
    auto env = deriv_sup_numeric(f, 4.0, 256);
    for (int i = 0; i <= 40; ++i) {
        double s = 4.0 * i / 40;
        for (int j = 0; j < i; ++j) {
            double sp = 4.0 * j / 40;
            double lhs = f(D1(s)).v - f(D1(sp)).v;
            CHECK(lhs <= (s - sp) * env(s) + 1e-12);
        }
    }
}

TEST_CASE("project_interval clamps and is nonexpansive") {
    CHECK(project_interval(-3, 0, std::numeric_limits<double>::infinity()) == 0.0);
    CHECK(project_interval(0.5, 0, 1) == 0.5);
    CHECK_THROWS_AS(project_interval(0, 1, -1), EnvelopeError);

    std::uint64_t state = 42;
    auto rnd = [&] {
        state = state * 6364136223846793005ULL + 1442695040888963407ULL;
        return double(state >> 11) * 0x1.0p-53 * 20.0 - 10.0;
    };
    for (int i = 0; i < 1000; ++i) {
        double x = rnd(), y = rnd();
        double px = project_interval(x, -1, 2), py = project_interval(y, -1, 2);
        CHECK(std::fabs(px - py) <= std::fabs(x - y) + 1e-15);
        CHECK(project_interval(px, -1, 2) == px);  // idempotent
    }
}

TEST_CASE("check_class recognizes the standard families") {
    auto k = check_class({FunctionClass::K, [](double s) { return s; }});
    CHECK(k.pass);
    CHECK(k.message.find("consistent with class K") != std::string::npos);

    auto bad = check_class({FunctionClass::K, [](double s) { return -s; }});
    CHECK(!bad.pass);
    CHECK(bad.first_violation > 0.0);

    auto e = check_class({FunctionClass::ClassE, [](double t) { return std::exp(-t); }});
    CHECK(e.pass);
    CHECK(e.integral == doctest::Approx(1.0).epsilon(2e-2));

    auto kp = check_class({FunctionClass::Kplus, [](double) { return 0.5; }});
    CHECK(kp.pass);

    auto pd = check_class({FunctionClass::PositiveDefinite, [](double s) { return s * s; }});
    CHECK(pd.pass);

    auto kinf = check_class({FunctionClass::Kinf, [](double s) { return s * s; }});
    CHECK(kinf.pass);
    auto plateau = check_class({FunctionClass::Kinf, [](double s) { return s / (1.0 + s); }});
    CHECK(plateau.pass == false);
}

TEST_CASE("pchip envelope is monotone and respects its derivative bound") {
    std::vector<double> s{0, 1, 2, 4, 8};
    std::vector<double> v{1, 1.5, 4, 4.5, 20};
    ScalarFn f = pchip_monotone(s, v);
    ScalarFn ds = pchip_deriv_sup(f);
    double prev = f(0.0);
    for (int k = 1; k <= 400; ++k) {
        double x = 8.0 * k / 400;
        double val = f(x);
        CHECK(val >= prev - 1e-12);
        prev = val;
    }
    for (size_t i = 0; i < s.size(); ++i) CHECK(f(s[i]) == doctest::Approx(v[i]).epsilon(1e-14));
    // mean value against the bound
    for (int k = 0; k <= 40; ++k) {
        double x = 8.0 * k / 40;
        for (int j = 0; j < k; ++j) {
            double y = 8.0 * j / 40;
            CHECK(f(x) - f(y) <= (x - y) * ds(x) + 1e-10);
        }
    }
}

TEST_CASE("scalar functions evaluate consistently on jets") {
    ScalarFn aff = ScalarFn::affine(1.0, 2.0);
    D1 r = aff(D1(3.0, 1.0));
    CHECK(r.v == doctest::Approx(7.0));
    CHECK(r.d == doctest::Approx(2.0));

    std::vector<std::pair<double, double>> nodes{{0, 1}, {1, 2}, {2, 4}};
    auto env = envelope_from_samples(nodes);
    D1 p = env.eval_fn()(D1(1.5, 1.0));
    CHECK(p.v == doctest::Approx(3.0));
    CHECK(p.d == doctest::Approx(2.0));  // slope of the last segment
}
