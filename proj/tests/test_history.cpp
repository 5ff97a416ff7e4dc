#include <cmath>

#include "doctest.h"
#include "kforge/history.hpp"

using namespace kforge;

namespace {

HistorySegment ramp(double r = 1.0, int m = 64) {
    return HistorySegment::sample(r, 1, m,
                                  [](double theta, std::span<double> out) { out[0] = theta; });
}

std::uint64_t rng_state = 12345;
double rnd() {
    rng_state = rng_state * 6364136223846793005ULL + 1442695040888963407ULL;
    return double(rng_state >> 11) * 0x1.0p-53;
}

}  // namespace

TEST_CASE("sup_norm on basic segments") {
    CHECK(sup_norm(ramp()) == doctest::Approx(1.0).epsilon(1e-15));

    HistorySegment c2 = HistorySegment::constant(1.0, std::vector<double>{3.0, 4.0});
    CHECK(sup_norm(c2) == doctest::Approx(5.0).epsilon(1e-15));

    HistorySegment osc = HistorySegment::sample(
        1.0, 1, 100, [](double theta, std::span<double> out) { out[0] = std::sin(10 * theta); });
    CHECK(sup_norm(osc) == doctest::Approx(1.0).epsilon(1e-3));
}

TEST_CASE("shift operator identity and constants") {
    HistorySegment x = ramp();
    std::vector<double> v{1.0};
    HistorySegment same = shift_Eh(x, v, 0.0);
    CHECK(same.samples == x.samples);  // E_0 is the identity, sample-wise

    HistorySegment c = HistorySegment::constant(1.0, std::vector<double>{2.5}, 32);
    std::vector<double> zero{0.0};
    for (double h : {0.1, 0.25, 0.7}) {
        HistorySegment sh = shift_Eh(c, zero, h);
        for (int k = 0; k <= sh.m; ++k) CHECK(sh.node(k)[0] == doctest::Approx(2.5).epsilon(1e-15));
    }
}

TEST_CASE("shift grafts a fresh linear tip") {
    // ramp with slope-1 extension: the whole window becomes theta + h
    HistorySegment x = ramp(1.0, 64);
    std::vector<double> v{1.0};
    HistorySegment sh = shift_Eh(x, v, 0.5);
    for (int k = 0; k <= sh.m; ++k) {
        double theta = sh.theta_at(k);
        CHECK(sh.node(k)[0] == doctest::Approx(theta + 0.5).epsilon(1e-12));
    }
    CHECK(sh.newest()[0] == doctest::Approx(0.5).epsilon(1e-15));
    CHECK_THROWS(shift_Eh(x, v, 1.0));  // h must stay below r
}

TEST_CASE("at_delay endpoints are exact") {
    HistorySegment x = HistorySegment::sample(
        1.0, 1, 4, [](double theta, std::span<double> out) { out[0] = theta * theta; });
    CHECK(at_delay(x, 0.0)[0] == x.newest()[0]);
    CHECK(at_delay(x, 1.0)[0] == x.node(0)[0]);
    CHECK(at_delay(x, 0.5)[0] == doctest::Approx(0.25).epsilon(0.03125));
    CHECK_THROWS(at_delay(x, 1.5));
}

TEST_CASE("window integrals by trapezoid") {
    HistorySegment one = HistorySegment::constant(1.0, std::vector<double>{1.0}, 32);
    CHECK(window_integral(one, 0, [](double v) { return v * v; }) ==
          doctest::Approx(1.0).epsilon(1e-14));

    HistorySegment x = ramp(1.0, 100);
    CHECK(window_integral(x, 0, [](double v) { return v * v; }) ==
          doctest::Approx(1.0 / 3.0).epsilon(1e-3));

    HistorySegment z = HistorySegment::constant(1.0, std::vector<double>{0.0}, 16);
    CHECK(window_integral(z, 0, [](double v) { return v * v; }) == 0.0);
}

TEST_CASE("shift norm bound over random segments") {
    for (int trial = 0; trial < 1000; ++trial) {
        double a = rnd() * 2 - 1, b = rnd() * 2 - 1, w = rnd() * 5 + 0.5;
        HistorySegment x = HistorySegment::sample(
            1.0, 2, 16, [&](double theta, std::span<double> out) {
                out[0] = a * std::sin(w * theta);
                out[1] = b + 0.3 * std::cos(w * theta);
            });
        std::vector<double> v{rnd() * 4 - 2, rnd() * 4 - 2};
        double h = rnd() * 0.9;
        HistorySegment sh = shift_Eh(x, v, h);
        double x0 = std::hypot(x.newest()[0], x.newest()[1]);
        double vn = std::hypot(v[0], v[1]);
        CHECK(sup_norm(sh) <= std::max(sup_norm(x), x0 + h * vn) + 1e-9);
    }
}

TEST_CASE("newest sample round-trips bit-for-bit") {
    HistorySegment x = ramp();
    CHECK(at_delay(x, 0.0)[0] == x.newest()[0]);
}

TEST_CASE("cubic-hermite segments reproduce cubics between nodes") {
    // x(theta) = theta^3 with exact node slopes: the interpolant is exact
    HistorySegment x(1.0, 1, 8, Interp::CubicHermite);
    x.slopes.resize(x.samples.size());
    for (int k = 0; k <= x.m; ++k) {
        double th = x.theta_at(k);
        x.node(k)[0] = th * th * th;
        x.slopes[size_t(k)] = 3 * th * th;
    }
    for (double th : {-0.93, -0.51, -0.27, -0.04}) {
        std::vector<double> out(1);
        x.value_at(th, out);
        CHECK(out[0] == doctest::Approx(th * th * th).epsilon(1e-14));
    }
}

TEST_CASE("csv serialization round trip") {
    HistorySegment x = HistorySegment::sample(0.5, 2, 8, [](double theta, std::span<double> out) {
        out[0] = std::sin(theta);
        out[1] = theta / 3.0;
    });
    std::string csv = to_csv(x);
    CHECK(csv.substr(0, 11) == "theta,x1,x2");
    HistorySegment back = from_csv(csv);
    CHECK(back.dim == x.dim);
    CHECK(back.m == x.m);
    for (int k = 0; k <= x.m; ++k)
        for (int c = 0; c < x.dim; ++c) CHECK(back.node(k)[size_t(c)] == x.node(k)[size_t(c)]);
}
