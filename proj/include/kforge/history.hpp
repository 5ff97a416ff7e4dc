#pragma once

// The r-history data structure: a sampled continuous function on [-r, 0]
// with values in R^n, the shift operator used by Dini derivatives, and
// window aggregates (sup norm, component integrals).

#include <functional>
#include <span>
#include <string>
#include <vector>

namespace kforge {

enum class Interp { Linear, CubicHermite };

struct HistorySegment {
    double r = 0.0;                // delay length, > 0
    int dim = 0;                   // state dimension n
    int m = 0;                     // samples at theta_k = -r + k*(r/m), k = 0..m
    Interp interp = Interp::Linear;
    std::vector<double> samples;   // (m+1) x dim, row-major, oldest first
    std::vector<double> slopes;    // optional, same layout; used by cubic-hermite

    HistorySegment() = default;
    HistorySegment(double r_, int dim_, int m_, Interp interp_ = Interp::Linear);

    static HistorySegment constant(double r, std::span<const double> value, int m = 128);
    // Builds from a callable theta -> R^dim sampled on the grid.
    static HistorySegment sample(double r, int dim, int m,
                                 const std::function<void(double, std::span<double>)>& f,
                                 Interp interp = Interp::Linear);

    double theta_at(int k) const { return -r + k * (r / m); }
    std::span<const double> node(int k) const { return {samples.data() + size_t(k) * dim, size_t(dim)}; }
    std::span<double> node(int k) { return {samples.data() + size_t(k) * dim, size_t(dim)}; }
    std::span<const double> newest() const { return node(m); }

    // Interpolant value at theta in [-r, 0].
    void value_at(double theta, std::span<double> out) const;
    double component_at(double theta, int comp) const;

    bool finite() const;
};

// max_theta |x(theta)| (Euclidean norm), evaluated on the sample grid
// (exact for linear interpolation).
double sup_norm(const HistorySegment& x);

// Per-component sup of |x_comp|.
double sup_norm_component(const HistorySegment& x, int comp);

// E_h(x; v): the last h of the window is a fresh linear piece of slope v
// grafted onto x(0); the rest is x shifted left by h. Resampled onto the
// original grid. Requires 0 <= h < r.
HistorySegment shift_Eh(const HistorySegment& x, std::span<const double> v, double h);

// Interpolant at theta = -tau, 0 <= tau <= r.
std::vector<double> at_delay(const HistorySegment& x, double tau);

// Composite trapezoid of integrand(x_comp(theta)) over [-r, 0].
double window_integral(const HistorySegment& x, int comp,
                       const std::function<double(double)>& integrand);

// CSV: header "theta,x1,..,xn", 17 significant digits.
std::string to_csv(const HistorySegment& x);
HistorySegment from_csv(const std::string& text);

}  // namespace kforge
