#include "kforge/history.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>

namespace kforge {

namespace {

std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace

HistorySegment::HistorySegment(double r_, int dim_, int m_, Interp interp_)
    : r(r_), dim(dim_), m(m_), interp(interp_), samples(size_t(m_ + 1) * size_t(dim_), 0.0) {
    if (r_ <= 0) throw std::invalid_argument("history: r must be positive");
    if (dim_ < 1) throw std::invalid_argument("history: dim must be >= 1");
    if (m_ < 2) throw std::invalid_argument("history: need m >= 2 samples");
}

HistorySegment HistorySegment::constant(double r, std::span<const double> value, int m) {
    HistorySegment x(r, static_cast<int>(value.size()), m);
    for (int k = 0; k <= m; ++k) {
        auto row = x.node(k);
        for (int c = 0; c < x.dim; ++c) row[size_t(c)] = value[size_t(c)];
    }
    return x;
}

HistorySegment HistorySegment::sample(double r, int dim, int m,
                                      const std::function<void(double, std::span<double>)>& f,
                                      Interp interp) {
    HistorySegment x(r, dim, m, interp);
    for (int k = 0; k <= m; ++k) f(x.theta_at(k), x.node(k));
    return x;
}

void HistorySegment::value_at(double theta, std::span<double> out) const {
    if (theta < -r - 1e-12 || theta > 1e-12) throw std::out_of_range("history: theta outside [-r, 0]");
    theta = std::min(0.0, std::max(-r, theta));
    double dtheta = r / m;
    double pos = (theta + r) / dtheta;
    int k = std::min(static_cast<int>(pos), m - 1);
    double t = pos - k;
    auto a = node(k);
    auto b = node(k + 1);
    if (interp == Interp::CubicHermite && !slopes.empty()) {
        double h = dtheta;
        const double* ma = slopes.data() + size_t(k) * dim;
        const double* mb = slopes.data() + size_t(k + 1) * dim;
        double t2 = t * t, t3 = t2 * t;
        double h00 = 2 * t3 - 3 * t2 + 1, h10 = t3 - 2 * t2 + t, h01 = -2 * t3 + 3 * t2,
               h11 = t3 - t2;
        for (int c = 0; c < dim; ++c)
            out[size_t(c)] =
                h00 * a[size_t(c)] + h10 * h * ma[c] + h01 * b[size_t(c)] + h11 * h * mb[c];
        return;
    }
    for (int c = 0; c < dim; ++c) out[size_t(c)] = (1 - t) * a[size_t(c)] + t * b[size_t(c)];
}

double HistorySegment::component_at(double theta, int comp) const {
    if (comp < 0 || comp >= dim) throw std::out_of_range("history: component index");
    if (theta < -r - 1e-12 || theta > 1e-12) throw std::out_of_range("history: theta outside [-r, 0]");
    theta = std::min(0.0, std::max(-r, theta));
    double dtheta = r / m;
    double pos = (theta + r) / dtheta;
    int k = std::min(static_cast<int>(pos), m - 1);
    double t = pos - k;
    if (t == 0.0) return node(k)[size_t(comp)];
    if (interp == Interp::CubicHermite && !slopes.empty()) {
        double buf_theta = theta;
        std::vector<double> tmp(static_cast<size_t>(dim), 0.0);
        value_at(buf_theta, tmp);
        return tmp[size_t(comp)];
    }
    return (1 - t) * node(k)[size_t(comp)] + t * node(k + 1)[size_t(comp)];
}

bool HistorySegment::finite() const {
    for (double v : samples)
        if (!std::isfinite(v)) return false;
    return true;
}

double sup_norm(const HistorySegment& x) {
    double best = 0.0;
    for (int k = 0; k <= x.m; ++k) {
        double s = 0.0;
        auto row = x.node(k);
        for (int c = 0; c < x.dim; ++c) s += row[size_t(c)] * row[size_t(c)];
        best = std::max(best, s);
    }
    return std::sqrt(best);
}

double sup_norm_component(const HistorySegment& x, int comp) {
    if (comp < 0 || comp >= x.dim) throw std::out_of_range("history: component index");
    double best = 0.0;
    for (int k = 0; k <= x.m; ++k) best = std::max(best, std::fabs(x.node(k)[size_t(comp)]));
    return best;
}

HistorySegment shift_Eh(const HistorySegment& x, std::span<const double> v, double h) {
    if (h < 0 || h >= x.r) throw std::invalid_argument("shift: need 0 <= h < r");
    if (static_cast<int>(v.size()) != x.dim) throw std::invalid_argument("shift: dim mismatch");
    if (h == 0.0) return x;
    HistorySegment out(x.r, x.dim, x.m, x.interp);
    std::vector<double> tmp(size_t(x.dim));
    auto newest = x.newest();
    for (int k = 0; k <= x.m; ++k) {
        double theta = out.theta_at(k);
        auto row = out.node(k);
        if (theta > -h) {
            for (int c = 0; c < x.dim; ++c)
                row[size_t(c)] = newest[size_t(c)] + (theta + h) * v[size_t(c)];
        } else {
            x.value_at(theta + h, tmp);
            for (int c = 0; c < x.dim; ++c) row[size_t(c)] = tmp[size_t(c)];
        }
    }
    return out;
}

std::vector<double> at_delay(const HistorySegment& x, double tau) {
    if (tau < 0 || tau > x.r + 1e-12) throw std::out_of_range("at_delay: tau outside [0, r]");
    std::vector<double> out(size_t(x.dim));
    x.value_at(-std::min(tau, x.r), out);
    return out;
}

double window_integral(const HistorySegment& x, int comp,
                       const std::function<double(double)>& integrand) {
    if (comp < 0 || comp >= x.dim) throw std::out_of_range("window_integral: component index");
    double dtheta = x.r / x.m;
    double acc = 0.0;
    double prev = integrand(x.node(0)[size_t(comp)]);
    for (int k = 1; k <= x.m; ++k) {
        double cur = integrand(x.node(k)[size_t(comp)]);
        acc += 0.5 * (prev + cur) * dtheta;
        prev = cur;
    }
    return acc;
}

std::string to_csv(const HistorySegment& x) {
    std::ostringstream os;
    os << "theta";
    for (int c = 1; c <= x.dim; ++c) os << ",x" << c;
    os << "\n";
    for (int k = 0; k <= x.m; ++k) {
        os << fmt17(x.theta_at(k));
        auto row = x.node(k);
        for (int c = 0; c < x.dim; ++c) os << "," << fmt17(row[size_t(c)]);
        os << "\n";
    }
    return os.str();
}

HistorySegment from_csv(const std::string& text) {
    std::istringstream is(text);
    std::string line;
    if (!std::getline(is, line)) throw std::invalid_argument("history csv: empty input");
    int dim = 0;
    for (char c : line)
        if (c == ',') ++dim;
    std::vector<double> thetas;
    std::vector<double> vals;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::istringstream row(line);
        std::string cell;
        int col = 0;
        while (std::getline(row, cell, ',')) {
            double v = std::stod(cell);
            if (col == 0) thetas.push_back(v);
            else vals.push_back(v);
            ++col;
        }
        if (col != dim + 1) throw std::invalid_argument("history csv: ragged row");
    }
    if (thetas.size() < 3) throw std::invalid_argument("history csv: need at least 3 rows");
    int m = static_cast<int>(thetas.size()) - 1;
    double r = -thetas.front();
    HistorySegment x(r, dim, m);
    for (int k = 0; k <= m; ++k)
        for (int c = 0; c < dim; ++c) x.node(k)[size_t(c)] = vals[size_t(k) * dim + size_t(c)];
    return x;
}

}  // namespace kforge
