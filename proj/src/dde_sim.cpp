#include "kforge/dde_sim.hpp"

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

// splitmix64: platform-stable generator for reproducible signals
struct SplitMix {
    std::uint64_t s;
    std::uint64_t next() {
        std::uint64_t z = (s += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }
    double uniform01() { return double(next() >> 11) * 0x1.0p-53; }
};

bool divides(double small, double big, double rel = 1e-9) {
    if (small <= 0) return false;
    double q = big / small;
    double qr = std::round(q);
    return qr >= 1 && std::fabs(q - qr) <= rel * std::max(1.0, qr);
}

double euclid(std::span<const double> x) {
    double s = 0;
    for (double v : x) s += v * v;
    return std::sqrt(s);
}

// Dense output over completed steps plus the initial window.
struct DenseHistory {
    double t0, dt;
    int dim;
    const HistorySegment* x0;
    std::vector<double> vals;  // node k at t0 + k dt
    std::vector<double> ders;

    std::span<const double> node_val(int k) const {
        return {vals.data() + size_t(k) * dim, size_t(dim)};
    }

    void eval(double tau, std::span<double> out) const {
        if (tau <= t0 + 1e-15 * std::max(1.0, std::fabs(t0))) {
            double theta = std::max(tau - t0, -x0->r);
            x0->value_at(std::min(theta, 0.0), out);
            return;
        }
        double pos = (tau - t0) / dt;
        int k = static_cast<int>(std::floor(pos + 1e-9));
        double frac = pos - k;
        int last = static_cast<int>(vals.size() / size_t(dim)) - 1;
        k = std::min(k, last);
        if (frac < 1e-9 || k >= last) {
            auto a = node_val(std::min(k, last));
            std::copy(a.begin(), a.end(), out.begin());
            return;
        }
        // cubic hermite on [t_k, t_{k+1}]
        double t = frac, t2 = t * t, t3 = t2 * t;
        double h00 = 2 * t3 - 3 * t2 + 1, h10 = t3 - 2 * t2 + t, h01 = -2 * t3 + 3 * t2,
               h11 = t3 - t2;
        const double* a = vals.data() + size_t(k) * dim;
        const double* b = vals.data() + size_t(k + 1) * dim;
        const double* ma = ders.data() + size_t(k) * dim;
        const double* mb = ders.data() + size_t(k + 1) * dim;
        for (int c = 0; c < dim; ++c)
            out[size_t(c)] = h00 * a[c] + h10 * dt * ma[c] + h01 * b[c] + h11 * dt * mb[c];
    }

    // history window ending at ts whose newest value is xs
    void make_segment(double ts, std::span<const double> xs, HistorySegment& seg) const {
        auto tip = seg.node(seg.m);
        std::copy(xs.begin(), xs.end(), tip.begin());
        for (int j = 1; j <= seg.m; ++j) eval(ts - j * dt, seg.node(seg.m - j));
    }
};

}  // namespace

double GeneralRfdeSpec::zero_equilibrium_residual() const {
    std::vector<double> zv(static_cast<size_t>(dim), 0.0);
    HistorySegment zero = HistorySegment::constant(r, zv, 16);
    std::vector<double> out(static_cast<size_t>(dim), 0.0);
    double worst = 0.0;
    std::vector<double> d(disturbance_box.size(), 0.0);
    for (size_t i = 0; i < disturbance_box.size(); ++i) d[i] = disturbance_box[i].first;
    for (double t : {0.0, 1.3, 11.0}) {
        rhs(t, d, zero, 0.0, out);
        for (double v : out) worst = std::max(worst, std::fabs(v));
    }
    return worst;
}

std::span<const double> DisturbanceSignal::at(double t) const {
    if (dims == 0) return {};
    int K = static_cast<int>(values.size() / size_t(dims));
    int k = 0;
    if (t > t0 && dwell > 0) k = std::min(static_cast<int>((t - t0) / dwell + 1e-12), K - 1);
    k = std::max(0, k);
    return {values.data() + size_t(k) * dims, size_t(dims)};
}

DisturbanceSignal DisturbanceSignal::zero(int dims, double t0, double horizon, double dwell) {
    DisturbanceSignal s;
    s.t0 = t0;
    s.dwell = dwell;
    s.dims = dims;
    int K = std::max(1, static_cast<int>(std::ceil(horizon / dwell)) + 1);
    s.values.assign(size_t(K) * size_t(std::max(dims, 1)), 0.0);
    if (dims == 0) s.values.clear();
    return s;
}

DisturbanceSignal make_disturbance(std::uint64_t seed, double dwell,
                                   std::span<const std::pair<double, double>> box, double t0,
                                   double horizon) {
    if (dwell <= 0) throw IntegrateError("make_disturbance: dwell must be positive");
    for (size_t i = 0; i < box.size(); ++i)
        if (box[i].first > box[i].second)
            throw IntegrateError("make_disturbance: degenerate box component " + std::to_string(i));
    DisturbanceSignal s;
    s.t0 = t0;
    s.dwell = dwell;
    s.dims = static_cast<int>(box.size());
    s.seed = seed;
    int K = std::max(1, static_cast<int>(std::ceil(horizon / dwell)) + 1);
    SplitMix rng{seed * 0x9e3779b97f4a7c15ULL + 0x2545F4914F6CDD1DULL};
    s.values.resize(size_t(K) * box.size());
    for (int k = 0; k < K; ++k)
        for (size_t c = 0; c < box.size(); ++c) {
            auto [lo, hi] = box[c];
            s.values[size_t(k) * box.size() + c] = lo + (hi - lo) * rng.uniform01();
        }
    return s;
}

HistorySegment TrajectoryRecord::history_at(int k) const {
    int m = static_cast<int>(std::round(initial.r / dt));
    HistorySegment seg(initial.r, dim, m);
    for (int j = 0; j <= m; ++j) {
        int idx = k - (m - j);
        auto row = seg.node(j);
        if (idx >= 0) {
            auto st = state_at(idx);
            std::copy(st.begin(), st.end(), row.begin());
        } else {
            double theta = idx * dt;  // relative to t0, negative
            initial.value_at(std::max(theta, -initial.r), row);
        }
    }
    return seg;
}

std::string TrajectoryRecord::to_csv(
    const std::function<double(const HistorySegment&)>& functional) const {
    std::ostringstream os;
    os << "t";
    for (int c = 1; c <= dim; ++c) os << ",x" << c;
    os << ",u";
    for (int c = 1; c <= n_dist; ++c) os << ",d" << c;
    if (functional) os << ",V";
    os << "\n";
    for (size_t k = 0; k < times.size(); ++k) {
        os << fmt17(times[k]);
        auto st = state_at(static_cast<int>(k));
        for (int c = 0; c < dim; ++c) os << "," << fmt17(st[size_t(c)]);
        os << "," << fmt17(controls[k]);
        for (int c = 0; c < n_dist; ++c) os << "," << fmt17(dists[k * size_t(n_dist) + size_t(c)]);
        if (functional) os << "," << fmt17(functional(history_at(static_cast<int>(k))));
        os << "\n";
    }
    return os.str();
}

std::string TrajectoryRecord::run_manifest_json(std::uint64_t seed, double horizon) const {
    std::ostringstream os;
    const char* st = status == RunStatus::Completed  ? "completed"
                     : status == RunStatus::BlowUp   ? "blow-up"
                                                     : "step-failure";
    os << "{\"seed\": " << seed << ", \"dt\": " << fmt17(dt) << ", \"t0\": " << fmt17(t0)
       << ", \"horizon\": " << fmt17(horizon) << ", \"dim\": " << dim << ", \"status\": \"" << st
       << "\"";
    if (status != RunStatus::Completed) os << ", \"fail_time\": " << fmt17(fail_time);
    os << "}";
    return os.str();
}

TrajectoryRecord integrate(const GeneralRfdeSpec& spec, const HistorySegment& x0,
                           const DisturbanceSignal& d, const FeedbackFn& feedback, double t0,
                           double T, double dt) {
    if (T <= t0) throw IntegrateError("integrate: need T > t0");
    if (!divides(dt, spec.r)) throw IntegrateError("integrate: dt must divide the delay r");
    if (d.dims > 0 && !divides(dt, d.dwell))
        throw IntegrateError("integrate: dt must divide the disturbance dwell");
    if (x0.dim != spec.dim) throw IntegrateError("integrate: x0 dimension mismatch");

    const int n = spec.dim;
    const int m = static_cast<int>(std::round(spec.r / dt));
    const int steps = static_cast<int>(std::round((T - t0) / dt));

    TrajectoryRecord rec;
    rec.t0 = t0;
    rec.dt = dt;
    rec.dim = n;
    rec.n_dist = d.dims;
    rec.initial = x0;
    rec.times.reserve(size_t(steps) + 1);
    rec.states.reserve((size_t(steps) + 1) * size_t(n));

    DenseHistory hist{t0, dt, n, &x0, {}, {}};
    hist.vals.reserve((size_t(steps) + 1) * size_t(n));
    hist.ders.reserve((size_t(steps) + 1) * size_t(n));

    std::vector<double> x(static_cast<size_t>(n), {});
    {
        auto newest = x0.newest();
        std::copy(newest.begin(), newest.end(), x.begin());
    }
    hist.vals.insert(hist.vals.end(), x.begin(), x.end());
    hist.ders.resize(size_t(n), 0.0);

    HistorySegment seg(spec.r, n, m);
    std::vector<double> k1(static_cast<size_t>(n), 0.0), k2(k1), k3(k1), k4(k1), stage(k1);

    auto record_node = [&](double t, double u, std::span<const double> dv) {
        rec.times.push_back(t);
        rec.states.insert(rec.states.end(), x.begin(), x.end());
        rec.controls.push_back(u);
        for (int c = 0; c < d.dims; ++c) rec.dists.push_back(dv.empty() ? 0.0 : dv[size_t(c)]);
    };

    auto fail = [&](RunStatus st, double t) {
        rec.status = st;
        rec.fail_time = t;
        rec.derivs = hist.ders;
        return rec;
    };

    for (int k = 0; k <= steps; ++k) {
        double t = t0 + k * dt;
        if (euclid(x) > kBlowUpThreshold) {
            record_node(t, 0.0, d.at(t));
            return fail(RunStatus::BlowUp, t);
        }

        // node derivative (k1) closes the previous hermite piece
        hist.make_segment(t, x, seg);
        auto dv = d.at(t);
        double u1 = feedback ? feedback(t, seg) : 0.0;
        spec.rhs(t, dv, seg, u1, k1);
        for (double v : k1)
            if (!std::isfinite(v)) {
                record_node(t, u1, dv);
                return fail(RunStatus::StepFailure, t);
            }
        std::copy(k1.begin(), k1.end(), hist.ders.begin() + size_t(k) * size_t(n));
        record_node(t, u1, dv);
        if (k == steps) break;

        auto do_stage = [&](double c, const std::vector<double>& slope, std::vector<double>& out)
            -> bool {
            double ts = t + c * dt;
            for (int i = 0; i < n; ++i) stage[size_t(i)] = x[size_t(i)] + c * dt * slope[size_t(i)];
            hist.make_segment(ts, stage, seg);
            auto dvs = d.at(ts);
            double us = feedback ? feedback(ts, seg) : 0.0;
            spec.rhs(ts, dvs, seg, us, out);
            for (double v : out)
                if (!std::isfinite(v)) return false;
            return true;
        };

        if (!do_stage(0.5, k1, k2)) return fail(RunStatus::StepFailure, t);
        if (!do_stage(0.5, k2, k3)) return fail(RunStatus::StepFailure, t);
        if (!do_stage(1.0, k3, k4)) return fail(RunStatus::StepFailure, t);

        for (int i = 0; i < n; ++i)
            x[size_t(i)] += dt / 6.0 *
                            (k1[size_t(i)] + 2 * k2[size_t(i)] + 2 * k3[size_t(i)] + k4[size_t(i)]);
        hist.vals.insert(hist.vals.end(), x.begin(), x.end());
        hist.ders.resize(hist.vals.size(), 0.0);
    }

    rec.derivs = hist.ders;
    return rec;
}

OdeRecord integrate_ode(int dim, const OdeRhsFn& rhs, std::span<const double> x0,
                        const DisturbanceSignal& d, const OdeFeedbackFn& feedback, double t0,
                        double T, double dt) {
    if (T <= t0) throw IntegrateError("integrate_ode: need T > t0");
    const int steps = static_cast<int>(std::round((T - t0) / dt));
    OdeRecord rec;
    rec.dim = dim;
    std::vector<double> x(x0.begin(), x0.end());
    std::vector<double> k1(static_cast<size_t>(dim), 0.0), k2(k1), k3(k1), k4(k1), stage(k1);

    auto push = [&](double t) {
        rec.times.push_back(t);
        rec.states.insert(rec.states.end(), x.begin(), x.end());
    };

    for (int k = 0; k <= steps; ++k) {
        double t = t0 + k * dt;
        push(t);
        if (euclid(x) > kBlowUpThreshold) {
            rec.status = RunStatus::BlowUp;
            rec.fail_time = t;
            return rec;
        }
        if (k == steps) break;
        auto eval = [&](double c, const std::vector<double>& slope, std::vector<double>& out) {
            double ts = t + c * dt;
            for (int i = 0; i < dim; ++i)
                stage[size_t(i)] = x[size_t(i)] + c * dt * slope[size_t(i)];
            double us = feedback ? feedback(ts, stage) : 0.0;
            rhs(ts, d.at(ts), stage, us, out);
            for (double v : out)
                if (!std::isfinite(v)) return false;
            return true;
        };
        std::vector<double> z(size_t(dim), 0.0);
        if (!eval(0.0, z, k1) || !eval(0.5, k1, k2) || !eval(0.5, k2, k3) || !eval(1.0, k3, k4)) {
            rec.status = RunStatus::StepFailure;
            rec.fail_time = t;
            return rec;
        }
        for (int i = 0; i < dim; ++i)
            x[size_t(i)] += dt / 6.0 *
                            (k1[size_t(i)] + 2 * k2[size_t(i)] + 2 * k3[size_t(i)] + k4[size_t(i)]);
    }
    return rec;
}

namespace {

// Exact method-of-steps reference for xdot(t) = -x(t-1), unit history: the
// solution is a polynomial on each unit interval; working in the local
// coordinate tau = t - k the coefficient recursion is a plain antiderivative.
double delayed_linear_reference(double t) {
    if (t <= 0.0) return 1.0;
    int k = std::min(static_cast<int>(t), 63);
    double tau = t - k;
    if (t == std::floor(t) && k >= 1) {
        k -= 1;
        tau = 1.0;
    }
    std::vector<double> coef{1.0};  // q on [-1, 0]
    for (int seg = 0; seg <= k; ++seg) {
        std::vector<double> next(coef.size() + 1, 0.0);
        for (size_t j = 0; j < coef.size(); ++j) next[j + 1] = -coef[j] / double(j + 1);
        // continuity: the new segment starts where the previous one ended
        double prev_end = 0.0;
        for (double cj : coef) prev_end += cj;
        next[0] = prev_end;
        coef = std::move(next);
    }
    double acc = 0.0;
    for (size_t j = coef.size(); j-- > 0;) acc = acc * tau + coef[j];
    return acc;
}

}  // namespace

OrderCheckResult order_check(const std::string& problem, int halvings) {
    OrderCheckResult out;
    auto run_case = [&](double dt) -> double {
        if (problem == "linear_decay") {
            OdeRhsFn rhs = [](double, std::span<const double>, std::span<const double> x, double,
                              std::span<double> o) { o[0] = -x[0]; };
            std::vector<double> x0{1.0};
            auto rec = integrate_ode(1, rhs, x0, DisturbanceSignal::zero(0, 0, 1, 1), {}, 0.0, 1.0,
                                     dt);
            return std::fabs(rec.states.back() - std::exp(-1.0));
        }
        if (problem == "delayed_linear") {
            GeneralRfdeSpec spec;
            spec.dim = 1;
            spec.r = 1.0;
            spec.rhs = [](double, std::span<const double>, const HistorySegment& x, double,
                          std::span<double> o) { o[0] = -at_delay(x, 1.0)[0]; };
            HistorySegment x0 = HistorySegment::constant(1.0, std::vector<double>{1.0},
                                                         std::max(2, int(std::round(1.0 / dt))));
            // measure past several breakpoints, where the solution has genuine
            // high-degree segments and the dense output is exercised
            auto rec = integrate(spec, x0, DisturbanceSignal::zero(0, 0, 5, 1), {}, 0.0, 5.0, dt);
            return std::fabs(rec.states.back() - delayed_linear_reference(5.0));
        }
        throw IntegrateError("order_check: unknown problem '" + problem + "'");
    };
    double dt = problem == "delayed_linear" ? 1.0 / 8.0 : 0.1;
    for (int k = 0; k <= halvings; ++k) {
        out.dts.push_back(dt);
        out.errors.push_back(run_case(dt));
        dt /= 2;
    }
    for (size_t k = 0; k + 1 < out.errors.size(); ++k) {
        if (out.errors[k + 1] < 1e-13) {
            out.saturated = true;
            break;
        }
        out.observed_orders.push_back(std::log2(out.errors[k] / out.errors[k + 1]));
    }
    return out;
}

}  // namespace kforge
