#pragma once

// Forward-mode differentiation scalars. Dual<T> nests, so Dual<Dual<double>>
// carries second directional derivatives and so on. The gain chain in
// backstep.hpp relies on this nesting to differentiate through |grad k_j|.

#include <cmath>
#include <stdexcept>
#include <type_traits>
#include <utility>

namespace kforge {

template <class T>
struct Dual {
    T v{};  // value
    T d{};  // directional derivative

    Dual() = default;
    Dual(double x) : v(x), d() {}  // recursive lift from a constant
    template <class U = T, class = std::enable_if_t<!std::is_same_v<U, double>>>
    Dual(T value) : v(std::move(value)), d() {}
    Dual(T value, T deriv) : v(std::move(value)), d(std::move(deriv)) {}
};

using D1 = Dual<double>;
using D2 = Dual<D1>;

// ---- jet order introspection -------------------------------------------

template <class T>
struct jet_order {
    static constexpr int value = 0;
};
template <class T>
struct jet_order<Dual<T>> {
    static constexpr int value = jet_order<T>::value + 1;
};
template <class T>
inline constexpr int jet_order_v = jet_order<T>::value;

// Deepest nesting the gain chain will instantiate. Runtime use stays well
// below this for any sane system order.
inline constexpr int kMaxJetOrder = 6;

inline double value_of(double x) { return x; }
template <class T>
double value_of(const Dual<T>& x) {
    return value_of(x.v);
}

template <class T>
T zero_like(const Dual<T>&) {
    return T{};
}

// ---- arithmetic ----------------------------------------------------------

template <class T>
Dual<T> operator+(const Dual<T>& a, const Dual<T>& b) {
    return {a.v + b.v, a.d + b.d};
}
template <class T>
Dual<T> operator-(const Dual<T>& a, const Dual<T>& b) {
    return {a.v - b.v, a.d - b.d};
}
template <class T>
Dual<T> operator-(const Dual<T>& a) {
    return {-a.v, -a.d};
}
template <class T>
Dual<T> operator*(const Dual<T>& a, const Dual<T>& b) {
    return {a.v * b.v, a.d * b.v + a.v * b.d};
}
template <class T>
Dual<T> operator/(const Dual<T>& a, const Dual<T>& b) {
    T q = a.v / b.v;
    return {q, (a.d - q * b.d) / b.v};
}

template <class T>
Dual<T> operator+(const Dual<T>& a, double b) {
    return {a.v + b, a.d};
}
template <class T>
Dual<T> operator+(double a, const Dual<T>& b) {
    return {a + b.v, b.d};
}
template <class T>
Dual<T> operator-(const Dual<T>& a, double b) {
    return {a.v - b, a.d};
}
template <class T>
Dual<T> operator-(double a, const Dual<T>& b) {
    return {a - b.v, -b.d};
}
template <class T>
Dual<T> operator*(const Dual<T>& a, double b) {
    return {a.v * b, a.d * b};
}
template <class T>
Dual<T> operator*(double a, const Dual<T>& b) {
    return {b.v * a, b.d * a};
}
template <class T>
Dual<T> operator/(const Dual<T>& a, double b) {
    return {a.v / b, a.d / b};
}
template <class T>
Dual<T> operator/(double a, const Dual<T>& b) {
    Dual<T> an(a);
    return an / b;
}

template <class T>
bool operator<(const Dual<T>& a, const Dual<T>& b) {
    return value_of(a) < value_of(b);
}
template <class T>
bool operator<(const Dual<T>& a, double b) {
    return value_of(a) < b;
}
template <class T>
bool operator>(const Dual<T>& a, double b) {
    return value_of(a) > b;
}

// ---- elementary functions --------------------------------------------------

using std::abs;
using std::cos;
using std::exp;
using std::log;
using std::sin;
using std::sqrt;

template <class T>
Dual<T> exp(const Dual<T>& x) {
    T e = exp(x.v);
    return {e, e * x.d};
}
template <class T>
Dual<T> log(const Dual<T>& x) {
    return {log(x.v), x.d / x.v};
}
template <class T>
Dual<T> sin(const Dual<T>& x) {
    return {sin(x.v), cos(x.v) * x.d};
}
template <class T>
Dual<T> cos(const Dual<T>& x) {
    return {cos(x.v), -sin(x.v) * x.d};
}
template <class T>
Dual<T> sqrt(const Dual<T>& x) {
    T s = sqrt(x.v);
    return {s, x.d / (2.0 * s)};
}
// |x| differentiated away from 0 (sign of the primal value).
template <class T>
Dual<T> abs(const Dual<T>& x) {
    if (value_of(x.v) < 0.0) return {-x.v, -x.d};
    return x;
}

inline double sq(double x) { return x * x; }
template <class T>
Dual<T> sq(const Dual<T>& x) {
    return x * x;
}

template <class T>
T pow_int(T base, int e) {
    if (e < 0) throw std::invalid_argument("pow_int: negative exponent");
    T acc(1.0);
    while (e > 0) {
        if (e & 1) acc = acc * base;
        base = base * base;
        e >>= 1;
    }
    return acc;
}

// pow with a real exponent, via exp/log (positive base required).
inline double pow_real(double b, double e) { return std::pow(b, e); }
template <class T>
Dual<T> pow_real(const Dual<T>& b, double e) {
    if (e == 2.0) return b * b;
    if (e == 1.0) return b;
    if (e == 0.0) return Dual<T>(1.0);
    if (e == std::floor(e) && std::fabs(e) < 64.0 && e > 0) return pow_int(b, static_cast<int>(e));
    return exp(log(b) * e);
}

}  // namespace kforge
