#pragma once

#include <cmath>

namespace proxvi {

/// Forward-mode dual number: value plus one tangent. The planar flow needs
/// derivatives of its density through an implicit inversion, which is far
/// easier to get right by propagating tangents than by hand-expanding the
/// chain rule.
struct Dual {
    double v = 0.0; // value
    double d = 0.0; // tangent

    Dual() = default;
    Dual(double value) : v(value) {}
    Dual(double value, double tangent) : v(value), d(tangent) {}
};

inline Dual operator+(Dual a, Dual b) { return {a.v + b.v, a.d + b.d}; }
inline Dual operator-(Dual a, Dual b) { return {a.v - b.v, a.d - b.d}; }
inline Dual operator-(Dual a) { return {-a.v, -a.d}; }
inline Dual operator*(Dual a, Dual b) { return {a.v * b.v, a.d * b.v + a.v * b.d}; }
inline Dual operator/(Dual a, Dual b) {
    const double inv = 1.0 / b.v;
    return {a.v * inv, (a.d - a.v * b.d * inv) * inv};
}
inline Dual& operator+=(Dual& a, Dual b) { return a = a + b; }
inline Dual& operator-=(Dual& a, Dual b) { return a = a - b; }
inline Dual& operator*=(Dual& a, Dual b) { return a = a * b; }

inline Dual tanh(Dual a) {
    const double t = std::tanh(a.v);
    return {t, (1.0 - t * t) * a.d};
}
inline Dual exp(Dual a) {
    const double e = std::exp(a.v);
    return {e, e * a.d};
}
inline Dual log(Dual a) { return {std::log(a.v), a.d / a.v}; }
inline Dual log1p(Dual a) { return {std::log1p(a.v), a.d / (1.0 + a.v)}; }
inline Dual sqrt(Dual a) {
    const double s = std::sqrt(a.v);
    return {s, 0.5 * a.d / s};
}
inline Dual abs(Dual a) { return a.v < 0.0 ? -a : a; }

/// log(1 + exp(x)) without overflow.
inline Dual softplus(Dual a) {
    if (a.v > 30.0) return a;
    return log1p(exp(a));
}
inline double softplus(double x) { return x > 30.0 ? x : std::log1p(std::exp(x)); }

// Plain-double twins so templated code over {double, Dual} resolves the same
// unqualified names in this namespace.
inline double tanh(double x) { return std::tanh(x); }
inline double exp(double x) { return std::exp(x); }
inline double log(double x) { return std::log(x); }
inline double log1p(double x) { return std::log1p(x); }
inline double sqrt(double x) { return std::sqrt(x); }
inline double abs(double x) { return std::fabs(x); }

} // namespace proxvi
