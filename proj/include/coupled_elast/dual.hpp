#pragma once

#include <cmath>

namespace coupled_elast {

/// Forward-mode dual number in two variables. Nesting Dual<Dual<double>>
/// yields exact second derivatives of closed-form fields.
template <class T>
struct Dual {
  T v{};
  T d[2]{};

  Dual() = default;
  Dual(double c) : v(c) {}  // NOLINT: constants promote implicitly
  Dual(T value, T dx, T dy) : v(value), d{dx, dy} {}
};

template <class T> Dual<T> operator+(const Dual<T>& a, const Dual<T>& b) { return {a.v + b.v, a.d[0] + b.d[0], a.d[1] + b.d[1]}; }
template <class T> Dual<T> operator-(const Dual<T>& a, const Dual<T>& b) { return {a.v - b.v, a.d[0] - b.d[0], a.d[1] - b.d[1]}; }
template <class T> Dual<T> operator-(const Dual<T>& a) { return {-a.v, -a.d[0], -a.d[1]}; }
template <class T> Dual<T> operator*(const Dual<T>& a, const Dual<T>& b) {
  return {a.v * b.v, a.d[0] * b.v + a.v * b.d[0], a.d[1] * b.v + a.v * b.d[1]};
}
template <class T> Dual<T> operator/(const Dual<T>& a, const Dual<T>& b) {
  const T inv = T(1.0) / b.v;
  const T q = a.v * inv;
  return {q, (a.d[0] - q * b.d[0]) * inv, (a.d[1] - q * b.d[1]) * inv};
}
template <class T> Dual<T> operator+(const Dual<T>& a, double c) { return a + Dual<T>(c); }
template <class T> Dual<T> operator+(double c, const Dual<T>& a) { return Dual<T>(c) + a; }
template <class T> Dual<T> operator-(const Dual<T>& a, double c) { return a - Dual<T>(c); }
template <class T> Dual<T> operator-(double c, const Dual<T>& a) { return Dual<T>(c) - a; }
template <class T> Dual<T> operator*(const Dual<T>& a, double c) { return {a.v * c, a.d[0] * c, a.d[1] * c}; }
template <class T> Dual<T> operator*(double c, const Dual<T>& a) { return a * c; }
template <class T> Dual<T> operator/(const Dual<T>& a, double c) { return a * (1.0 / c); }
template <class T> Dual<T> operator/(double c, const Dual<T>& a) { return Dual<T>(c) / a; }

template <class T> Dual<T> chain(const Dual<T>& a, T value, T slope) { return {value, slope * a.d[0], slope * a.d[1]}; }

using std::atan2;
using std::cos;
using std::exp;
using std::pow;
using std::sin;
using std::sqrt;

template <class T> Dual<T> sin(const Dual<T>& a) { return chain(a, sin(a.v), cos(a.v)); }
template <class T> Dual<T> cos(const Dual<T>& a) { return chain(a, cos(a.v), -sin(a.v)); }
template <class T> Dual<T> exp(const Dual<T>& a) { const T e = exp(a.v); return chain(a, e, e); }
template <class T> Dual<T> sqrt(const Dual<T>& a) { const T s = sqrt(a.v); return chain(a, s, T(0.5) / s); }
template <class T> Dual<T> pow(const Dual<T>& a, double p) { return chain(a, pow(a.v, p), p * pow(a.v, p - 1.0)); }
template <class T> Dual<T> atan2(const Dual<T>& y, const Dual<T>& x) {
  const T r2 = x.v * x.v + y.v * y.v;
  return {atan2(y.v, x.v), (x.v * y.d[0] - y.v * x.d[0]) / r2, (x.v * y.d[1] - y.v * x.d[1]) / r2};
}

template <class T> double value_of(const T& x) { return x; }
template <class T> double value_of(const Dual<T>& x) { return value_of(x.v); }

}  // namespace coupled_elast
