#pragma once

#include "coupled_elast/core.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <map>
#include <mutex>
#include <vector>

namespace coupled_elast {

/// Quadrature on the reference triangle {(x,y): x,y >= 0, x+y <= 1} (weights
/// sum to 1/2) or on the unit interval (weights sum to 1).
struct QuadratureRule {
  std::vector<Eigen::Vector2d> points;  // reference coordinates; for edge rules only x() is used
  std::vector<double> weights;
  int degree = 0;

  std::size_t size() const { return weights.size(); }
  /// Barycentric coordinates (1-x-y, x, y) of triangle point q.
  Eigen::Vector3d barycentric(std::size_t q) const {
    return {1.0 - points[q].x() - points[q].y(), points[q].x(), points[q].y()};
  }
};

inline constexpr int kMaxQuadratureDegree = 20;

namespace detail {

/// Golub-Welsch for the Jacobi weight (1-x)^alpha on [-1,1] (beta = 0),
/// mapped to [0,1] with weight (1-t)^alpha.
inline void gauss_jacobi01(int n, int alpha, std::vector<double>& x, std::vector<double>& w) {
  const double a = alpha, b = 0.0;
  Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    const double s = 2.0 * i + a + b;
    jac(i, i) = (i == 0 && a + b == 0.0) ? (b - a) / (a + b + 2.0) : (b * b - a * a) / (s * (s + 2.0));
    if (i + 1 < n) {
      const double j = i + 1.0;
      const double sj = 2.0 * j + a + b;
      const double off = std::sqrt(4.0 * j * (j + a) * (j + b) * (j + a + b) / ((sj - 1.0) * sj * sj * (sj + 1.0)));
      jac(i, i + 1) = jac(i + 1, i) = off;
    }
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(jac);
  const double mu0 = std::pow(2.0, a + b + 1.0) / (a + 1.0);  // integral of (1-x)^a on [-1,1]
  x.resize(n);
  w.resize(n);
  for (int i = 0; i < n; ++i) {
    const double v0 = es.eigenvectors()(0, i);
    x[i] = 0.5 * (1.0 + es.eigenvalues()(i));
    w[i] = mu0 * v0 * v0 / std::pow(2.0, a + 1.0);
  }
}

inline void check_degree(int d) {
  if (d < 1 || d > kMaxQuadratureDegree)
    throw ConfigError("quadrature degree " + std::to_string(d) + " outside supported range [1, " +
                      std::to_string(kMaxQuadratureDegree) + "]");
}

}  // namespace detail

/// Gauss-Legendre on [0,1] with ceil((d+1)/2) points.
inline QuadratureRule edge_rule(int d) {
  detail::check_degree(d);
  const int n = (d + 2) / 2;
  std::vector<double> x, w;
  detail::gauss_jacobi01(n, 0, x, w);
  QuadratureRule r;
  r.degree = d;
  for (int i = 0; i < n; ++i) {
    r.points.emplace_back(x[i], 0.0);
    r.weights.push_back(w[i]);
  }
  return r;
}

/// Collapsed (Duffy) product rule: Gauss-Legendre in the collapsed direction
/// times Gauss-Jacobi(1,0) in the other. Positive weights, interior points.
inline QuadratureRule triangle_rule(int d) {
  detail::check_degree(d);
  const int n = (d + 2) / 2;
  std::vector<double> xs, ws, xt, wt;
  detail::gauss_jacobi01(n, 0, xs, ws);
  detail::gauss_jacobi01(n, 1, xt, wt);
  QuadratureRule r;
  r.degree = d;
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      r.points.emplace_back(xs[i] * (1.0 - xt[j]), xt[j]);
      r.weights.push_back(ws[i] * wt[j]);
    }
  return r;
}

/// Memoized rules; returned references stay valid for the program lifetime.
inline const QuadratureRule& cached_triangle_rule(int d) {
  static std::mutex mu;
  static std::map<int, QuadratureRule> cache;
  std::lock_guard lock(mu);
  auto it = cache.find(d);
  if (it == cache.end()) it = cache.emplace(d, triangle_rule(d)).first;
  return it->second;
}

inline const QuadratureRule& cached_edge_rule(int d) {
  static std::mutex mu;
  static std::map<int, QuadratureRule> cache;
  std::lock_guard lock(mu);
  auto it = cache.find(d);
  if (it == cache.end()) it = cache.emplace(d, edge_rule(d)).first;
  return it->second;
}

}  // namespace coupled_elast
