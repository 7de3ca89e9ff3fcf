#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace coupled_elast {

using Point = Eigen::Vector2d;
using Vec2 = Eigen::Vector2d;
using Tensor2 = Eigen::Matrix2d;

/// Base of all library errors.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid input (bad mesh, unknown problem, malformed method string, ...).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Linear solver breakdown.
class SolverError : public Error {
 public:
  using Error::Error;
};

inline Vec2 rotate_ccw(const Vec2& v) { return {-v.y(), v.x()}; }

inline double cross(const Vec2& a, const Vec2& b) { return a.x() * b.y() - a.y() * b.x(); }

inline Tensor2 outer(const Vec2& a, const Vec2& b) { return a * b.transpose(); }

/// a b^T + b a^T
inline Tensor2 sym_outer(const Vec2& a, const Vec2& b) {
  return a * b.transpose() + b * a.transpose();
}

inline double ddot(const Tensor2& a, const Tensor2& b) { return (a.array() * b.array()).sum(); }

inline Tensor2 sym_part(const Tensor2& g) { return 0.5 * (g + g.transpose()); }

}  // namespace coupled_elast
