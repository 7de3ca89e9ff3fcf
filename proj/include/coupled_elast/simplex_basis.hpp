#pragma once

#include "coupled_elast/mesh.hpp"

#include <array>
#include <vector>

namespace coupled_elast {

/// Equispaced nodal Lagrange basis of degree p on a triangle, written in
/// barycentric coordinates.
///
/// Node order: the three vertices, then p-1 nodes on each local edge (ordered
/// from the first to the second vertex of `local_edge_vertices(e)`), then the
/// interior nodes.
class SimplexLagrange {
 public:
  explicit SimplexLagrange(int degree) : p_(degree) {
    if (degree < 0) throw ConfigError("Lagrange degree must be >= 0");
    if (p_ == 0) {
      index_.push_back({0, 0, 0});
      return;
    }
    for (int v = 0; v < 3; ++v) {
      std::array<int, 3> a{0, 0, 0};
      a[v] = p_;
      index_.push_back(a);
    }
    for (int e = 0; e < 3; ++e) {
      auto [va, vb] = local_edge_vertices(e);
      for (int s = 1; s < p_; ++s) {
        std::array<int, 3> a{0, 0, 0};
        a[va] = p_ - s;
        a[vb] = s;
        index_.push_back(a);
      }
    }
    for (int i = 1; i < p_; ++i)
      for (int j = 1; i + j < p_; ++j) index_.push_back({p_ - i - j, i, j});
  }

  int degree() const { return p_; }
  int size() const { return static_cast<int>(index_.size()); }
  static int dimension(int p) { return (p + 1) * (p + 2) / 2; }

  int vertex_node(int v) const { return p_ == 0 ? 0 : v; }
  /// Node s (1..p-1) along local edge e.
  int edge_node(int e, int s) const { return 3 + e * (p_ - 1) + (s - 1); }
  int first_interior_node() const { return p_ == 0 ? 0 : 3 * p_; }

  Eigen::Vector3d node(int i) const {
    if (p_ == 0) return Eigen::Vector3d::Constant(1.0 / 3.0);
    return Eigen::Vector3d(index_[i][0], index_[i][1], index_[i][2]) / p_;
  }

  void values(const Eigen::Vector3d& lam, Eigen::Ref<Eigen::VectorXd> out) const {
    if (p_ == 0) {
      out[0] = 1.0;
      return;
    }
    std::array<std::array<double, 16>, 3> f{};
    for (int v = 0; v < 3; ++v) factors(lam[v], f[v].data(), nullptr);
    for (int i = 0; i < size(); ++i) out[i] = f[0][index_[i][0]] * f[1][index_[i][1]] * f[2][index_[i][2]];
  }

  /// out(i, v) = d phi_i / d lambda_v.
  void barycentric_derivatives(const Eigen::Vector3d& lam, Eigen::Ref<Eigen::MatrixXd> out) const {
    if (p_ == 0) {
      out.setZero();
      return;
    }
    std::array<std::array<double, 16>, 3> f{}, df{};
    for (int v = 0; v < 3; ++v) factors(lam[v], f[v].data(), df[v].data());
    for (int i = 0; i < size(); ++i) {
      const auto& a = index_[i];
      out(i, 0) = df[0][a[0]] * f[1][a[1]] * f[2][a[2]];
      out(i, 1) = f[0][a[0]] * df[1][a[1]] * f[2][a[2]];
      out(i, 2) = f[0][a[0]] * f[1][a[1]] * df[2][a[2]];
    }
  }

 private:
  // f[a] = prod_{q<a} (p t - q) / (q + 1), a = 0..p, plus derivatives.
  void factors(double t, double* f, double* df) const {
    f[0] = 1.0;
    if (df) df[0] = 0.0;
    for (int a = 1; a <= p_; ++a) {
      const double g = (p_ * t - (a - 1)) / a;
      if (df) df[a] = df[a - 1] * g + f[a - 1] * double(p_) / a;
      f[a] = f[a - 1] * g;
    }
  }

  int p_;
  std::vector<std::array<int, 3>> index_;
};

/// Affine map data of one triangle.
struct ElementGeometry {
  std::array<Point, 3> x;
  Eigen::Matrix2d jacobian;          // columns x1-x0, x2-x0
  double det = 0.0;
  Eigen::Matrix<double, 3, 2> grad_lambda;  // row v = gradient of lambda_v

  ElementGeometry(const Mesh& m, int t) {
    const auto& tri = m.triangle(t);
    for (int i = 0; i < 3; ++i) x[i] = m.vertex(tri[i]);
    jacobian.col(0) = x[1] - x[0];
    jacobian.col(1) = x[2] - x[0];
    det = jacobian.determinant();
    if (!(det > 0.0)) throw ConfigError("element " + std::to_string(t) + " has non-positive Jacobian");
    const Eigen::Matrix2d inv = jacobian.inverse();
    grad_lambda.row(1) = inv.row(0);
    grad_lambda.row(2) = inv.row(1);
    grad_lambda.row(0) = -(inv.row(0) + inv.row(1));
  }

  Point map(const Eigen::Vector3d& lam) const { return lam[0] * x[0] + lam[1] * x[1] + lam[2] * x[2]; }
  double area() const { return 0.5 * det; }
  Eigen::Vector3d barycentric(const Point& p) const {
    Eigen::Vector2d xi = jacobian.inverse() * (p - x[0]);
    return {1.0 - xi.x() - xi.y(), xi.x(), xi.y()};
  }
};

/// Physical gradients from barycentric derivatives: grads(i,:) = sum_v dphi/dlambda_v grad lambda_v.
inline void physical_gradients(const ElementGeometry& g, const Eigen::MatrixXd& dbary, Eigen::MatrixXd& grads) {
  grads.noalias() = dbary * g.grad_lambda;
}

}  // namespace coupled_elast
