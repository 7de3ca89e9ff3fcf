#pragma once

#include "coupled_elast/assembly.hpp"
#include "coupled_elast/solver.hpp"

#include <cmath>
#include <limits>

namespace coupled_elast {

/// Basis values and barycentric derivatives tabulated on a quadrature rule.
struct BasisTable {
  std::vector<Eigen::VectorXd> phi;
  std::vector<Eigen::MatrixXd> dbary;

  BasisTable(const SimplexLagrange& b, const QuadratureRule& rule) {
    phi.resize(rule.size());
    dbary.resize(rule.size());
    for (std::size_t q = 0; q < rule.size(); ++q) {
      phi[q].resize(b.size());
      dbary[q].resize(b.size(), 3);
      b.values(rule.barycentric(q), phi[q]);
      b.barycentric_derivatives(rule.barycentric(q), dbary[q]);
    }
  }
};

/// Element-wise discontinuous vector polynomial field on the minus elements.
struct DGField {
  DGVectorSpace space;
  Eigen::VectorXd coef;

  Vec2 value(int t, const Eigen::Vector3d& lam) const {
    Eigen::VectorXd phi(space.basis().size());
    space.basis().values(lam, phi);
    return combine(t, phi);
  }
  Vec2 combine(int t, const Eigen::VectorXd& phi) const {
    const int off = space.element_offset(t);
    Vec2 v = Vec2::Zero();
    for (int a = 0; a < phi.size(); ++a) v += phi[a] * Vec2(coef[off + 2 * a], coef[off + 2 * a + 1]);
    return v;
  }
  /// G(i,j) = d v_i / d x_j from physical basis gradients.
  Tensor2 gradient(int t, const Eigen::MatrixXd& grads) const {
    const int off = space.element_offset(t);
    Tensor2 g = Tensor2::Zero();
    for (int a = 0; a < grads.rows(); ++a)
      for (int c = 0; c < 2; ++c) g.row(c) += coef[off + 2 * a + c] * grads.row(a);
    return g;
  }
};

/// A solved coupled system viewed as fields. Holds a reference to the discretization.
class DiscreteSolution {
 public:
  DiscreteSolution(const Discretization& d, Eigen::VectorXd x) : d_(&d), x_(std::move(x)) {
    if (x_.size() != d.layout.size()) throw Error("solution size does not match the discretization");
  }

  const Discretization& discretization() const { return *d_; }
  const Eigen::VectorXd& vector() const { return x_; }

  double sigma_coef(int dof) const { return x_[d_->layout.sigma_offset() + dof]; }
  double u_plus_coef(int dof) const { return x_[d_->layout.u_plus_offset() + dof]; }
  double u_minus_coef(int dof) const { return x_[d_->layout.u_minus_offset() + dof]; }

  DGField u_minus_field() const {
    if (!d_->u_minus) throw Error("no minus displacement in this discretization");
    return {*d_->u_minus, x_.segment(d_->layout.u_minus_offset(), d_->layout.n_u_minus)};
  }

  Vec2 displacement(int t, const Eigen::Vector3d& lam) const {
    if (d_->partition.is_minus(t)) {
      const DGVectorSpace& s = *d_->u_minus;
      Eigen::VectorXd phi(s.basis().size());
      s.basis().values(lam, phi);
      const int off = s.element_offset(t);
      Vec2 v = Vec2::Zero();
      for (int a = 0; a < phi.size(); ++a) v += phi[a] * Vec2(u_minus_coef(off + 2 * a), u_minus_coef(off + 2 * a + 1));
      return v;
    }
    const LagrangeSpace& s = *d_->u_plus;
    Eigen::VectorXd phi(s.basis().size());
    s.basis().values(lam, phi);
    auto nodes = s.element_nodes(t);
    Vec2 v = Vec2::Zero();
    for (int a = 0; a < phi.size(); ++a) v += phi[a] * Vec2(u_plus_coef(2 * nodes[a]), u_plus_coef(2 * nodes[a] + 1));
    return v;
  }

  /// Plus elements only: G(i,j) = d u_i / d x_j.
  Tensor2 displacement_gradient(int t, const Eigen::Vector3d& lam) const {
    const LagrangeSpace& s = *d_->u_plus;
    Eigen::VectorXd phi;
    Eigen::MatrixXd grads;
    s.evaluate(d_->mesh, t, lam, phi, grads);
    return plus_gradient(t, grads);
  }
  Tensor2 plus_gradient(int t, const Eigen::MatrixXd& grads) const {
    auto nodes = d_->u_plus->element_nodes(t);
    Tensor2 g = Tensor2::Zero();
    for (int a = 0; a < grads.rows(); ++a)
      for (int c = 0; c < 2; ++c) g.row(c) += u_plus_coef(2 * nodes[a] + c) * grads.row(a);
    return g;
  }

  /// Hu-Zhang stress on minus elements, A^{-1} eps(u_h+) on plus elements.
  Tensor2 stress(int t, const Eigen::Vector3d& lam) const {
    if (!d_->partition.is_minus(t)) return d_->materials[t].stiffness(sym_part(displacement_gradient(t, lam)));
    const HuZhangSpace& s = *d_->stress;
    Eigen::VectorXd phi(s.basis().size());
    s.basis().values(lam, phi);
    auto dofs = s.element_dofs(t);
    auto tens = s.element_tensors(t);
    Tensor2 v = Tensor2::Zero();
    for (std::size_t j = 0; j < dofs.size(); ++j) v += sigma_coef(dofs[j]) * phi[j / 3] * tens[j];
    return v;
  }

  /// Minus elements only.
  Vec2 stress_divergence(int t, const Eigen::Vector3d& lam) const {
    std::vector<Tensor2> vals;
    std::vector<Vec2> divs;
    d_->stress->evaluate(d_->mesh, t, lam, vals, divs);
    auto dofs = d_->stress->element_dofs(t);
    Vec2 v = Vec2::Zero();
    for (std::size_t j = 0; j < dofs.size(); ++j) v += sigma_coef(dofs[j]) * divs[j];
    return v;
  }

 private:
  const Discretization* d_;
  Eigen::VectorXd x_;
};

// ---------------------------------------------------------------------------

/// L2 projection onto an element-wise vector P_p space (Q_h on the minus elements).
inline DGField l2_project(const Mesh& m, const DGVectorSpace& space, const std::function<Vec2(const Point&)>& u,
                          int quad_degree = -1) {
  const SimplexLagrange& b = space.basis();
  if (quad_degree < 0) quad_degree = std::min(kMaxQuadratureDegree, 2 * b.degree() + 6);
  const QuadratureRule& rule = cached_triangle_rule(quad_degree);
  const BasisTable tab(b, rule);
  const int n = b.size();
  Eigen::MatrixXd mass = Eigen::MatrixXd::Zero(n, n);
  for (std::size_t q = 0; q < rule.size(); ++q) mass.noalias() += rule.weights[q] * tab.phi[q] * tab.phi[q].transpose();
  const Eigen::LLT<Eigen::MatrixXd> llt(mass);
  DGField f{space, Eigen::VectorXd::Zero(space.num_dofs())};
  for (int t : space.elements()) {
    const ElementGeometry g(m, t);
    Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(n, 2);
    for (std::size_t q = 0; q < rule.size(); ++q) {
      const Vec2 v = u(g.map(rule.barycentric(q)));
      rhs.noalias() += rule.weights[q] * tab.phi[q] * v.transpose();
    }
    const Eigen::MatrixXd c = llt.solve(rhs);  // det cancels
    const int off = space.element_offset(t);
    for (int a = 0; a < n; ++a)
      for (int comp = 0; comp < 2; ++comp) f.coef[off + 2 * a + comp] = c(a, comp);
  }
  return f;
}

/// Element-local post-processed displacement u* in P_{k+1}: on each minus element
///   (e(u*), e(v)) + (v, phi) = (A sigma_h, e(v)),   (u*, psi) = (u_h, psi)
/// for v in P_{k+1}^2 and phi, psi in P_{k-1}^2.
inline DGField postprocess_displacement(const DiscreteSolution& sol) {
  const Discretization& d = sol.discretization();
  if (!d.stress) throw Error("post-processing requires a Hu-Zhang component");
  const Mesh& m = d.mesh;
  const int k = d.stress->degree();
  DGField out{build_dg_space(m, d.partition, k + 1), {}};
  out.coef = Eigen::VectorXd::Zero(out.space.num_dofs());
  const SimplexLagrange& pb = out.space.basis();
  const SimplexLagrange& qb = d.u_minus->basis();
  const SimplexLagrange& sb = d.stress->basis();
  const QuadratureRule& rule = cached_triangle_rule(2 * k + 2);
  const BasisTable tp(pb, rule), tq(qb, rule), ts(sb, rule);
  const detail::ReferenceIntegrals ref(pb, nullptr);
  const int np = pb.size(), nq = qb.size();
  Eigen::MatrixXd cross = Eigen::MatrixXd::Zero(np, nq);
  for (std::size_t q = 0; q < rule.size(); ++q) cross.noalias() += rule.weights[q] * tp.phi[q] * tq.phi[q].transpose();
  const Material unit{0.0, 0.5};  // (A^{-1} e, e) = (e, e)
  const DGField uh = sol.u_minus_field();

  for (int t : d.u_minus->elements()) {
    const ElementGeometry g(m, t);
    const int nv = 2 * np, nm = 2 * nq;
    Eigen::MatrixXd sys = Eigen::MatrixXd::Zero(nv + nm, nv + nm);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(nv + nm);
    sys.topLeftCorner(nv, nv) = detail::lagrange_stiffness(ref, g, unit);
    for (int a = 0; a < np; ++a)
      for (int b = 0; b < nq; ++b)
        for (int c = 0; c < 2; ++c) {
          sys(2 * a + c, nv + 2 * b + c) = g.det * cross(a, b);
          sys(nv + 2 * b + c, 2 * a + c) = g.det * cross(a, b);
        }
    auto dofs = d.stress->element_dofs(t);
    auto tens = d.stress->element_tensors(t);
    const Material& mat = d.materials[t];
    Eigen::MatrixXd grads;
    for (std::size_t q = 0; q < rule.size(); ++q) {
      const double w = rule.weights[q] * g.det;
      Tensor2 sh = Tensor2::Zero();
      for (std::size_t j = 0; j < dofs.size(); ++j) sh += sol.sigma_coef(dofs[j]) * ts.phi[q][j / 3] * tens[j];
      const Tensor2 as = mat.compliance(sh);
      physical_gradients(g, tp.dbary[q], grads);
      // e(phi_a e_c) : S = (S grad phi_a)_c for symmetric S
      for (int a = 0; a < np; ++a) {
        const Vec2 sg = as * grads.row(a).transpose();
        rhs[2 * a] += w * sg[0];
        rhs[2 * a + 1] += w * sg[1];
      }
    }
    const int uoff = uh.space.element_offset(t);
    // (u_h, psi_b e_c) = det * sum_a' M_q(a', b) u_{a'c}
    Eigen::MatrixXd mq = Eigen::MatrixXd::Zero(nq, nq);
    for (std::size_t q = 0; q < rule.size(); ++q) mq.noalias() += rule.weights[q] * tq.phi[q] * tq.phi[q].transpose();
    for (int b = 0; b < nq; ++b)
      for (int c = 0; c < 2; ++c) {
        double s = 0.0;
        for (int a = 0; a < nq; ++a) s += mq(a, b) * uh.coef[uoff + 2 * a + c];
        rhs[nv + 2 * b + c] = g.det * s;
      }
    const Eigen::VectorXd x = sys.partialPivLu().solve(rhs);
    if (!x.allFinite()) throw SolverError("singular post-processing system on element " + std::to_string(t));
    out.coef.segment(out.space.element_offset(t), nv) = x.head(nv);
  }
  return out;
}

// ---------------------------------------------------------------------------

/// Error norm identifiers in report column order.
inline const std::vector<std::string>& norm_names() {
  static const std::vector<std::string> names = {
      "u_plus_l2",   "u_plus_energy", "sigma_l2",  "sigma_hdiv", "u_minus_l2",
      "qu_minus_l2", "qu_minus_h1h",  "ustar_l2",  "ustar_h1h",  "stress_l2"};
  return names;
}

/// Named norm values; only the quantities applicable to the method are present.
struct NormSet {
  std::vector<std::pair<std::string, double>> values;

  bool has(const std::string& name) const {
    return std::any_of(values.begin(), values.end(), [&](const auto& p) { return p.first == name; });
  }
  double get(const std::string& name) const {
    for (const auto& [n, v] : values)
      if (n == name) return v;
    throw Error("norm '" + name + "' not available");
  }
  double max_value() const {
    double m = 0.0;
    for (const auto& [n, v] : values) m = std::max(m, v);
    return m;
  }
};

struct NormOptions {
  int extra_degree = 0;  // added to the default over-integration degree
};

/// Error norms against a closed-form solution. `ustar` (optional) is the
/// post-processed displacement. |.|_{1,h} includes h_F^{-1} ||[v]||^2 over all
/// faces of the minus elements, with [v] = v on faces not shared by two minus elements.
inline NormSet error_norms(const DiscreteSolution& sol, const ExactSolution& ex, const DGField* ustar = nullptr,
                           const NormOptions& opt = {}) {
  const Discretization& d = sol.discretization();
  const Mesh& m = d.mesh;
  const int deg = std::min(kMaxQuadratureDegree, 2 * d.max_degree() + 4 + opt.extra_degree);
  const QuadratureRule& rule = cached_triangle_rule(deg);
  const QuadratureRule& erule = cached_edge_rule(deg);

  enum Acc { up, upe, sg, sdiv, um, qu, qu1, us, us1, st, kCount };
  std::vector<std::array<double, kCount>> per(m.num_triangles());
  for (auto& a : per) a.fill(0.0);

  std::optional<DGField> qh;
  std::optional<DGField> uhm;
  if (d.u_minus) {
    qh = l2_project(m, *d.u_minus, ex.displacement, deg);
    uhm = sol.u_minus_field();
  }

  std::optional<BasisTable> ts, tu, tstar, tl;
  if (d.stress) {
    ts.emplace(d.stress->basis(), rule);
    tu.emplace(d.u_minus->basis(), rule);
  }
  if (ustar) tstar.emplace(ustar->space.basis(), rule);
  if (d.u_plus) tl.emplace(d.u_plus->basis(), rule);

  auto minus_element = [&](int t, std::array<double, kCount>& acc) {
    const ElementGeometry g(m, t);
    const HuZhangSpace& hz = *d.stress;
    auto dofs = hz.element_dofs(t);
    auto tens = hz.element_tensors(t);
    Eigen::MatrixXd grads, ugrads, sgrads;
    for (std::size_t q = 0; q < rule.size(); ++q) {
      const double w = rule.weights[q] * g.det;
      const Point x = g.map(rule.barycentric(q));
      physical_gradients(g, ts->dbary[q], sgrads);
      Tensor2 sh = Tensor2::Zero();
      Vec2 dh = Vec2::Zero();
      for (std::size_t j = 0; j < dofs.size(); ++j) {
        const double c = sol.sigma_coef(dofs[j]);
        sh += c * ts->phi[q][j / 3] * tens[j];
        dh += c * (tens[j] * sgrads.row(j / 3).transpose());
      }
      const Tensor2 es = ex.stress(x) - sh;
      const Vec2 ed = -ex.body_force(x) - dh;
      acc[sg] += w * ddot(es, es);
      acc[sdiv] += w * ed.squaredNorm();
      const Vec2 u = ex.displacement(x);
      const Vec2 uh = uhm->combine(t, tu->phi[q]);
      acc[um] += w * (u - uh).squaredNorm();
      physical_gradients(g, tu->dbary[q], ugrads);
      const Vec2 eq = qh->combine(t, tu->phi[q]) - uh;
      acc[qu] += w * eq.squaredNorm();
      const Tensor2 gq = qh->gradient(t, ugrads) - uhm->gradient(t, ugrads);
      acc[qu1] += w * ddot(gq, gq);
      if (ustar) {
        physical_gradients(g, tstar->dbary[q], grads);
        acc[us] += w * (u - ustar->combine(t, tstar->phi[q])).squaredNorm();
        const Tensor2 gs = ex.displacement_gradient(x) - ustar->gradient(t, grads);
        acc[us1] += w * ddot(gs, gs);
      }
    }
  };

  auto plus_element = [&](int t, std::array<double, kCount>& acc) {
    const ElementGeometry g(m, t);
    const LagrangeSpace& lag = *d.u_plus;
    auto nodes = lag.element_nodes(t);
    const Material& mat = d.materials[t];
    Eigen::MatrixXd grads;
    for (std::size_t q = 0; q < rule.size(); ++q) {
      const double w = rule.weights[q] * g.det;
      const Point x = g.map(rule.barycentric(q));
      Vec2 uh = Vec2::Zero();
      for (int a = 0; a < tl->phi[q].size(); ++a)
        uh += tl->phi[q][a] * Vec2(sol.u_plus_coef(2 * nodes[a]), sol.u_plus_coef(2 * nodes[a] + 1));
      physical_gradients(g, tl->dbary[q], grads);
      const Tensor2 e = sym_part(ex.displacement_gradient(x) - sol.plus_gradient(t, grads));
      acc[up] += w * (ex.displacement(x) - uh).squaredNorm();
      acc[upe] += w * ddot(e, e);
      const Tensor2 es = mat.stiffness(e);
      acc[st] += w * ddot(es, es);
    }
  };

  parallel_chunks(m.num_triangles(), default_thread_count(), [&](int, int begin, int end) {
    for (int t = begin; t < end; ++t) {
      if (d.partition.is_minus(t)) {
        minus_element(t, per[t]);
        per[t][st] = per[t][sg];
      } else {
        plus_element(t, per[t]);
      }
    }
  });

  // Face terms of the mesh-dependent norms.
  double face_qu = 0.0, face_us = 0.0;
  if (d.u_minus) {
    const SimplexLagrange& ub = d.u_minus->basis();
    Eigen::VectorXd phi(ub.size()), phs;
    if (ustar) phs.resize(ustar->space.basis().size());
    for (int e = 0; e < m.num_edges(); ++e) {
      const Edge& ed = m.edge(e);
      std::vector<int> sides;
      for (int t : ed.elements)
        if (t >= 0 && d.partition.is_minus(t)) sides.push_back(t);
      if (sides.empty()) continue;
      const double len = m.edge_length(e);
      const bool jump = sides.size() == 2;
      double sq = 0.0, ss = 0.0;
      for (std::size_t q = 0; q < erule.size(); ++q) {
        const double s = erule.points[q].x();
        const double w = erule.weights[q] * len;
        Vec2 vq = Vec2::Zero(), vs = Vec2::Zero();
        for (std::size_t i = 0; i < sides.size(); ++i) {
          const double sign = i == 0 ? 1.0 : -1.0;
          const Eigen::Vector3d lam = detail::edge_point_barycentric(m, sides[i], e, s);
          ub.values(lam, phi);
          vq += sign * (qh->combine(sides[i], phi) - uhm->combine(sides[i], phi));
          if (ustar) {
            ustar->space.basis().values(lam, phs);
            vs -= sign * ustar->combine(sides[i], phs);
          }
        }
        if (ustar && !jump) vs += ex.displacement(detail::edge_point(m, e, s));
        sq += w * vq.squaredNorm();
        ss += w * vs.squaredNorm();
      }
      face_qu += sq / len;
      face_us += ss / len;
    }
  }

  std::array<double, kCount> tot{};
  for (const auto& a : per)
    for (int i = 0; i < kCount; ++i) tot[i] += a[i];
  NormSet out;
  auto put = [&](const char* name, double sq) { out.values.emplace_back(name, std::sqrt(std::max(0.0, sq))); };
  if (d.u_plus) {
    put("u_plus_l2", tot[up]);
    put("u_plus_energy", tot[upe]);
  }
  if (d.stress) {
    put("sigma_l2", tot[sg]);
    put("sigma_hdiv", tot[sg] + tot[sdiv]);
    put("u_minus_l2", tot[um]);
    put("qu_minus_l2", tot[qu]);
    put("qu_minus_h1h", tot[qu1] + face_qu);
    if (ustar) {
      put("ustar_l2", tot[us]);
      put("ustar_h1h", tot[us1] + face_us);
    }
  }
  put("stress_l2", tot[st]);
  return out;
}

// ---------------------------------------------------------------------------
// Point evaluation.

/// Elements containing x (ascending); the first one is the deterministic owner.
inline std::vector<int> locate(const Mesh& m, const Point& x, double tol = 1e-10) {
  std::vector<int> out;
  for (int t = 0; t < m.num_triangles(); ++t) {
    const Eigen::Vector3d lam = ElementGeometry(m, t).barycentric(x);
    if (lam.minCoeff() >= -tol) out.push_back(t);
  }
  return out;
}

template <class T>
struct PointValue {
  int owner = -1;
  T value;
  std::vector<std::pair<int, T>> all;  // one entry per containing element
};

/// Evaluates field(t, lam) at x on every containing element.
template <class F>
auto eval_point(const Mesh& m, const Point& x, F&& field) {
  using T = std::decay_t<decltype(field(0, Eigen::Vector3d()))>;
  const auto elems = locate(m, x);
  if (elems.empty()) throw ConfigError("point outside the mesh");
  PointValue<T> pv;
  for (int t : elems) {
    Eigen::Vector3d lam = ElementGeometry(m, t).barycentric(x);
    lam = lam.cwiseMax(0.0);
    lam /= lam.sum();
    pv.all.emplace_back(t, field(t, lam));
  }
  pv.owner = pv.all.front().first;
  pv.value = pv.all.front().second;
  return pv;
}

inline double probe_value(const DiscreteSolution& sol, const Probe& p) {
  const Mesh& m = sol.discretization().mesh;
  switch (p.quantity) {
    case ProbeQuantity::ux:
    case ProbeQuantity::uy: {
      const auto pv = eval_point(m, p.x, [&](int t, const Eigen::Vector3d& l) { return sol.displacement(t, l); });
      return p.quantity == ProbeQuantity::ux ? pv.value.x() : pv.value.y();
    }
    default: {
      const auto pv = eval_point(m, p.x, [&](int t, const Eigen::Vector3d& l) { return sol.stress(t, l); });
      if (p.quantity == ProbeQuantity::sxx) return pv.value(0, 0);
      if (p.quantity == ProbeQuantity::sxy) return pv.value(0, 1);
      return pv.value(1, 1);
    }
  }
}

// ---------------------------------------------------------------------------
// Rates.

/// Rate between consecutive levels: log(e0/e1) / log(h0/h1). Zero or
/// non-finite errors give 0.
inline double pair_rate(double h0, double e0, double h1, double e1) {
  if (!(e0 > 0.0) || !(e1 > 0.0) || !(h0 > h1) || !std::isfinite(e0) || !std::isfinite(e1)) return 0.0;
  return std::log(e0 / e1) / std::log(h0 / h1);
}

/// Consecutive rates; entry 0 is 0 (no previous level).
inline std::vector<double> convergence_rates(const std::vector<double>& h, const std::vector<double>& e) {
  std::vector<double> r(e.size(), 0.0);
  for (std::size_t i = 1; i < e.size(); ++i) r[i] = pair_rate(h[i - 1], e[i - 1], h[i], e[i]);
  return r;
}

/// Least-squares slope of log e against log h over the last `count` levels.
inline double least_squares_rate(const std::vector<double>& h, const std::vector<double>& e, int count = 3) {
  const int n = static_cast<int>(e.size());
  const int first = std::max(0, n - count);
  if (n - first < 2) return 0.0;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int k = 0;
  for (int i = first; i < n; ++i) {
    if (!(e[i] > 0.0) || !(h[i] > 0.0)) return 0.0;
    const double x = std::log(h[i]), y = std::log(e[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++k;
  }
  const double den = k * sxx - sx * sx;
  if (den <= 0.0) return 0.0;
  return (k * sxy - sx * sy) / den;
}

}  // namespace coupled_elast
