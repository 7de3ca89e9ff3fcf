#pragma once

#include "coupled_elast/fe_spaces.hpp"
#include "coupled_elast/method.hpp"
#include "coupled_elast/parallel.hpp"
#include "coupled_elast/problems.hpp"
#include "coupled_elast/quadrature.hpp"

#include <Eigen/Sparse>

#include <map>
#include <optional>

namespace coupled_elast {

/// Global unknown ordering: (sigma-, u-, u+).
struct BlockLayout {
  int n_sigma = 0;
  int n_u_minus = 0;
  int n_u_plus = 0;
  int sigma_offset() const { return 0; }
  int u_minus_offset() const { return n_sigma; }
  int u_plus_offset() const { return n_sigma + n_u_minus; }
  int size() const { return n_sigma + n_u_minus + n_u_plus; }
};

/// Mesh, partition, per-element materials, boundary data and the discrete
/// spaces of one run.
struct Discretization {
  Mesh mesh;
  SubdomainPartition partition;
  MethodConfig method;
  std::vector<Material> materials;                          // per triangle
  std::vector<std::optional<BoundaryCondition>> boundary;   // per edge; set on boundary edges
  std::optional<HuZhangSpace> stress;
  std::optional<DGVectorSpace> u_minus;
  std::optional<LagrangeSpace> u_plus;
  BlockLayout layout;

  /// Highest polynomial degree among the spaces (including the P_{k+1} post-processed displacement).
  int max_degree() const {
    int p = 1;
    if (stress) p = std::max(p, stress->degree() + 1);
    if (u_plus) p = std::max(p, u_plus->degree());
    return p;
  }
  int num_free_dofs() const {
    int n = 0;
    if (stress) n += stress->num_free_dofs();
    if (u_minus) n += u_minus->num_dofs();
    if (u_plus) n += u_plus->num_free_dofs();
    return n;
  }
};

/// Builds the spaces for `method`. Pure methods override the partition
/// (lagrange: all plus, hz: all minus); a coupled partition with one empty
/// side degenerates to the corresponding pure method.
inline Discretization discretize(Mesh mesh, SubdomainPartition partition, const ProblemSpec& problem,
                                 MethodConfig method) {
  Discretization d;
  d.mesh = std::move(mesh);
  if (method.kind == MethodConfig::Kind::lagrange) partition = all_plus(d.mesh);
  if (method.kind == MethodConfig::Kind::huzhang) partition = all_minus(d.mesh);
  d.partition = std::move(partition);
  d.method = method;
  const Mesh& m = d.mesh;
  d.materials.reserve(m.num_triangles());
  for (int t = 0; t < m.num_triangles(); ++t) d.materials.push_back(problem.material(m.barycenter(t)));
  d.boundary.resize(m.num_edges());
  std::vector<int> dirichlet, traction;
  for (int e = 0; e < m.num_edges(); ++e) {
    if (!m.edge(e).boundary()) continue;
    const Point mid = 0.5 * (m.vertex(m.edge(e).v[0]) + m.vertex(m.edge(e).v[1]));
    d.boundary[e] = problem.boundary(mid, m.edge_normal(e));
    (d.boundary[e]->kind == BoundaryKind::dirichlet ? dirichlet : traction).push_back(e);
  }
  if (!d.partition.minus_elements().empty()) {
    d.stress = build_huzhang_space(m, d.partition, method.k, traction);
    d.u_minus = build_dg_space(m, d.partition, method.k - 1);
    d.layout.n_sigma = d.stress->num_dofs();
    d.layout.n_u_minus = d.u_minus->num_dofs();
  }
  if (!d.partition.plus_elements().empty()) {
    if (method.kind == MethodConfig::Kind::huzhang) throw ConfigError("pure Hu-Zhang method with plus elements");
    d.u_plus = build_lagrange_space(m, d.partition, method.m, dirichlet);
    d.layout.n_u_plus = d.u_plus->num_dofs();
  }
  return d;
}

inline Discretization discretize(const ProblemSpec& problem, MethodConfig method, int level,
                                 const std::optional<RegionSpec>& region = std::nullopt) {
  Mesh mesh = refine_times(problem.initial_mesh(), level);
  SubdomainPartition part;
  if (method.kind == MethodConfig::Kind::coupled) part = make_partition(mesh, region ? *region : problem.region);
  return discretize(std::move(mesh), std::move(part), problem, method);
}

// ---------------------------------------------------------------------------

struct CoupledSystem {
  Eigen::SparseMatrix<double> matrix;
  Eigen::VectorXd rhs;
  BlockLayout layout;
  std::vector<std::pair<int, double>> constraints;  // eliminated essential DOFs (global index, value)
  bool constrained = false;
};

struct AssemblyOptions {
  int threads = default_thread_count();
  bool sequential = false;
  int workers() const { return sequential ? 1 : threads; }
};

namespace detail {

/// Reference-element integrals of products of nodal basis functions.
struct ReferenceIntegrals {
  Eigen::MatrixXd mass;                 // phi_a phi_b (P_k x P_k)
  std::array<Eigen::MatrixXd, 3> div;   // dphi_a/dlambda_v chi_b (P_k x P_{k-1})
  std::array<std::array<Eigen::MatrixXd, 3>, 3> grad;  // dphi_a/dlambda_v dphi_b/dlambda_w

  ReferenceIntegrals(const SimplexLagrange& p, const SimplexLagrange* q) {
    const int d = std::max(2 * p.degree(), 1);
    const QuadratureRule& rule = cached_triangle_rule(d);
    const int n = p.size();
    Eigen::VectorXd phi(n), chi;
    Eigen::MatrixXd db(n, 3);
    mass = Eigen::MatrixXd::Zero(n, n);
    if (q) {
      chi.resize(q->size());
      for (auto& dv : div) dv = Eigen::MatrixXd::Zero(n, q->size());
    }
    for (auto& row : grad)
      for (auto& g : row) g = Eigen::MatrixXd::Zero(n, n);
    for (std::size_t k = 0; k < rule.size(); ++k) {
      const Eigen::Vector3d lam = rule.barycentric(k);
      const double w = rule.weights[k];
      p.values(lam, phi);
      p.barycentric_derivatives(lam, db);
      mass.noalias() += w * phi * phi.transpose();
      if (q) {
        q->values(lam, chi);
        for (int v = 0; v < 3; ++v) div[v].noalias() += w * db.col(v) * chi.transpose();
      }
      for (int v = 0; v < 3; ++v)
        for (int u = 0; u < 3; ++u) grad[v][u].noalias() += w * db.col(v) * db.col(u).transpose();
    }
  }
};

using Triplets = std::vector<Eigen::Triplet<double>>;

inline void add_block(Triplets& out, std::span<const int> rows, int row_off, std::span<const int> cols, int col_off,
                      const Eigen::MatrixXd& local, bool with_transpose) {
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < cols.size(); ++j) {
      const double v = local(i, j);
      if (v == 0.0) continue;
      out.emplace_back(row_off + rows[i], col_off + cols[j], v);
      if (with_transpose) out.emplace_back(col_off + cols[j], row_off + rows[i], v);
    }
}

/// Barycentric coordinates in triangle t of the point at parameter s along edge e (from edge.v[0]).
inline Eigen::Vector3d edge_point_barycentric(const Mesh& m, int t, int e, double s) {
  Eigen::Vector3d lam = Eigen::Vector3d::Zero();
  lam[m.local_vertex(t, m.edge(e).v[0])] = 1.0 - s;
  lam[m.local_vertex(t, m.edge(e).v[1])] = s;
  return lam;
}

inline Point edge_point(const Mesh& m, int e, double s) {
  return (1.0 - s) * m.vertex(m.edge(e).v[0]) + s * m.vertex(m.edge(e).v[1]);
}

/// Local (A S_i) : S_j.
inline Eigen::MatrixXd compliance_pairs(const Material& mat, std::span<const Tensor2> tensors) {
  const int n = static_cast<int>(tensors.size());
  Eigen::MatrixXd c(n, n);
  std::vector<Tensor2> as(n);
  for (int i = 0; i < n; ++i) as[i] = mat.compliance(tensors[i]);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) c(i, j) = ddot(as[i], tensors[j]);
  return c;
}

/// Element stiffness (A^{-1} eps(v_i), eps(v_j)) for the vector Lagrange basis, DOF order 2a + c.
inline Eigen::MatrixXd lagrange_stiffness(const ReferenceIntegrals& ref, const ElementGeometry& g, const Material& mat) {
  const int n = static_cast<int>(ref.mass.rows());
  std::array<std::array<Eigen::MatrixXd, 2>, 2> ig;  // ig[l][r](a,b) = int d_l phi_a d_r phi_b
  for (int l = 0; l < 2; ++l)
    for (int r = 0; r < 2; ++r) {
      ig[l][r] = Eigen::MatrixXd::Zero(n, n);
      for (int v = 0; v < 3; ++v)
        for (int w = 0; w < 3; ++w) {
          const double c = g.grad_lambda(v, l) * g.grad_lambda(w, r);
          if (c != 0.0) ig[l][r].noalias() += c * ref.grad[v][w];
        }
      ig[l][r] *= g.det;
    }
  Eigen::MatrixXd k(2 * n, 2 * n);
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) {
      const double lap = ig[0][0](a, b) + ig[1][1](a, b);
      for (int c = 0; c < 2; ++c)
        for (int d = 0; d < 2; ++d)
          k(2 * a + c, 2 * b + d) = mat.mu * ((c == d ? lap : 0.0) + ig[d][c](a, b)) + mat.lambda * ig[c][d](a, b);
    }
  return k;
}

/// Element (div tau_i, psi_j) for the Hu-Zhang basis against the vector DG basis (DOF 2b + c).
inline Eigen::MatrixXd divergence_block(const ReferenceIntegrals& ref, const ElementGeometry& g,
                                        std::span<const Tensor2> tensors, int dg_size) {
  const int n = static_cast<int>(ref.mass.rows());
  std::array<Eigen::MatrixXd, 2> dphi;  // dphi[l](a,b) = int d_l phi_a chi_b
  for (int l = 0; l < 2; ++l) {
    dphi[l] = Eigen::MatrixXd::Zero(n, dg_size);
    for (int v = 0; v < 3; ++v) dphi[l].noalias() += g.grad_lambda(v, l) * ref.div[v];
    dphi[l] *= g.det;
  }
  Eigen::MatrixXd b(3 * n, 2 * dg_size);
  for (int i = 0; i < 3 * n; ++i) {
    const int a = i / 3;
    const Tensor2& s = tensors[i];
    for (int q = 0; q < dg_size; ++q)
      for (int c = 0; c < 2; ++c) b(i, 2 * q + c) = s(c, 0) * dphi[0](a, q) + s(c, 1) * dphi[1](a, q);
  }
  return b;
}

}  // namespace detail

/// Assembles the symmetric coupled matrix
///   [ (A s, t)          (div t, u-)   -<t n-, u+>_Gamma   ]
///   [ (div s, v-)        0             0                  ]
///   [ -<s n-, v+>_Gamma  0            -(A^{-1} e(u+), e(v+)) ]
/// The right-hand side is left zero (see assemble_load).
inline CoupledSystem assemble_coupled(const Discretization& d, const AssemblyOptions& opt = {}) {
  const Mesh& m = d.mesh;
  CoupledSystem sys;
  sys.layout = d.layout;
  const int n = d.layout.size();
  const int workers = opt.workers();
  std::vector<detail::Triplets> parts;

  if (d.stress) {
    const HuZhangSpace& hz = *d.stress;
    const DGVectorSpace& dg = *d.u_minus;
    const detail::ReferenceIntegrals ref(hz.basis(), &dg.basis());
    const auto& elems = hz.elements();
    std::vector<detail::Triplets> local(std::max(1, workers));
    parallel_chunks(static_cast<int>(elems.size()), workers, [&](int c, int begin, int end) {
      auto& out = local[c];
      for (int i = begin; i < end; ++i) {
        const int t = elems[i];
        const ElementGeometry g(m, t);
        auto dofs = hz.element_dofs(t);
        auto tens = hz.element_tensors(t);
        const Eigen::MatrixXd pairs = detail::compliance_pairs(d.materials[t], tens);
        Eigen::MatrixXd a(dofs.size(), dofs.size());
        for (std::size_t r = 0; r < dofs.size(); ++r)
          for (std::size_t s = 0; s < dofs.size(); ++s) a(r, s) = g.det * ref.mass(r / 3, s / 3) * pairs(r, s);
        detail::add_block(out, dofs, d.layout.sigma_offset(), dofs, d.layout.sigma_offset(), a, false);
        const Eigen::MatrixXd b = detail::divergence_block(ref, g, tens, dg.basis().size());
        std::vector<int> udofs(dg.local_size());
        for (int q = 0; q < dg.local_size(); ++q) udofs[q] = dg.element_offset(t) + q;
        detail::add_block(out, dofs, d.layout.sigma_offset(), udofs, d.layout.u_minus_offset(), b, true);
      }
    });
    for (auto& l : local) parts.push_back(std::move(l));
  }

  if (d.u_plus) {
    const LagrangeSpace& lag = *d.u_plus;
    const detail::ReferenceIntegrals ref(lag.basis(), nullptr);
    const auto& elems = lag.elements();
    std::vector<detail::Triplets> local(std::max(1, workers));
    parallel_chunks(static_cast<int>(elems.size()), workers, [&](int c, int begin, int end) {
      auto& out = local[c];
      for (int i = begin; i < end; ++i) {
        const int t = elems[i];
        const ElementGeometry g(m, t);
        const Eigen::MatrixXd k = -detail::lagrange_stiffness(ref, g, d.materials[t]);
        const auto dofs = lag.element_dofs(t);
        detail::add_block(out, dofs, d.layout.u_plus_offset(), dofs, d.layout.u_plus_offset(), k, false);
      }
    });
    for (auto& l : local) parts.push_back(std::move(l));
  }

  if (d.stress && d.u_plus) {
    const HuZhangSpace& hz = *d.stress;
    const LagrangeSpace& lag = *d.u_plus;
    const int kk = hz.degree(), mm = lag.degree();
    const QuadratureRule& rule = cached_edge_rule(std::max(2 * kk + 2, kk + mm));
    detail::Triplets out;
    Eigen::VectorXd phi(hz.basis().size()), psi(lag.basis().size());
    for (const InterfaceEdge& ie : d.partition.interface_edges()) {
      const auto sd = hz.element_dofs(ie.minus_element);
      const auto st = hz.element_tensors(ie.minus_element);
      const auto ud = lag.element_dofs(ie.plus_element);
      Eigen::MatrixXd c = Eigen::MatrixXd::Zero(sd.size(), ud.size());
      const double len = m.edge_length(ie.edge);
      for (std::size_t q = 0; q < rule.size(); ++q) {
        const double s = rule.points[q].x();
        hz.basis().values(detail::edge_point_barycentric(m, ie.minus_element, ie.edge, s), phi);
        lag.basis().values(detail::edge_point_barycentric(m, ie.plus_element, ie.edge, s), psi);
        const double w = rule.weights[q] * len;
        for (std::size_t i = 0; i < sd.size(); ++i) {
          const Vec2 tn = st[i] * ie.normal_minus * (phi[i / 3] * w);
          for (int b = 0; b < psi.size(); ++b)
            for (int comp = 0; comp < 2; ++comp) c(i, 2 * b + comp) -= tn[comp] * psi[b];
        }
      }
      detail::add_block(out, sd, d.layout.sigma_offset(), ud, d.layout.u_plus_offset(), c, true);
    }
    parts.push_back(std::move(out));
  }

  std::size_t total = 0;
  for (const auto& p : parts) total += p.size();
  detail::Triplets all;
  all.reserve(total);
  for (auto& p : parts) {
    all.insert(all.end(), p.begin(), p.end());
    p.clear();
    p.shrink_to_fit();
  }
  sys.matrix.resize(n, n);
  sys.matrix.setFromTriplets(all.begin(), all.end());
  sys.matrix.makeCompressed();
  sys.rhs = Eigen::VectorXd::Zero(n);
  return sys;
}

/// Adds the load terms: -(f, v-), -(f, v+), the natural Dirichlet term
/// <t n, g_D> on the minus exterior boundary and -(g_N, v+) on plus traction edges.
inline void assemble_load(const Discretization& d, const std::function<Vec2(const Point&)>& body_force,
                          CoupledSystem& sys) {
  const Mesh& m = d.mesh;
  const int p = d.max_degree();
  const QuadratureRule& vol = cached_triangle_rule(std::min(kMaxQuadratureDegree, 2 * p + 4));
  const QuadratureRule& edge = cached_edge_rule(std::min(kMaxQuadratureDegree, 2 * p + 4));
  auto& rhs = sys.rhs;

  auto body = [&](const SimplexLagrange& basis, int t, auto&& dof_of) {
    const ElementGeometry g(m, t);
    Eigen::VectorXd phi(basis.size());
    for (std::size_t q = 0; q < vol.size(); ++q) {
      const Eigen::Vector3d lam = vol.barycentric(q);
      const Vec2 f = body_force(g.map(lam)) * (vol.weights[q] * g.det);
      basis.values(lam, phi);
      for (int a = 0; a < basis.size(); ++a)
        for (int c = 0; c < 2; ++c) rhs[dof_of(a, c)] -= f[c] * phi[a];
    }
  };
  if (d.u_minus) {
    const DGVectorSpace& dg = *d.u_minus;
    for (int t : dg.elements()) {
      const int off = d.layout.u_minus_offset() + dg.element_offset(t);
      body(dg.basis(), t, [off](int a, int c) { return off + 2 * a + c; });
    }
  }
  if (d.u_plus) {
    const LagrangeSpace& lag = *d.u_plus;
    for (int t : lag.elements()) {
      auto nodes = lag.element_nodes(t);
      const int off = d.layout.u_plus_offset();
      body(lag.basis(), t, [&, off](int a, int c) { return off + 2 * nodes[a] + c; });
    }
    Eigen::VectorXd psi(lag.basis().size());
    for (int e : d.partition.gamma_plus()) {
      const auto& bc = *d.boundary[e];
      if (bc.kind != BoundaryKind::traction) continue;
      const int t = m.edge(e).elements[0];
      auto nodes = lag.element_nodes(t);
      const double len = m.edge_length(e);
      for (std::size_t q = 0; q < edge.size(); ++q) {
        const double s = edge.points[q].x();
        const Vec2 gn = bc.value(detail::edge_point(m, e, s)) * (edge.weights[q] * len);
        lag.basis().values(detail::edge_point_barycentric(m, t, e, s), psi);
        for (int a = 0; a < psi.size(); ++a)
          for (int c = 0; c < 2; ++c) rhs[d.layout.u_plus_offset() + 2 * nodes[a] + c] -= gn[c] * psi[a];
      }
    }
  }
  if (d.stress) {
    const HuZhangSpace& hz = *d.stress;
    Eigen::VectorXd phi(hz.basis().size());
    for (int e : d.partition.gamma_minus()) {
      const auto& bc = *d.boundary[e];
      if (bc.kind != BoundaryKind::dirichlet) continue;
      const int t = m.edge(e).elements[0];
      const auto sd = hz.element_dofs(t);
      const auto st = hz.element_tensors(t);
      const Vec2 n = m.edge_normal(e);
      const double len = m.edge_length(e);
      for (std::size_t q = 0; q < edge.size(); ++q) {
        const double s = edge.points[q].x();
        const Vec2 gd = bc.value(detail::edge_point(m, e, s)) * (edge.weights[q] * len);
        hz.basis().values(detail::edge_point_barycentric(m, t, e, s), phi);
        for (std::size_t i = 0; i < sd.size(); ++i)
          rhs[d.layout.sigma_offset() + sd[i]] += phi[i / 3] * (st[i] * n).dot(gd);
      }
    }
  }
}

/// Essential data: Lagrange node interpolation of g_D on plus Dirichlet edges
/// and Hu-Zhang normal-trace DOFs on minus traction edges. Global indices.
inline std::vector<std::pair<int, double>> essential_constraints(const Discretization& d) {
  std::vector<std::pair<int, double>> out;
  const Mesh& m = d.mesh;
  if (d.u_plus) {
    const LagrangeSpace& lag = *d.u_plus;
    for (auto [node, e] : lag.constrained_node_edges()) {
      const Vec2 g = d.boundary[e]->value(lag.node_position(node));
      for (int c = 0; c < 2; ++c) out.emplace_back(d.layout.u_plus_offset() + 2 * node + c, g[c]);
    }
  }
  if (d.stress) {
    auto vals = traction_constraint_values(m, *d.stress, [&](int e, const Point& x) { return d.boundary[e]->value(x); });
    for (auto [dof, v] : vals) out.emplace_back(d.layout.sigma_offset() + dof, v);
  }
  return out;
}

/// Symmetric elimination: constrained columns move to the right-hand side and
/// constrained rows/columns become identity rows holding the prescribed value.
inline void apply_essential(CoupledSystem& sys, const std::vector<std::pair<int, double>>& constraints) {
  const int n = static_cast<int>(sys.rhs.size());
  std::vector<char> fixed(n, 0);
  std::vector<double> value(n, 0.0);
  for (auto [i, v] : constraints) {
    if (i < 0 || i >= n) throw ConfigError("constraint index out of range");
    if (!std::isfinite(v)) throw ConfigError("non-finite constraint value at DOF " + std::to_string(i));
    if (fixed[i]) {
      if (std::abs(value[i] - v) > 1e-10)
        throw ConfigError("conflicting essential constraints at DOF " + std::to_string(i) + ": " +
                          std::to_string(value[i]) + " vs " + std::to_string(v));
      continue;
    }
    fixed[i] = 1;
    value[i] = v;
  }
  detail::Triplets kept;
  kept.reserve(sys.matrix.nonZeros());
  for (int col = 0; col < sys.matrix.outerSize(); ++col)
    for (Eigen::SparseMatrix<double>::InnerIterator it(sys.matrix, col); it; ++it) {
      const int row = static_cast<int>(it.row());
      if (fixed[col] && !fixed[row]) sys.rhs[row] -= it.value() * value[col];
      if (!fixed[col] && !fixed[row]) kept.emplace_back(row, col, it.value());
    }
  for (int i = 0; i < n; ++i)
    if (fixed[i]) {
      kept.emplace_back(i, i, 1.0);
      sys.rhs[i] = value[i];
    }
  sys.matrix.setFromTriplets(kept.begin(), kept.end());
  sys.matrix.makeCompressed();
  for (int i = 0; i < n; ++i)
    if (fixed[i]) sys.constraints.emplace_back(i, value[i]);
  sys.constrained = true;
}

/// assemble_coupled + assemble_load + essential elimination.
inline CoupledSystem build_system(const Discretization& d, const std::function<Vec2(const Point&)>& body_force,
                                  const AssemblyOptions& opt = {}) {
  CoupledSystem sys = assemble_coupled(d, opt);
  assemble_load(d, body_force, sys);
  apply_essential(sys, essential_constraints(d));
  return sys;
}

/// max |M - M^T| / max |M|.
inline double symmetry_defect(const Eigen::SparseMatrix<double>& a) {
  const Eigen::SparseMatrix<double> at = a.transpose();
  const Eigen::SparseMatrix<double> diff = a - at;
  double dmax = 0.0, amax = 0.0;
  for (int k = 0; k < diff.outerSize(); ++k)
    for (Eigen::SparseMatrix<double>::InnerIterator it(diff, k); it; ++it) dmax = std::max(dmax, std::abs(it.value()));
  for (int k = 0; k < a.outerSize(); ++k)
    for (Eigen::SparseMatrix<double>::InnerIterator it(a, k); it; ++it) amax = std::max(amax, std::abs(it.value()));
  return amax > 0.0 ? dmax / amax : 0.0;
}

}  // namespace coupled_elast
