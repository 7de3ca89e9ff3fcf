#pragma once

#include "coupled_elast/partition.hpp"
#include "coupled_elast/simplex_basis.hpp"

#include <functional>
#include <optional>
#include <set>
#include <span>

namespace coupled_elast {

namespace detail {

/// Global position (1..p-1, measured from edge.v[0]) of node s on local edge le of triangle t.
inline int global_edge_position(const Mesh& m, int t, int le, int s, int p) {
  const int e = m.triangle_edges(t)[le];
  const int first = m.triangle(t)[local_edge_vertices(le)[0]];
  return first == m.edge(e).v[0] ? s : p - s;
}

inline std::vector<int> element_slots(const Mesh& m, const std::vector<int>& elements) {
  std::vector<int> slot(m.num_triangles(), -1);
  for (std::size_t i = 0; i < elements.size(); ++i) slot[elements[i]] = static_cast<int>(i);
  return slot;
}

inline void require_member(const std::vector<int>& slot, int t, const char* what) {
  if (t < 0 || t >= static_cast<int>(slot.size()) || slot[t] < 0)
    throw ConfigError(std::string(what) + ": element " + std::to_string(t) + " does not belong to the space");
}

}  // namespace detail

// ---------------------------------------------------------------------------

/// Continuous vector P_m Lagrange space on the plus elements. DOF of scalar
/// node i, component c is 2 i + c.
class LagrangeSpace {
 public:
  int degree() const { return basis_.degree(); }
  const SimplexLagrange& basis() const { return basis_; }
  const std::vector<int>& elements() const { return elements_; }
  bool contains(int t) const { return t >= 0 && t < static_cast<int>(slot_.size()) && slot_[t] >= 0; }
  int num_nodes() const { return static_cast<int>(node_position_.size()); }
  int num_dofs() const { return 2 * num_nodes(); }
  int num_free_dofs() const { return num_dofs() - 2 * static_cast<int>(constrained_nodes_.size()); }
  const Point& node_position(int node) const { return node_position_[node]; }

  std::span<const int> element_nodes(int t) const {
    detail::require_member(slot_, t, "LagrangeSpace");
    return {nodes_.data() + std::size_t(slot_[t]) * basis_.size(), std::size_t(basis_.size())};
  }
  std::vector<int> element_dofs(int t) const {
    auto nodes = element_nodes(t);
    std::vector<int> d(2 * nodes.size());
    for (std::size_t i = 0; i < nodes.size(); ++i) d[2 * i] = 2 * nodes[i], d[2 * i + 1] = 2 * nodes[i] + 1;
    return d;
  }
  /// Nodes on Dirichlet edges (essential), ascending.
  const std::vector<int>& constrained_nodes() const { return constrained_nodes_; }
  /// (node, edge) pairs for each constrained node, used to evaluate boundary data.
  const std::vector<std::pair<int, int>>& constrained_node_edges() const { return constrained_node_edges_; }

  /// Scalar shape values and physical gradients at barycentric point lam.
  void evaluate(const Mesh& m, int t, const Eigen::Vector3d& lam, Eigen::VectorXd& values,
                Eigen::MatrixXd& grads) const {
    detail::require_member(slot_, t, "LagrangeSpace");
    const ElementGeometry g(m, t);
    values.resize(basis_.size());
    Eigen::MatrixXd db(basis_.size(), 3);
    basis_.values(lam, values);
    basis_.barycentric_derivatives(lam, db);
    physical_gradients(g, db, grads);
  }

 private:
  friend LagrangeSpace build_lagrange_space(const Mesh&, const SubdomainPartition&, int, std::span<const int>);
  explicit LagrangeSpace(int m) : basis_(m) {}

  SimplexLagrange basis_;
  std::vector<int> elements_, slot_, nodes_;
  std::vector<Point> node_position_;
  std::vector<int> constrained_nodes_;
  std::vector<std::pair<int, int>> constrained_node_edges_;
};

/// Builds the plus-side Lagrange space. `dirichlet_edges` are exterior boundary
/// edges carrying essential displacement data; edges of minus elements are ignored.
inline LagrangeSpace build_lagrange_space(const Mesh& m, const SubdomainPartition& part, int degree,
                                          std::span<const int> dirichlet_edges) {
  if (degree < 1) throw ConfigError("Lagrange degree must be >= 1");
  if (part.plus_elements().empty()) throw ConfigError("Lagrange space requested on an empty plus subdomain");
  LagrangeSpace s(degree);
  s.elements_ = part.plus_elements();
  s.slot_ = detail::element_slots(m, s.elements_);
  const SimplexLagrange& b = s.basis_;
  const int nloc = b.size();

  std::vector<int> vnode(m.num_vertices(), -1), enode(m.num_edges(), -1);
  for (int t : s.elements_)
    for (int v : m.triangle(t)) vnode[v] = 0;
  for (int v = 0; v < m.num_vertices(); ++v)
    if (vnode[v] == 0) {
      vnode[v] = static_cast<int>(s.node_position_.size());
      s.node_position_.push_back(m.vertex(v));
    }
  if (degree > 1) {
    for (int t : s.elements_)
      for (int e : m.triangle_edges(t)) enode[e] = 0;
    for (int e = 0; e < m.num_edges(); ++e)
      if (enode[e] == 0) {
        enode[e] = static_cast<int>(s.node_position_.size());
        const Point& a = m.vertex(m.edge(e).v[0]);
        const Point& c = m.vertex(m.edge(e).v[1]);
        for (int q = 1; q < degree; ++q) s.node_position_.push_back(a + (c - a) * (double(q) / degree));
      }
  }
  s.nodes_.resize(s.elements_.size() * nloc);
  for (std::size_t k = 0; k < s.elements_.size(); ++k) {
    const int t = s.elements_[k];
    int* ln = s.nodes_.data() + k * nloc;
    for (int v = 0; v < 3; ++v) ln[b.vertex_node(v)] = vnode[m.triangle(t)[v]];
    for (int le = 0; le < 3; ++le)
      for (int q = 1; q < degree; ++q)
        ln[b.edge_node(le, q)] = enode[m.triangle_edges(t)[le]] + detail::global_edge_position(m, t, le, q, degree) - 1;
    const ElementGeometry g(m, t);
    for (int i = b.first_interior_node(); i < nloc; ++i) {
      ln[i] = static_cast<int>(s.node_position_.size());
      s.node_position_.push_back(g.map(b.node(i)));
    }
  }

  std::map<int, int> constrained;  // node -> an edge carrying its data
  for (int e : dirichlet_edges) {
    const Edge& edge = m.edge(e);
    if (!edge.boundary()) throw ConfigError("Dirichlet edge " + std::to_string(e) + " is not a boundary edge");
    if (!s.contains(edge.elements[0])) continue;
    constrained.emplace(vnode[edge.v[0]], e);
    constrained.emplace(vnode[edge.v[1]], e);
    for (int q = 1; q < degree; ++q) constrained.emplace(enode[e] + q - 1, e);
  }
  for (auto [node, e] : constrained) {
    s.constrained_nodes_.push_back(node);
    s.constrained_node_edges_.emplace_back(node, e);
  }
  // Nodes shared by several Dirichlet edges also carry the other edges, so
  // conflicting data can be detected downstream.
  for (int e : dirichlet_edges) {
    const Edge& edge = m.edge(e);
    if (!s.contains(edge.elements[0])) continue;
    for (int v : edge.v)
      if (constrained.at(vnode[v]) != e) s.constrained_node_edges_.emplace_back(vnode[v], e);
  }
  return s;
}

// ---------------------------------------------------------------------------

/// Element-wise discontinuous vector P_p space on the minus elements.
class DGVectorSpace {
 public:
  int degree() const { return basis_.degree(); }
  const SimplexLagrange& basis() const { return basis_; }
  const std::vector<int>& elements() const { return elements_; }
  bool contains(int t) const { return t >= 0 && t < static_cast<int>(slot_.size()) && slot_[t] >= 0; }
  int local_size() const { return 2 * basis_.size(); }
  int num_dofs() const { return static_cast<int>(elements_.size()) * local_size(); }
  /// First DOF of element t; local DOF 2 i + c follows.
  int element_offset(int t) const {
    detail::require_member(slot_, t, "DGVectorSpace");
    return slot_[t] * local_size();
  }
  void evaluate(const Eigen::Vector3d& lam, Eigen::VectorXd& values) const {
    values.resize(basis_.size());
    basis_.values(lam, values);
  }

 private:
  friend DGVectorSpace build_dg_space(const Mesh&, const SubdomainPartition&, int);
  explicit DGVectorSpace(int p) : basis_(p) {}
  SimplexLagrange basis_;
  std::vector<int> elements_, slot_;
};

inline DGVectorSpace build_dg_space(const Mesh& m, const SubdomainPartition& part, int degree) {
  if (degree < 0) throw ConfigError("DG degree must be >= 0");
  DGVectorSpace s(degree);
  s.elements_ = part.minus_elements();
  s.slot_ = detail::element_slots(m, s.elements_);
  return s;
}

// ---------------------------------------------------------------------------

/// Essential traction data attached to Hu-Zhang DOFs on traction edges.
struct TractionConstraint {
  enum class Kind {
    edge_node,      // dofs[0..1] = (n n^T, sym(n t)) coefficients at an edge node
    vertex_frame,   // single boundary direction: dofs[0..1] in the rotated (n, t) frame
    vertex_full     // two or more boundary directions: all 3 dofs by least squares
  };
  Kind kind = Kind::edge_node;
  Point x;
  std::vector<int> edges;  // traction edges meeting at x
  std::array<int, 3> dofs{-1, -1, -1};
  Vec2 normal, tangent;    // frame for edge_node / vertex_frame
};

/// Hu-Zhang P_k symmetric stress space on the minus elements, built from the
/// scalar P_k nodal basis times constant symmetric tensors:
///  - vertex nodes: 3 DOFs shared by all incident elements,
///  - edge nodes: n n^T and (n t^T + t n^T) shared across the edge (edge frame
///    n_F, t_F), t t^T owned by each incident element,
///  - interior nodes: 3 element DOFs.
/// Local function j is scalar node j / 3 times tensor j % 3.
class HuZhangSpace {
 public:
  int degree() const { return basis_.degree(); }
  const SimplexLagrange& basis() const { return basis_; }
  const std::vector<int>& elements() const { return elements_; }
  bool contains(int t) const { return t >= 0 && t < static_cast<int>(slot_.size()) && slot_[t] >= 0; }
  int local_size() const { return 3 * basis_.size(); }
  int num_dofs() const { return num_dofs_; }
  int num_free_dofs() const {
    int n = 0;
    for (const auto& c : constraints_)
      for (int d : c.dofs) n += d >= 0;
    return num_dofs_ - n;
  }

  std::span<const int> element_dofs(int t) const {
    detail::require_member(slot_, t, "HuZhangSpace");
    return {dofs_.data() + std::size_t(slot_[t]) * local_size(), std::size_t(local_size())};
  }
  std::span<const Tensor2> element_tensors(int t) const {
    detail::require_member(slot_, t, "HuZhangSpace");
    return {tensors_.data() + std::size_t(slot_[t]) * local_size(), std::size_t(local_size())};
  }
  const std::vector<TractionConstraint>& traction_constraints() const { return constraints_; }

  /// Local basis tensors and their row-wise divergences at lam.
  void evaluate(const Mesh& m, int t, const Eigen::Vector3d& lam, std::vector<Tensor2>& values,
                std::vector<Vec2>& divergence) const {
    auto tens = element_tensors(t);
    const ElementGeometry g(m, t);
    Eigen::VectorXd phi(basis_.size());
    Eigen::MatrixXd db(basis_.size(), 3), grads;
    basis_.values(lam, phi);
    basis_.barycentric_derivatives(lam, db);
    physical_gradients(g, db, grads);
    values.resize(local_size());
    divergence.resize(local_size());
    for (int j = 0; j < local_size(); ++j) {
      values[j] = phi[j / 3] * tens[j];
      divergence[j] = tens[j] * grads.row(j / 3).transpose();
    }
  }

 private:
  friend HuZhangSpace build_huzhang_space(const Mesh&, const SubdomainPartition&, int, std::span<const int>);
  explicit HuZhangSpace(int k) : basis_(k) {}

  SimplexLagrange basis_;
  std::vector<int> elements_, slot_;
  std::vector<int> dofs_;
  std::vector<Tensor2> tensors_;
  int num_dofs_ = 0;
  std::vector<TractionConstraint> constraints_;
};

inline std::array<Tensor2, 3> frame_tensors(const Vec2& n, const Vec2& t) {
  return {outer(n, n), sym_outer(n, t), outer(t, t)};
}

inline std::array<Tensor2, 3> cartesian_tensors() { return frame_tensors(Vec2::UnitX(), Vec2::UnitY()); }

/// `traction_edges`: exterior boundary edges of the minus region where the
/// normal stress trace is prescribed.
inline HuZhangSpace build_huzhang_space(const Mesh& m, const SubdomainPartition& part, int k,
                                        std::span<const int> traction_edges) {
  if (k < 3) throw ConfigError("Hu-Zhang degree must be >= 3 in 2D (got " + std::to_string(k) + ")");
  if (part.minus_elements().empty()) throw ConfigError("Hu-Zhang space requested on an empty minus subdomain");
  HuZhangSpace s(k);
  s.elements_ = part.minus_elements();
  s.slot_ = detail::element_slots(m, s.elements_);
  const SimplexLagrange& b = s.basis_;
  const int nloc = b.size();

  std::vector<bool> is_traction(m.num_edges(), false);
  for (int e : traction_edges) {
    if (!m.edge(e).boundary()) throw ConfigError("traction edge " + std::to_string(e) + " is not a boundary edge");
    if (s.contains(m.edge(e).elements[0])) is_traction[e] = true;
  }

  // Vertex frames.
  std::vector<int> vdof(m.num_vertices(), -1);
  std::vector<std::array<Tensor2, 3>> vframe(m.num_vertices(), cartesian_tensors());
  std::vector<std::vector<int>> vedges(m.num_vertices());
  for (int e = 0; e < m.num_edges(); ++e)
    if (is_traction[e])
      for (int v : m.edge(e).v) vedges[v].push_back(e);
  int next = 0;
  for (int t : s.elements_)
    for (int v : m.triangle(t)) vdof[v] = 0;
  for (int v = 0; v < m.num_vertices(); ++v) {
    if (vdof[v] < 0) continue;
    vdof[v] = next;
    next += 3;
    if (vedges[v].empty()) continue;
    TractionConstraint c;
    c.x = m.vertex(v);
    c.edges = vedges[v];
    const Vec2 n0 = m.edge_normal(vedges[v][0]);
    bool parallel = true;
    for (int e : vedges[v]) parallel = parallel && std::abs(cross(n0, m.edge_normal(e))) < 1e-10;
    if (parallel) {
      c.kind = TractionConstraint::Kind::vertex_frame;
      c.normal = n0;
      c.tangent = rotate_ccw(n0);
      vframe[v] = frame_tensors(c.normal, c.tangent);
      c.dofs = {vdof[v], vdof[v] + 1, -1};
    } else {
      c.kind = TractionConstraint::Kind::vertex_full;
      c.dofs = {vdof[v], vdof[v] + 1, vdof[v] + 2};
    }
    s.constraints_.push_back(c);
  }

  // Shared edge-node DOFs (n n^T, sym(n t)).
  std::vector<int> edof(m.num_edges(), -1);
  for (int t : s.elements_)
    for (int e : m.triangle_edges(t)) edof[e] = 0;
  for (int e = 0; e < m.num_edges(); ++e) {
    if (edof[e] < 0) continue;
    edof[e] = next;
    next += 2 * (k - 1);
    if (!is_traction[e]) continue;
    const Point& a = m.vertex(m.edge(e).v[0]);
    const Point& c = m.vertex(m.edge(e).v[1]);
    for (int q = 1; q < k; ++q) {
      TractionConstraint tc;
      tc.kind = TractionConstraint::Kind::edge_node;
      tc.x = a + (c - a) * (double(q) / k);
      tc.edges = {e};
      tc.normal = m.edge_normal(e);
      tc.tangent = m.edge_tangent(e);
      tc.dofs = {edof[e] + 2 * (q - 1), edof[e] + 2 * (q - 1) + 1, -1};
      s.constraints_.push_back(tc);
    }
  }

  // Element-owned DOFs (edge t t^T and interior) are numbered element by element.
  s.dofs_.resize(s.elements_.size() * 3 * nloc);
  s.tensors_.resize(s.dofs_.size());
  const auto cart = cartesian_tensors();
  for (std::size_t kk = 0; kk < s.elements_.size(); ++kk) {
    const int t = s.elements_[kk];
    int* d = s.dofs_.data() + kk * 3 * nloc;
    Tensor2* ten = s.tensors_.data() + kk * 3 * nloc;
    for (int v = 0; v < 3; ++v) {
      const int gv = m.triangle(t)[v];
      const int i = b.vertex_node(v);
      for (int c = 0; c < 3; ++c) d[3 * i + c] = vdof[gv] + c, ten[3 * i + c] = vframe[gv][c];
    }
    for (int le = 0; le < 3; ++le) {
      const int e = m.triangle_edges(t)[le];
      const auto ft = frame_tensors(m.edge_normal(e), m.edge_tangent(e));
      for (int q = 1; q < k; ++q) {
        const int i = b.edge_node(le, q);
        const int gq = detail::global_edge_position(m, t, le, q, k);
        d[3 * i + 0] = edof[e] + 2 * (gq - 1);
        d[3 * i + 1] = edof[e] + 2 * (gq - 1) + 1;
        d[3 * i + 2] = next++;
        for (int c = 0; c < 3; ++c) ten[3 * i + c] = ft[c];
      }
    }
    for (int i = b.first_interior_node(); i < nloc; ++i)
      for (int c = 0; c < 3; ++c) d[3 * i + c] = next++, ten[3 * i + c] = cart[c];
  }
  s.num_dofs_ = next;
  return s;
}

/// Values of the constrained DOFs given the prescribed traction `g(edge, x)`
/// (traction for the outward normal). Vertices meeting several boundary
/// directions use the least-squares fit of all normal conditions.
inline std::vector<std::pair<int, double>> traction_constraint_values(
    const Mesh& m, const HuZhangSpace& s, const std::function<Vec2(int edge, const Point& x)>& g) {
  std::vector<std::pair<int, double>> out;
  for (const auto& c : s.traction_constraints()) {
    using K = TractionConstraint::Kind;
    if (c.kind == K::edge_node || c.kind == K::vertex_frame) {
      Vec2 gv = Vec2::Zero();
      for (int e : c.edges) gv += g(e, c.x);
      gv /= double(c.edges.size());
      out.emplace_back(c.dofs[0], gv.dot(c.normal));
      out.emplace_back(c.dofs[1], gv.dot(c.tangent));
      continue;
    }
    const int rows = 2 * static_cast<int>(c.edges.size());
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(rows, 3);
    Eigen::VectorXd rhs(rows);
    for (std::size_t i = 0; i < c.edges.size(); ++i) {
      const Vec2 n = m.edge_normal(c.edges[i]);
      const Vec2 gv = g(c.edges[i], c.x);
      // sigma n = (sxx n1 + sxy n2, sxy n1 + syy n2)
      a.row(2 * i) << n.x(), n.y(), 0.0;
      a.row(2 * i + 1) << 0.0, n.x(), n.y();
      rhs.segment<2>(2 * i) = gv;
    }
    const Eigen::Vector3d sol = a.colPivHouseholderQr().solve(rhs);
    for (int q = 0; q < 3; ++q) out.emplace_back(c.dofs[q], sol[q]);
  }
  return out;
}

}  // namespace coupled_elast
