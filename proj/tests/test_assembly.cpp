#include "coupled_elast/assembly.hpp"
#include "coupled_elast/postprocess.hpp"
#include "coupled_elast/solver.hpp"

#include <gtest/gtest.h>

using namespace coupled_elast;

namespace {

Mesh reference_triangle() { return Mesh({{0, 0}, {1, 0}, {0, 1}}, {{0, 1, 2}}); }

// Hu-Zhang coefficients of a constant symmetric tensor.
Eigen::VectorXd constant_stress(const HuZhangSpace& s, const Tensor2& target) {
  Eigen::VectorXd c = Eigen::VectorXd::Zero(s.num_dofs());
  for (int t : s.elements()) {
    auto dofs = s.element_dofs(t);
    auto tens = s.element_tensors(t);
    for (std::size_t i = 0; i < dofs.size(); i += 3) {
      Eigen::Matrix3d a;
      for (int c3 = 0; c3 < 3; ++c3) a.col(c3) << tens[i + c3](0, 0), tens[i + c3](0, 1), tens[i + c3](1, 1);
      const Eigen::Vector3d x = a.partialPivLu().solve(Eigen::Vector3d(target(0, 0), target(0, 1), target(1, 1)));
      for (int c3 = 0; c3 < 3; ++c3) c[dofs[i + c3]] = x[c3];
    }
  }
  return c;
}

// Lagrange nodal interpolant of an affine field.
Eigen::VectorXd interpolate(const LagrangeSpace& s, const std::function<Vec2(const Point&)>& u) {
  Eigen::VectorXd c(s.num_dofs());
  for (int n = 0; n < s.num_nodes(); ++n) c.segment<2>(2 * n) = u(s.node_position(n));
  return c;
}

Discretization benchmark(const std::string& name, const std::string& method, int level) {
  return discretize(make_problem(name), MethodConfig::parse(method), level);
}

}  // namespace

TEST(Assembly, ComplianceOfIdentityOnReferenceTriangle) {
  const ProblemSpec p = patch_quadratic();  // lambda = 1, mu = 0.5
  const Mesh m = reference_triangle();
  const Discretization d = discretize(m, all_minus(m), p, MethodConfig::parse("hz3"));
  const CoupledSystem sys = assemble_coupled(d);
  const Eigen::VectorXd c = constant_stress(*d.stress, Tensor2::Identity());
  const Eigen::MatrixXd a = Eigen::MatrixXd(sys.matrix).topLeftCorner(d.layout.n_sigma, d.layout.n_sigma);
  EXPECT_NEAR(c.dot(a * c), 1.0 / 3.0, 1e-13);
  // A constant stress is divergence free.
  const Eigen::MatrixXd b = Eigen::MatrixXd(sys.matrix).block(d.layout.u_minus_offset(), 0, d.layout.n_u_minus, d.layout.n_sigma);
  EXPECT_LT((b * c).cwiseAbs().maxCoeff(), 1e-13);
}

TEST(Assembly, DivergencePairingMatchesLinearStress) {
  // sigma = [[x, 0], [0, 0]]: div sigma = (1, 0), so (div sigma, v) = integral of v_x.
  const ProblemSpec p = patch_quadratic();
  const Mesh m = build_structured_square(2);
  const Discretization d = discretize(m, all_minus(m), p, MethodConfig::parse("hz3"));
  const CoupledSystem sys = assemble_coupled(d);
  const HuZhangSpace& s = *d.stress;
  Eigen::VectorXd c = Eigen::VectorXd::Zero(s.num_dofs());
  const SimplexLagrange& b = s.basis();
  for (int t : s.elements()) {
    const ElementGeometry g(m, t);
    auto dofs = s.element_dofs(t);
    auto tens = s.element_tensors(t);
    for (int i = 0; i < b.size(); ++i) {
      const Point x = g.map(b.node(i));
      Eigen::Matrix3d a;
      for (int c3 = 0; c3 < 3; ++c3) a.col(c3) << tens[3 * i + c3](0, 0), tens[3 * i + c3](0, 1), tens[3 * i + c3](1, 1);
      const Eigen::Vector3d y = a.partialPivLu().solve(Eigen::Vector3d(x.x(), 0.0, 0.0));
      for (int c3 = 0; c3 < 3; ++c3) c[dofs[3 * i + c3]] = y[c3];
    }
  }
  const Eigen::MatrixXd bm = Eigen::MatrixXd(sys.matrix).block(d.layout.u_minus_offset(), 0, d.layout.n_u_minus, d.layout.n_sigma);
  const Eigen::VectorXd r = bm * c;
  // Constant test field v = (1, 0) on every element: sum of x-component rows.
  double sx = 0.0, sy = 0.0;
  const int nloc = d.u_minus->basis().size();
  for (int t : d.u_minus->elements())
    for (int a = 0; a < nloc; ++a) {
      sx += r[d.u_minus->element_offset(t) + 2 * a];
      sy += r[d.u_minus->element_offset(t) + 2 * a + 1];
    }
  EXPECT_NEAR(sx, 1.0, 1e-13);
  EXPECT_NEAR(sy, 0.0, 1e-13);
}

TEST(Assembly, LagrangeEnergyOfAffineField) {
  const ProblemSpec p = patch_quadratic();
  const Mesh m = reference_triangle();
  const Discretization d = discretize(m, all_plus(m), p, MethodConfig::parse("lagrange2"));
  const CoupledSystem sys = assemble_coupled(d);
  // u = (x, 0): eps : A^{-1} eps = 2 mu + lambda = 2 on area 1/2.
  const Eigen::VectorXd u = interpolate(*d.u_plus, [](const Point& x) { return Vec2(x.x(), 0.0); });
  EXPECT_NEAR(u.dot(sys.matrix * u), -1.0, 1e-13);
  // Rigid motions carry no energy.
  const Eigen::VectorXd r = interpolate(*d.u_plus, [](const Point& x) { return Vec2(-x.y() + 0.3, x.x() - 0.1); });
  EXPECT_LT((sys.matrix * r).norm(), 1e-13);
}

TEST(Assembly, SymmetricOnBenchmarks) {
  for (auto [name, method] : {std::pair{"square", "hz3+l4"}, {"lshape", "hz3+l1"}, {"cook", "hz3+l2"}, {"patch", "hz3+l4"},
                              {"square", "lagrange3"}, {"square", "hz4"}}) {
    const Discretization d = benchmark(name, method, 1);
    const CoupledSystem raw = assemble_coupled(d);
    EXPECT_LE(symmetry_defect(raw.matrix), 1e-12) << name << ' ' << method;
    const CoupledSystem sys = build_system(d, make_problem(name).body_force);
    EXPECT_LE(symmetry_defect(sys.matrix), 1e-12) << name << ' ' << method;
  }
}

TEST(Assembly, DisplacementBlocksDoNotCouple) {
  const Discretization d = benchmark("square", "hz3+l4", 1);
  const CoupledSystem sys = assemble_coupled(d);
  const int um = d.layout.u_minus_offset(), up = d.layout.u_plus_offset();
  int bad = 0;
  for (int col = 0; col < sys.matrix.outerSize(); ++col)
    for (Eigen::SparseMatrix<double>::InnerIterator it(sys.matrix, col); it; ++it) {
      const bool row_minus = it.row() >= um && it.row() < up, col_minus = col >= um && col < up;
      const bool row_plus = it.row() >= up, col_plus = col >= up;
      if (row_minus && (col_minus || col_plus) && it.value() != 0.0) ++bad;
      if (row_plus && col_minus && it.value() != 0.0) ++bad;
    }
  EXPECT_EQ(bad, 0);
}

TEST(Assembly, SequentialAndParallelAgree) {
  const Discretization d = benchmark("lshape", "hz3+l1", 2);
  AssemblyOptions seq;
  seq.sequential = true;
  AssemblyOptions par;
  par.threads = 3;
  const CoupledSystem a = assemble_coupled(d, seq), b = assemble_coupled(d, par);
  EXPECT_LE(Eigen::MatrixXd(a.matrix - b.matrix).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(Assembly, InvariantUnderLocalVertexRotation) {
  const ProblemSpec p = square_manufactured();
  const Mesh m = refine_times(p.initial_mesh(), 0);
  std::vector<std::array<int, 3>> rotated = m.triangles();
  for (std::size_t t = 0; t < rotated.size(); ++t) {
    auto& tri = rotated[t];
    for (std::size_t r = 0; r < t % 3; ++r) tri = {tri[1], tri[2], tri[0]};
  }
  const Mesh mr(m.vertices(), rotated);
  const MethodConfig method = MethodConfig::parse("hz3+l4");
  const Discretization d0 = discretize(m, make_partition(m, p.region), p, method);
  const Discretization d1 = discretize(mr, make_partition(mr, p.region), p, method);
  const DiscreteSolution s0(d0, solve(build_system(d0, p.body_force)).solution);
  const DiscreteSolution s1(d1, solve(build_system(d1, p.body_force)).solution);
  for (const Point& x : {Point(0.31, 0.43), Point(0.6, 0.55), Point(0.1, 0.82), Point(0.9, 0.13)}) {
    auto u0 = eval_point(m, x, [&](int t, const Eigen::Vector3d& l) { return s0.displacement(t, l); });
    auto u1 = eval_point(mr, x, [&](int t, const Eigen::Vector3d& l) { return s1.displacement(t, l); });
    EXPECT_LT((u0.value - u1.value).norm(), 1e-10);
    auto t0 = eval_point(m, x, [&](int t, const Eigen::Vector3d& l) { return s0.stress(t, l); });
    auto t1 = eval_point(mr, x, [&](int t, const Eigen::Vector3d& l) { return s1.stress(t, l); });
    EXPECT_LT((t0.value - t1.value).norm(), 1e-9);
  }
}

TEST(Load, BodyForceIntegratesToArea) {
  ProblemSpec p = patch_quadratic();
  p.body_force = [](const Point&) { return Vec2(1.0, -2.0); };
  p.boundary = [](const Point&, const Vec2&) {
    return BoundaryCondition{BoundaryKind::traction, [](const Point&) { return Vec2(0, 0); }};
  };
  for (const char* method : {"lagrange3", "hz3", "hz3+l2"}) {
    const Discretization d = discretize(p, MethodConfig::parse(method), 1);
    CoupledSystem sys = assemble_coupled(d);
    assemble_load(d, p.body_force, sys);
    double sx = 0.0, sy = 0.0;
    for (int i = d.layout.u_minus_offset(); i < d.layout.size(); ++i) ((i - d.layout.u_minus_offset()) % 2 ? sy : sx) += sys.rhs[i];
    EXPECT_NEAR(sx, -1.0, 1e-12) << method;
    EXPECT_NEAR(sy, 2.0, 1e-12) << method;
  }
}

TEST(Load, DirichletTermOnMixedBoundary) {
  // <tau n, g> with tau = I and g = x equals the integral of div x = 2 |Omega|.
  ProblemSpec p = patch_quadratic();
  p.boundary = dirichlet_everywhere([](const Point& x) { return Vec2(x); });
  const Mesh m = build_structured_square(2);
  const Discretization d = discretize(m, all_minus(m), p, MethodConfig::parse("hz3"));
  CoupledSystem sys = assemble_coupled(d);
  assemble_load(d, [](const Point&) { return Vec2::Zero().eval(); }, sys);
  const Eigen::VectorXd c = constant_stress(*d.stress, Tensor2::Identity());
  EXPECT_NEAR(c.dot(sys.rhs.head(d.layout.n_sigma)), 2.0, 1e-12);
}

TEST(Essential, EliminationKeepsSymmetryAndValues) {
  const Discretization d = benchmark("cook", "hz3+l2", 0);
  const CoupledSystem sys = build_system(d, make_problem("cook").body_force);
  EXPECT_TRUE(sys.constrained);
  EXPECT_FALSE(sys.constraints.empty());
  for (auto [i, v] : sys.constraints) {
    EXPECT_EQ(sys.matrix.coeff(i, i), 1.0);
    EXPECT_EQ(sys.rhs[i], v);
  }
  EXPECT_LE(symmetry_defect(sys.matrix), 1e-12);
}

TEST(Essential, ConflictingValuesThrow) {
  CoupledSystem sys;
  sys.matrix.resize(2, 2);
  sys.matrix.setIdentity();
  sys.rhs = Eigen::VectorXd::Zero(2);
  CoupledSystem ok = sys;
  EXPECT_NO_THROW(apply_essential(ok, {{0, 1.0}, {0, 1.0}}));
  EXPECT_THROW(apply_essential(sys, {{0, 1.0}, {0, 2.0}}), ConfigError);
  EXPECT_THROW(apply_essential(sys, {{5, 1.0}}), ConfigError);
}
