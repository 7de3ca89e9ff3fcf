#include "coupled_elast/postprocess.hpp"

#include <gtest/gtest.h>

#include <numbers>

using namespace coupled_elast;

namespace {

struct Solved {
  ProblemSpec problem;
  Discretization d;
  Eigen::VectorXd x;
};

Solved solve_problem(const std::string& name, const std::string& method, int level) {
  Solved s{make_problem(name), {}, {}};
  s.d = discretize(s.problem, MethodConfig::parse(method), level);
  s.x = solve(build_system(s.d, s.problem.body_force)).solution;
  return s;
}

ExactSolution zero_solution() {
  ExactSolution ex;
  ex.displacement = [](const Point&) { return Vec2::Zero().eval(); };
  ex.displacement_gradient = [](const Point&) { return Tensor2::Zero().eval(); };
  ex.stress = [](const Point&) { return Tensor2::Zero().eval(); };
  ex.body_force = [](const Point&) { return Vec2::Zero().eval(); };
  return ex;
}

}  // namespace

TEST(PostProcess, ReproducesPatchSolution) {
  const Solved s = solve_problem("patch", "hz3+l4", 0);
  const DiscreteSolution sol(s.d, s.x);
  const DGField us = postprocess_displacement(sol);
  double worst = 0.0;
  for (int t : us.space.elements())
    for (const Eigen::Vector3d& lam : {Eigen::Vector3d(0.2, 0.3, 0.5), Eigen::Vector3d(1, 0, 0), Eigen::Vector3d(0.6, 0.4, 0)}) {
      const Point x = ElementGeometry(s.d.mesh, t).map(lam);
      worst = std::max(worst, (us.value(t, lam) - s.problem.exact->displacement(x)).norm());
    }
  EXPECT_LE(worst, 1e-10);
}

TEST(PostProcess, ZeroDataGivesZero) {
  const Solved s = solve_problem("square", "hz3+l4", 0);
  const DiscreteSolution sol(s.d, Eigen::VectorXd::Zero(s.d.layout.size()));
  const DGField us = postprocess_displacement(sol);
  EXPECT_EQ(us.coef.cwiseAbs().maxCoeff(), 0.0);
}

TEST(PostProcess, PreservesLowOrderMoments) {
  const Solved s = solve_problem("square", "hz3+l4", 1);
  const DiscreteSolution sol(s.d, s.x);
  const DGField us = postprocess_displacement(sol);
  const DGField uh = sol.u_minus_field();
  const int k = s.d.stress->degree();
  const SimplexLagrange low(k - 1);
  const QuadratureRule& rule = cached_triangle_rule(2 * k + 2);
  Eigen::VectorXd psi(low.size());
  double worst = 0.0, scale = 0.0;
  for (int t : us.space.elements()) {
    Eigen::MatrixXd moment = Eigen::MatrixXd::Zero(low.size(), 2);
    for (std::size_t q = 0; q < rule.size(); ++q) {
      const Eigen::Vector3d lam = rule.barycentric(q);
      low.values(lam, psi);
      const Vec2 diff = us.value(t, lam) - uh.value(t, lam);
      moment += rule.weights[q] * psi * diff.transpose();
      scale = std::max(scale, uh.value(t, lam).norm());
    }
    worst = std::max(worst, moment.cwiseAbs().maxCoeff());
  }
  EXPECT_GT(scale, 0.1);
  EXPECT_LE(worst, 1e-11);
}

TEST(Projection, ReproducesPolynomials) {
  const Mesh m = build_structured_square(2);
  const auto space = build_dg_space(m, all_minus(m), 3);
  auto u = [](const Point& x) { return Vec2(x.x() * x.x() * x.y() - 1.0, 2.0 * x.y() * x.y() * x.y() + x.x()); };
  const DGField f = l2_project(m, space, u);
  for (int t = 0; t < m.num_triangles(); ++t) {
    const Eigen::Vector3d lam(0.1, 0.7, 0.2);
    EXPECT_LT((f.value(t, lam) - u(ElementGeometry(m, t).map(lam))).norm(), 1e-12);
  }
}

TEST(Projection, ConstantIsElementAverage) {
  const Mesh m({{0, 0}, {1, 0}, {0, 1}}, {{0, 1, 2}});
  const auto space = build_dg_space(m, all_minus(m), 0);
  const DGField f = l2_project(m, space, [](const Point& x) { return Vec2(std::sin(std::numbers::pi * x.x()), 1.0); }, 20);
  EXPECT_NEAR(f.coef[0], 2.0 / std::numbers::pi, 1e-10);
  EXPECT_NEAR(f.coef[1], 1.0, 1e-14);
}

TEST(Projection, ResidualIsOrthogonal) {
  const Mesh m = build_cook_mesh();
  const auto space = build_dg_space(m, all_minus(m), 2);
  auto u = [](const Point& x) { return Vec2(std::exp(0.05 * x.x()), std::cos(0.1 * x.y())); };
  const DGField f = l2_project(m, space, u, 16);
  const QuadratureRule& rule = cached_triangle_rule(16);
  Eigen::VectorXd phi(space.basis().size());
  double worst = 0.0;
  for (int t : {0, 7, 20}) {
    const ElementGeometry g(m, t);
    Eigen::MatrixXd r = Eigen::MatrixXd::Zero(phi.size(), 2);
    for (std::size_t q = 0; q < rule.size(); ++q) {
      space.basis().values(rule.barycentric(q), phi);
      const Vec2 e = u(g.map(rule.barycentric(q))) - f.combine(t, phi);
      r += rule.weights[q] * phi * e.transpose();
    }
    worst = std::max(worst, r.cwiseAbs().maxCoeff());
  }
  EXPECT_LE(worst, 1e-10);
}

TEST(Norms, IdentityStressOnUnitSquare) {
  const ProblemSpec p = patch_quadratic();
  const Mesh m = build_structured_square(2);
  const Discretization d = discretize(m, all_minus(m), p, MethodConfig::parse("hz3"));
  Eigen::VectorXd x = Eigen::VectorXd::Zero(d.layout.size());
  const HuZhangSpace& s = *d.stress;
  for (int t : s.elements()) {
    auto dofs = s.element_dofs(t);
    auto tens = s.element_tensors(t);
    for (std::size_t i = 0; i < dofs.size(); i += 3) {
      Eigen::Matrix3d a;
      for (int c = 0; c < 3; ++c) a.col(c) << tens[i + c](0, 0), tens[i + c](0, 1), tens[i + c](1, 1);
      const Eigen::Vector3d y = a.partialPivLu().solve(Eigen::Vector3d(1, 0, 1));
      for (int c = 0; c < 3; ++c) x[dofs[i + c]] = y[c];
    }
  }
  const DiscreteSolution sol(d, x);
  const NormSet n = error_norms(sol, zero_solution());
  EXPECT_NEAR(n.get("sigma_l2"), std::sqrt(2.0), 1e-12);
  EXPECT_NEAR(n.get("sigma_hdiv"), std::sqrt(2.0), 1e-12);
  EXPECT_NEAR(n.get("stress_l2"), std::sqrt(2.0), 1e-12);
  EXPECT_EQ(n.get("u_minus_l2"), 0.0);
  EXPECT_FALSE(n.has("u_plus_l2"));
  EXPECT_THROW(n.get("u_plus_l2"), Error);
}

TEST(Norms, PlusDisplacementOfConstantShift) {
  // u_h = exact + (1, 0): L2 error is sqrt(|Omega|), energy error zero.
  const ProblemSpec p = patch_quadratic();
  const Mesh m = build_structured_square(2);
  const Discretization d = discretize(m, all_plus(m), p, MethodConfig::parse("lagrange2"));
  Eigen::VectorXd x(d.layout.size());
  for (int nd = 0; nd < d.u_plus->num_nodes(); ++nd)
    x.segment<2>(2 * nd) = p.exact->displacement(d.u_plus->node_position(nd)) + Vec2(1.0, 0.0);
  const NormSet n = error_norms(DiscreteSolution(d, x), *p.exact);
  EXPECT_NEAR(n.get("u_plus_l2"), 1.0, 1e-12);
  EXPECT_LT(n.get("u_plus_energy"), 1e-12);
}

TEST(Norms, QuadratureIsSaturated) {
  const Solved s = solve_problem("square", "hz3+l4", 1);
  const DiscreteSolution sol(s.d, s.x);
  const DGField us = postprocess_displacement(sol);
  NormOptions more;
  more.extra_degree = 2;
  const NormSet a = error_norms(sol, *s.problem.exact, &us), b = error_norms(sol, *s.problem.exact, &us, more);
  ASSERT_EQ(a.values.size(), b.values.size());
  for (std::size_t i = 0; i < a.values.size(); ++i)
    EXPECT_NEAR(a.values[i].second, b.values[i].second, 1e-8 * std::max(1.0, a.values[i].second)) << a.values[i].first;
}

TEST(Norms, NamesFollowReportOrder) {
  const Solved s = solve_problem("square", "hz3+l4", 0);
  const DiscreteSolution sol(s.d, s.x);
  const DGField us = postprocess_displacement(sol);
  const NormSet n = error_norms(sol, *s.problem.exact, &us);
  std::vector<std::string> got;
  for (const auto& [name, v] : n.values) got.push_back(name);
  EXPECT_EQ(got, norm_names());
}

TEST(Rates, PairAndLeastSquares) {
  EXPECT_NEAR(pair_rate(1.0, 1.0, 0.5, 0.25), 2.0, 1e-14);
  EXPECT_NEAR(pair_rate(1.0, 1.0, 0.5, 1.0 / 32.0), 5.0, 1e-14);
  EXPECT_EQ(pair_rate(1.0, 0.0, 0.5, 0.1), 0.0);
  EXPECT_EQ(pair_rate(1.0, 1.0, 0.5, std::numeric_limits<double>::infinity()), 0.0);
  std::vector<double> h, e;
  for (int l = 0; l < 5; ++l) {
    h.push_back(std::pow(0.5, l));
    e.push_back(3.0 * std::pow(h.back(), 3.7));
  }
  EXPECT_NEAR(least_squares_rate(h, e), 3.7, 1e-12);
  const auto r = convergence_rates(h, e);
  EXPECT_EQ(r[0], 0.0);
  for (std::size_t i = 1; i < r.size(); ++i) EXPECT_NEAR(r[i], 3.7, 1e-12);
  EXPECT_EQ(least_squares_rate({1.0}, {1.0}), 0.0);
}

TEST(PointEvaluation, ConstantVertexAndTraction) {
  const Solved s = solve_problem("square", "hz3+l4", 1);
  const DiscreteSolution sol(s.d, s.x);
  const Mesh& m = s.d.mesh;
  auto c = eval_point(m, Point(0.3, 0.3), [](int, const Eigen::Vector3d&) { return 4.0; });
  EXPECT_EQ(c.value, 4.0);
  EXPECT_EQ(c.all.size(), 2u);  // on a diagonal of the structured mesh
  EXPECT_THROW(eval_point(m, Point(2.0, 2.0), [](int, const Eigen::Vector3d&) { return 0.0; }), ConfigError);

  // A plus-side vertex: all incident elements agree.
  auto uv = eval_point(m, Point(0.125, 0.125), [&](int t, const Eigen::Vector3d& l) { return sol.displacement(t, l); });
  ASSERT_GT(uv.all.size(), 2u);
  for (const auto& [t, v] : uv.all) EXPECT_LT((v - uv.value).norm(), 1e-12);

  // Normal stress trace matches across an edge inside the minus region.
  const Point x(0.5, 0.4375);
  auto sv = eval_point(m, x, [&](int t, const Eigen::Vector3d& l) { return sol.stress(t, l); });
  ASSERT_EQ(sv.all.size(), 2u);
  const Vec2 n(1.0, 0.0);
  EXPECT_LT(((sv.all[0].second - sv.all[1].second) * n).norm(), 1e-10);
}
