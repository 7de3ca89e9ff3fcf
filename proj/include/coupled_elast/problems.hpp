#pragma once

#include "coupled_elast/dual.hpp"
#include "coupled_elast/material.hpp"
#include "coupled_elast/partition.hpp"

#include <json.hpp>

#include <array>
#include <fstream>
#include <functional>
#include <numbers>
#include <optional>
#include <random>

namespace coupled_elast {

enum class BoundaryKind { dirichlet, traction };

struct BoundaryCondition {
  BoundaryKind kind = BoundaryKind::dirichlet;
  std::function<Vec2(const Point&)> value;  // displacement (Dirichlet) or traction for the outward normal
};

/// Closed-form solution with its stress and load.
struct ExactSolution {
  std::function<Vec2(const Point&)> displacement;
  std::function<Tensor2(const Point&)> displacement_gradient;  // G(i,j) = d u_i / d x_j
  std::function<Tensor2(const Point&)> stress;
  std::function<Vec2(const Point&)> body_force;                // f = -div sigma
};

/// How the minus (Hu-Zhang) subdomain is selected for coupled runs.
struct BoxRegion {
  Point lo, hi;
};
struct LayerRegion {
  Seed seed;
  int layers = 1;
};
struct PredicateRegion {
  std::function<bool(const Point&)> inside;
  std::string description;
};
using RegionSpec = std::variant<BoxRegion, LayerRegion, PredicateRegion>;

inline SubdomainPartition make_partition(const Mesh& m, const RegionSpec& r) {
  if (const auto* b = std::get_if<BoxRegion>(&r)) return partition_by_region(m, open_box(b->lo, b->hi));
  if (const auto* l = std::get_if<LayerRegion>(&r)) return grow_layers(m, l->seed, l->layers);
  return partition_by_region(m, std::get<PredicateRegion>(r).inside);
}

enum class ProbeQuantity { ux, uy, sxx, sxy, syy };

/// Point quantity reported per level (e.g. Cook tip displacement).
struct Probe {
  std::string name;
  Point x;
  ProbeQuantity quantity = ProbeQuantity::uy;
};

struct ProblemSpec {
  std::string name;
  std::function<Mesh()> initial_mesh;
  std::function<Material(const Point&)> material;  // evaluated at element barycenters
  std::function<BoundaryCondition(const Point& midpoint, const Vec2& normal)> boundary;
  std::function<Vec2(const Point&)> body_force;
  std::optional<ExactSolution> exact;
  RegionSpec region;
  std::vector<Probe> probes;
  /// Known global stress rate for singular solutions (replaces the smooth-rate expectations).
  std::optional<double> singular_stress_rate;
};

// ---------------------------------------------------------------------------
// Exact solutions from closed-form displacements via forward-mode differentiation.

/// `u` is a generic callable `(T x, T y) -> std::array<T, 2>`.
template <class F>
ExactSolution make_exact_solution(F u, Material mat) {
  ExactSolution ex;
  ex.displacement = [u](const Point& p) {
    auto r = u(p.x(), p.y());
    return Vec2(r[0], r[1]);
  };
  ex.displacement_gradient = [u](const Point& p) {
    using D = Dual<double>;
    auto r = u(D(p.x(), 1.0, 0.0), D(p.y(), 0.0, 1.0));
    Tensor2 g;
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) g(i, j) = r[i].d[j];
    return g;
  };
  ex.stress = [grad = ex.displacement_gradient, mat](const Point& p) { return mat.stiffness(sym_part(grad(p))); };
  ex.body_force = [u, mat](const Point& p) {
    using D = Dual<double>;
    using DD = Dual<D>;
    const DD x(D(p.x(), 1.0, 0.0), D(1.0), D(0.0));
    const DD y(D(p.y(), 0.0, 1.0), D(0.0), D(1.0));
    auto r = u(x, y);
    // h[i][j][k] = d^2 u_i / dx_j dx_k
    double h[2][2][2];
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j)
        for (int k = 0; k < 2; ++k) h[i][j][k] = r[i].d[j].d[k];
    Vec2 f;
    for (int i = 0; i < 2; ++i) {
      double s = 0.0;
      for (int j = 0; j < 2; ++j) s += mat.mu * (h[i][j][j] + h[j][i][j]);
      s += mat.lambda * (h[0][i][0] + h[1][i][1]);
      f[i] = -s;
    }
    return f;
  };
  return ex;
}

inline std::function<BoundaryCondition(const Point&, const Vec2&)> dirichlet_everywhere(
    std::function<Vec2(const Point&)> g) {
  return [g](const Point&, const Vec2&) { return BoundaryCondition{BoundaryKind::dirichlet, g}; };
}

// ---------------------------------------------------------------------------
// Benchmarks.

/// Unit square, u = (sin pi x sin pi y, sin pi x sin pi y), lambda = 1, mu = 0.5,
/// minus region (0.25,0.75)^2, homogeneous Dirichlet data.
inline ProblemSpec square_manufactured() {
  ProblemSpec p;
  p.name = "square";
  p.initial_mesh = [] { return build_structured_square(4); };
  const Material mat(1.0, 0.5);
  p.material = [mat](const Point&) { return mat; };
  auto u = [](auto x, auto y) {
    using std::sin;
    constexpr double pi = std::numbers::pi;
    auto s = sin(pi * x) * sin(pi * y);
    return std::array{s, s};
  };
  p.exact = make_exact_solution(u, mat);
  p.body_force = p.exact->body_force;
  p.boundary = dirichlet_everywhere(p.exact->displacement);
  p.region = BoxRegion{{0.25, 0.25}, {0.75, 0.75}};
  return p;
}

namespace lshape {
inline constexpr double gamma = 0.5444837367;
inline constexpr double q = 0.5430755688;
}  // namespace lshape

/// L-shaped domain with the corner-singular displacement, mu = lambda = 1,
/// Dirichlet data from the exact solution, minus region = first layer around (0,0).
inline ProblemSpec lshape_singular() {
  ProblemSpec p;
  p.name = "lshape";
  p.initial_mesh = build_lshape_mesh;
  const Material mat(1.0, 1.0);
  p.material = [mat](const Point&) { return mat; };
  const double nu = mat.lambda / (2.0 * (mat.lambda + mat.mu));
  const double kappa = 3.0 - 4.0 * nu;
  const double mu = mat.mu;
  auto u = [kappa, mu](auto x, auto y) {
    using std::atan2;
    using std::cos;
    using std::pow;
    using std::sin;
    using std::sqrt;
    using T = decltype(x);
    constexpr double pi = std::numbers::pi;
    constexpr double g = lshape::gamma, q = lshape::q;
    const T r2 = x * x + y * y;
    if (value_of(r2) == 0.0) return std::array<T, 2>{T(0.0), T(0.0)};
    const T r = sqrt(r2);
    T th = atan2(y, x);
    // Domain sector is theta in [0, 3 pi / 2]; the excluded quadrant carries the branch cut.
    if (value_of(th) < -pi / 2 + 1e-14) th = th + 2.0 * pi;
    const T a = -(1.0 + g) * cos((1.0 + g) * th) + (kappa - g) * q * cos((1.0 - g) * th);
    const T b = (1.0 + g) * sin((1.0 + g) * th) - (kappa + g) * q * sin((1.0 - g) * th);
    const T rg = pow(r, g) / (2.0 * mu);
    return std::array<T, 2>{rg * (cos(th) * a - sin(th) * b), rg * (sin(th) * a + cos(th) * b)};
  };
  p.exact = make_exact_solution(u, mat);
  auto stress = p.exact->stress;
  p.exact->stress = [stress](const Point& x) {
    if (x.norm() == 0.0) throw ConfigError("lshape: exact stress is singular at r = 0");
    return stress(x);
  };
  p.body_force = p.exact->body_force;
  p.boundary = dirichlet_everywhere(p.exact->displacement);
  p.region = LayerRegion{PointSeed{{0.0, 0.0}}, 1};
  p.probes = {{"sxx_origin", {0, 0}, ProbeQuantity::sxx},
              {"sxy_origin", {0, 0}, ProbeQuantity::sxy},
              {"syy_origin", {0, 0}, ProbeQuantity::syy}};
  p.singular_stress_rate = lshape::gamma;
  return p;
}

namespace cook {
inline bool in_inclusion(const Point& x) {
  const std::array<Point, 3> c = {Point(12.0, 20.25), Point(36.0, 38.75), Point(36.0, 50.25)};
  for (int i = 0; i < 3; ++i)
    if (cross(c[(i + 1) % 3] - c[i], x - c[i]) <= 0.0) return false;
  return true;
}
inline const Material inner = Material::from_young_poisson(250.0, 0.35);
inline const Material outer = Material::from_young_poisson(80.0, 0.499999);
inline constexpr double shear_load = 100.0;
}  // namespace cook

/// Bimaterial Cook membrane: stiff compressible inclusion (plus, Lagrange),
/// nearly incompressible surrounding plate (minus, Hu-Zhang). Clamped at x = 0,
/// traction (0, F) on x = 48, traction free elsewhere.
inline ProblemSpec cook_bimaterial() {
  ProblemSpec p;
  p.name = "cook";
  p.initial_mesh = build_cook_mesh;
  p.material = [](const Point& x) { return cook::in_inclusion(x) ? cook::inner : cook::outer; };
  p.body_force = [](const Point&) { return Vec2::Zero().eval(); };
  p.boundary = [](const Point& mid, const Vec2&) {
    if (std::abs(mid.x()) < 1e-9) return BoundaryCondition{BoundaryKind::dirichlet, [](const Point&) { return Vec2(0, 0); }};
    if (std::abs(mid.x() - 48.0) < 1e-9)
      return BoundaryCondition{BoundaryKind::traction, [](const Point&) { return Vec2(0, cook::shear_load); }};
    return BoundaryCondition{BoundaryKind::traction, [](const Point&) { return Vec2(0, 0); }};
  };
  p.region = PredicateRegion{[](const Point& x) { return !cook::in_inclusion(x); }, "outside inclusion"};
  p.probes = {{"tip_uy", {48.0, 60.0}, ProbeQuantity::uy}};
  return p;
}

/// Global quadratic displacement with constant load: contained in every
/// discrete space of the hz3+l4 method.
inline ProblemSpec patch_quadratic() {
  ProblemSpec p;
  p.name = "patch";
  p.initial_mesh = [] { return build_structured_square(4); };
  const Material mat(1.0, 0.5);
  p.material = [mat](const Point&) { return mat; };
  auto u = [](auto x, auto y) {
    return std::array{0.3 + x * x + 2.0 * x * y - 0.5 * y * y + 0.2 * x,
                      -0.1 - 0.7 * x * x + x * y + 1.5 * y * y - 0.4 * y};
  };
  p.exact = make_exact_solution(u, mat);
  p.body_force = p.exact->body_force;
  p.boundary = dirichlet_everywhere(p.exact->displacement);
  p.region = BoxRegion{{0.25, 0.25}, {0.75, 0.75}};
  return p;
}

/// Names accepted by `make_problem`.
inline std::vector<std::string> problem_names() { return {"square", "lshape", "cook", "patch"}; }

// ---------------------------------------------------------------------------
// JSON problem definitions (constant data, builtin or file meshes).

inline std::function<Mesh()> builtin_mesh(const std::string& name) {
  if (name == "square") return [] { return build_structured_square(4); };
  if (name == "lshape") return build_lshape_mesh;
  if (name == "cook") return build_cook_mesh;
  throw ConfigError("unknown builtin mesh '" + name + "'");
}

namespace detail {
inline Material material_from_json(const nlohmann::json& j) {
  if (j.contains("E")) return Material::from_young_poisson(j.at("E").get<double>(), j.at("nu").get<double>());
  return {j.at("lambda").get<double>(), j.at("mu").get<double>()};
}
inline std::array<double, 4> box_from_json(const nlohmann::json& j) {
  auto v = j.get<std::vector<double>>();
  if (v.size() != 4) throw ConfigError("box must have 4 entries x0,y0,x1,y1");
  return {v[0], v[1], v[2], v[3]};
}
inline bool in_closed_box(const std::array<double, 4>& b, const Point& x, double tol = 1e-9) {
  return x.x() >= b[0] - tol && x.x() <= b[2] + tol && x.y() >= b[1] - tol && x.y() <= b[3] + tol;
}
inline Vec2 vec_from_json(const nlohmann::json& j) {
  auto v = j.get<std::vector<double>>();
  if (v.size() != 2) throw ConfigError("vector must have 2 entries");
  return {v[0], v[1]};
}
}  // namespace detail

/// Builds a problem from a JSON description:
/// {
///   "name": "...", "domain": "square" | "lshape" | "cook" | {"mesh_file": "path"},
///   "material": {"lambda":..,"mu":..} | {"E":..,"nu":..},
///   "materials": [{"box":[x0,y0,x1,y1], ...material...}],          (optional overrides)
///   "body_force": [fx, fy],                                          (default 0)
///   "boundary": [{"type":"dirichlet"|"traction", "box":[...], "value":[a,b]}],
///   "region": {"box":[...]} | {"layers":i, "seed_point":[x,y]} | {"layers":i, "seed_segment":[x0,y0,x1,y1]},
///   "probes": [{"name":"..","point":[x,y],"quantity":"ux|uy|sxx|sxy|syy"}]
/// }
/// Boundary entries match edge midpoints (closed box, first match wins); an
/// entry without "box" matches everything. Unmatched edges are clamped.
inline ProblemSpec problem_from_json(const nlohmann::json& j) {
  using detail::box_from_json;
  ProblemSpec p;
  try {
    p.name = j.value("name", std::string("custom"));
    const auto& dom = j.at("domain");
    if (dom.is_string()) {
      p.initial_mesh = builtin_mesh(dom.get<std::string>());
    } else {
      const std::string path = dom.at("mesh_file").get<std::string>();
      p.initial_mesh = [path] { return read_mesh_file(path); };
    }
    const Material base = detail::material_from_json(j.at("material"));
    std::vector<std::pair<std::array<double, 4>, Material>> overrides;
    if (j.contains("materials"))
      for (const auto& mj : j.at("materials")) overrides.emplace_back(box_from_json(mj.at("box")), detail::material_from_json(mj));
    p.material = [base, overrides](const Point& x) {
      for (const auto& [b, mat] : overrides)
        if (detail::in_closed_box(b, x, 0.0)) return mat;
      return base;
    };
    const Vec2 f = j.contains("body_force") ? detail::vec_from_json(j.at("body_force")) : Vec2::Zero();
    p.body_force = [f](const Point&) { return f; };
    struct Rule {
      std::optional<std::array<double, 4>> box;
      BoundaryKind kind;
      Vec2 value;
    };
    std::vector<Rule> rules;
    if (j.contains("boundary"))
      for (const auto& bj : j.at("boundary")) {
        Rule r;
        const std::string type = bj.at("type").get<std::string>();
        if (type == "dirichlet") r.kind = BoundaryKind::dirichlet;
        else if (type == "traction") r.kind = BoundaryKind::traction;
        else throw ConfigError("boundary type must be 'dirichlet' or 'traction'");
        if (bj.contains("box")) r.box = box_from_json(bj.at("box"));
        r.value = bj.contains("value") ? detail::vec_from_json(bj.at("value")) : Vec2::Zero();
        rules.push_back(r);
      }
    p.boundary = [rules](const Point& mid, const Vec2&) {
      for (const auto& r : rules)
        if (!r.box || detail::in_closed_box(*r.box, mid))
          return BoundaryCondition{r.kind, [v = r.value](const Point&) { return v; }};
      return BoundaryCondition{BoundaryKind::dirichlet, [](const Point&) { return Vec2(0, 0); }};
    };
    if (j.contains("region")) {
      const auto& rj = j.at("region");
      if (rj.contains("box")) {
        auto b = box_from_json(rj.at("box"));
        p.region = BoxRegion{{b[0], b[1]}, {b[2], b[3]}};
      } else {
        const int layers = rj.at("layers").get<int>();
        if (rj.contains("seed_point")) {
          p.region = LayerRegion{PointSeed{detail::vec_from_json(rj.at("seed_point"))}, layers};
        } else {
          auto s = box_from_json(rj.at("seed_segment"));
          p.region = LayerRegion{SegmentSeed{{s[0], s[1]}, {s[2], s[3]}}, layers};
        }
      }
    } else {
      p.region = PredicateRegion{[](const Point&) { return true; }, "whole domain"};
    }
    if (j.contains("probes"))
      for (const auto& pj : j.at("probes")) {
        static const std::map<std::string, ProbeQuantity> q = {{"ux", ProbeQuantity::ux},   {"uy", ProbeQuantity::uy},
                                                               {"sxx", ProbeQuantity::sxx}, {"sxy", ProbeQuantity::sxy},
                                                               {"syy", ProbeQuantity::syy}};
        auto it = q.find(pj.at("quantity").get<std::string>());
        if (it == q.end()) throw ConfigError("unknown probe quantity");
        p.probes.push_back({pj.at("name").get<std::string>(), detail::vec_from_json(pj.at("point")), it->second});
      }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("problem config: ") + e.what());
  }
  return p;
}

inline ProblemSpec problem_from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config " + path + ": " + e.what());
  }
  return problem_from_json(j);
}

inline ProblemSpec make_problem(const std::string& name) {
  if (name == "square") return square_manufactured();
  if (name == "lshape") return lshape_singular();
  if (name == "cook") return cook_bimaterial();
  if (name == "patch") return patch_quadratic();
  throw ConfigError("unknown problem '" + name + "'");
}

/// Max |f + div sigma| / (1 + |f|) over random points of the initial mesh,
/// with div sigma from fourth-order central differences of the exact stress
/// (independent of the forward-mode load derivation). Points keep every
/// barycentric coordinate >= 0.1 so they stay clear of mesh vertices.
inline double exact_consistency_residual(const ProblemSpec& p, int samples = 100, unsigned seed = 7) {
  if (!p.exact) return 0.0;
  const Mesh m = p.initial_mesh();
  std::mt19937 gen(seed);
  std::uniform_int_distribution<int> pick(0, m.num_triangles() - 1);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  double worst = 0.0;
  for (int s = 0; s < samples; ++s) {
    const int t = pick(gen);
    double a = u01(gen), b = u01(gen);
    if (a + b > 1.0) a = 1.0 - a, b = 1.0 - b;
    const double l1 = 0.1 + 0.7 * a, l2 = 0.1 + 0.7 * b;
    const auto& tri = m.triangle(t);
    const Point x = m.vertex(tri[0]) + l1 * (m.vertex(tri[1]) - m.vertex(tri[0])) + l2 * (m.vertex(tri[2]) - m.vertex(tri[0]));
    const double h = 1e-4 * m.diameter(t);
    Vec2 div = Vec2::Zero();
    for (int j = 0; j < 2; ++j) {
      auto at = [&](double s) {
        Point y = x;
        y[j] += s * h;
        return p.exact->stress(y);
      };
      const Tensor2 d = (-at(2) + 8.0 * at(1) - 8.0 * at(-1) + at(-2)) / (12.0 * h);
      div += d.col(j);
    }
    const Vec2 f = p.exact->body_force(x);
    worst = std::max(worst, (f + div).norm() / (1.0 + f.norm()));
  }
  return worst;
}

}  // namespace coupled_elast
