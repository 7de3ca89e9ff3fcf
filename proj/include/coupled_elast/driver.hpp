#pragma once

#include "coupled_elast/postprocess.hpp"
#include "coupled_elast/vtk.hpp"

#include <json.hpp>

#include <chrono>
#include <filesystem>
#include <sstream>

namespace coupled_elast {

/// One invocation of the driver.
struct RunConfig {
  std::string problem = "square";
  std::string config_path;  // JSON problem description; overrides `problem` when set
  MethodConfig method;
  int levels = 3;
  std::optional<RegionSpec> region;  // overrides the problem's minus region
  std::string out_dir;               // empty: no files
  bool vtk = false;
  bool check = false;
  bool sequential = false;
};

struct LevelResult {
  int level = 0;
  double h = 0.0;
  int dofs = 0;
  int free_dofs = 0;
  int minus_elements = 0;
  int plus_elements = 0;
  NormSet norms;
  std::vector<std::pair<std::string, double>> probes;
  double residual = 0.0;
  std::string backend;
  double seconds = 0.0;
};

struct RunResult {
  std::string problem;
  std::string method;
  std::vector<LevelResult> levels;

  std::vector<std::string> norm_columns() const {
    std::vector<std::string> out;
    if (levels.empty()) return out;
    for (const auto& [n, v] : levels.front().norms.values) out.push_back(n);
    return out;
  }
  std::vector<double> series(const std::string& norm) const {
    std::vector<double> e;
    for (const auto& l : levels) e.push_back(l.norms.get(norm));
    return e;
  }
  std::vector<double> h() const {
    std::vector<double> v;
    for (const auto& l : levels) v.push_back(l.h);
    return v;
  }
  std::vector<double> rates(const std::string& norm) const { return convergence_rates(h(), series(norm)); }
  double fitted_rate(const std::string& norm, int count = 3) const {
    return least_squares_rate(h(), series(norm), count);
  }
  double probe(int level, const std::string& name) const {
    for (const auto& [n, v] : levels.at(level).probes)
      if (n == name) return v;
    throw Error("probe '" + name + "' not recorded");
  }
};

inline ProblemSpec load_problem(const RunConfig& cfg) {
  return cfg.config_path.empty() ? make_problem(cfg.problem) : problem_from_file(cfg.config_path);
}

/// Discretizes, assembles, solves and measures one refinement level.
/// `solution_sink` (optional) receives the solved fields, e.g. for VTK output.
inline LevelResult run_level(const ProblemSpec& p, const RunConfig& cfg, int level,
                             const std::function<void(const DiscreteSolution&, const DGField*)>& solution_sink = {}) {
  const auto start = std::chrono::steady_clock::now();
  const Discretization d = discretize(p, cfg.method, level, cfg.region);
  AssemblyOptions aopt;
  aopt.sequential = cfg.sequential;
  const CoupledSystem sys = build_system(d, p.body_force, aopt);
  const SolveReport rep = solve(sys);
  const DiscreteSolution sol(d, rep.solution);
  std::optional<DGField> ustar;
  if (d.stress) ustar = postprocess_displacement(sol);

  LevelResult r;
  r.level = level;
  r.h = d.mesh.max_diameter();
  r.dofs = d.layout.size();
  r.free_dofs = d.num_free_dofs();
  r.minus_elements = static_cast<int>(d.partition.minus_elements().size());
  r.plus_elements = static_cast<int>(d.partition.plus_elements().size());
  if (p.exact) r.norms = error_norms(sol, *p.exact, ustar ? &*ustar : nullptr);
  for (const Probe& pr : p.probes) r.probes.emplace_back(pr.name, probe_value(sol, pr));
  r.residual = rep.relative_residual;
  r.backend = rep.backend;
  if (solution_sink) solution_sink(sol, ustar ? &*ustar : nullptr);
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return r;
}

// ---------------------------------------------------------------------------
// Reports.

inline std::string format_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6e", std::isfinite(v) ? v : 0.0);
  return buf;
}

/// CSV table: level, h, dofs, free_dofs, each norm with its consecutive rate, probes.
inline void write_csv(const RunResult& r, std::ostream& os) {
  const auto cols = r.norm_columns();
  os << "level,h,dofs,free_dofs";
  for (const auto& c : cols) os << ',' << c << ',' << c << "_rate";
  if (!r.levels.empty())
    for (const auto& [n, v] : r.levels.front().probes) os << ',' << n;
  os << '\n';
  std::vector<std::vector<double>> rates;
  for (const auto& c : cols) rates.push_back(r.rates(c));
  for (std::size_t i = 0; i < r.levels.size(); ++i) {
    const LevelResult& l = r.levels[i];
    os << l.level << ',' << format_number(l.h) << ',' << l.dofs << ',' << l.free_dofs;
    for (std::size_t c = 0; c < cols.size(); ++c)
      os << ',' << format_number(l.norms.get(cols[c])) << ',' << format_number(rates[c][i]);
    for (const auto& [n, v] : l.probes) os << ',' << format_number(v);
    os << '\n';
  }
}

inline nlohmann::json to_json(const RunResult& r) {
  nlohmann::json j;
  j["problem"] = r.problem;
  j["method"] = r.method;
  j["levels"] = nlohmann::json::array();
  for (const LevelResult& l : r.levels) {
    nlohmann::json e;
    e["level"] = l.level;
    e["h"] = l.h;
    e["dofs"] = l.dofs;
    e["free_dofs"] = l.free_dofs;
    e["minus_elements"] = l.minus_elements;
    e["plus_elements"] = l.plus_elements;
    e["relative_residual"] = l.residual;
    e["solver"] = l.backend;
    e["seconds"] = l.seconds;
    for (const auto& [n, v] : l.norms.values) e["norms"][n] = v;
    for (const auto& [n, v] : l.probes) e["probes"][n] = v;
    j["levels"].push_back(e);
  }
  for (const auto& c : r.norm_columns()) {
    j["rates"][c] = r.rates(c);
    j["fitted_rates"][c] = r.fitted_rate(c);
  }
  return j;
}

// ---------------------------------------------------------------------------
// Acceptance checks for --check.

struct CheckOutcome {
  std::string name;
  double value = 0.0;
  double target = 0.0;
  double tolerance = 0.0;
  bool pass = false;
};

namespace detail {

inline CheckOutcome rate_check(const RunResult& r, const std::string& norm, double target, double tol) {
  CheckOutcome c{norm + " fitted rate", r.fitted_rate(norm), target, tol, false};
  c.pass = std::abs(c.value - target) <= tol;
  return c;
}

}  // namespace detail

/// Expectations by problem kind: smooth exact solutions check the fitted rates
/// implied by the method degrees, singular ones the global stress rate, patch
/// problems exactness, and problems without exact solution probe self-convergence.
inline std::vector<CheckOutcome> check_run(const ProblemSpec& p, const MethodConfig& method, const RunResult& r) {
  std::vector<CheckOutcome> out;
  if (r.levels.empty()) return out;
  if (p.name == "patch") {
    for (const auto& l : r.levels)
      for (const auto& [n, v] : l.norms.values) {
        CheckOutcome c{n + " level " + std::to_string(l.level), v, 0.0, 1e-9, v <= 1e-9};
        out.push_back(c);
      }
    return out;
  }
  if (!p.exact) {
    if (r.levels.size() < 3) return out;
    for (const auto& [name, v] : r.levels.front().probes) {
      const std::size_t n = r.levels.size();
      const double a = r.probe(n - 3, name), b = r.probe(n - 2, name), c = r.probe(n - 1, name);
      CheckOutcome o{name + " change decreasing", std::abs(c - b), std::abs(b - a), 0.0, false};
      o.pass = std::abs(c - b) < std::abs(b - a);
      out.push_back(o);
    }
    return out;
  }
  if (r.levels.size() < 2) return out;
  if (p.singular_stress_rate) {
    out.push_back(detail::rate_check(r, "stress_l2", *p.singular_stress_rate, 0.10));
    return out;
  }
  const int k = method.k, m = method.m;
  using K = MethodConfig::Kind;
  if (method.kind != K::huzhang) {
    const int pm = method.kind == K::lagrange ? m : std::min(m, k + 1);
    out.push_back(detail::rate_check(r, "u_plus_l2", pm + 1, 0.3));
    out.push_back(detail::rate_check(r, "u_plus_energy", pm, 0.3));
  }
  if (method.kind != K::lagrange) {
    const int ps = method.kind == K::huzhang ? k + 1 : std::min(k + 1, m);
    out.push_back(detail::rate_check(r, "sigma_l2", ps, 0.3));
    out.push_back(detail::rate_check(r, "u_minus_l2", std::min(k, ps), 0.3));
    if (ps == k + 1) {
      out.push_back(detail::rate_check(r, "qu_minus_l2", k + 2, 0.4));
      out.push_back(detail::rate_check(r, "ustar_l2", k + 2, 0.4));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

/// Runs levels 0..levels-1 and writes CSV/JSON (and VTK) when an output directory is set.
inline RunResult run(const RunConfig& cfg, std::vector<CheckOutcome>* checks = nullptr) {
  if (cfg.levels < 1) throw ConfigError("levels must be >= 1");
  const ProblemSpec p = load_problem(cfg);
  RunResult r;
  r.problem = p.name;
  r.method = cfg.method.name();
  namespace fs = std::filesystem;
  if (!cfg.out_dir.empty()) fs::create_directories(cfg.out_dir);
  for (int l = 0; l < cfg.levels; ++l) {
    std::function<void(const DiscreteSolution&, const DGField*)> sink;
    if (cfg.vtk && !cfg.out_dir.empty()) {
      sink = [&, l](const DiscreteSolution& sol, const DGField* us) {
        const std::string base = (fs::path(cfg.out_dir) / ("level" + std::to_string(l))).string();
        write_vtk_file(base + "_mesh.vtk", [&](std::ostream& os) {
          write_vtk_mesh(sol.discretization().mesh, sol.discretization().partition, os);
        });
        write_vtk_file(base + "_solution.vtk", [&](std::ostream& os) { write_vtk_solution(sol, us, os); });
      };
    }
    r.levels.push_back(run_level(p, cfg, l, sink));
  }
  std::vector<CheckOutcome> outcomes;
  if (cfg.check) outcomes = check_run(p, cfg.method, r);
  if (!cfg.out_dir.empty()) {
    std::ofstream csv(fs::path(cfg.out_dir) / "convergence.csv");
    write_csv(r, csv);
    nlohmann::json j = to_json(r);
    for (const auto& c : outcomes)
      j["checks"].push_back({{"name", c.name}, {"value", c.value}, {"target", c.target},
                             {"tolerance", c.tolerance}, {"pass", c.pass}});
    std::ofstream js(fs::path(cfg.out_dir) / "summary.json");
    js << j.dump(2) << '\n';
  }
  if (checks) *checks = std::move(outcomes);
  return r;
}

/// Side-by-side table keyed by level: DOFs and one norm per run.
inline void write_comparison(const std::vector<RunResult>& runs, const std::string& norm, std::ostream& os) {
  if (runs.size() < 2) throw ConfigError("compare needs at least two configurations");
  os << "level";
  for (std::size_t i = 0; i < runs.size(); ++i) {
    const std::string tag = runs[i].method + "#" + std::to_string(i + 1);
    os << ',' << tag << "_dofs," << tag << '_' << norm;
  }
  os << '\n';
  std::size_t n = runs.front().levels.size();
  for (const auto& r : runs) n = std::min(n, r.levels.size());
  for (std::size_t l = 0; l < n; ++l) {
    os << l;
    for (const auto& r : runs) {
      const LevelResult& lv = r.levels[l];
      os << ',' << lv.dofs << ',' << format_number(lv.norms.has(norm) ? lv.norms.get(norm) : 0.0);
    }
    os << '\n';
  }
}

/// Parses "x0,y0,x1,y1" / "x,y".
inline std::vector<double> parse_numbers(const std::string& s, std::size_t expected, const char* what) {
  std::vector<double> v;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      v.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ConfigError(std::string(what) + ": cannot parse '" + s + "'");
    }
  }
  if (v.size() != expected) throw ConfigError(std::string(what) + ": expected " + std::to_string(expected) + " numbers");
  return v;
}

}  // namespace coupled_elast
