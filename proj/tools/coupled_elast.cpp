// Command-line driver: run a (problem, method, levels) study or compare methods.

#include "coupled_elast.hpp"

#include <CLI11.hpp>

#include <iostream>

namespace ce = coupled_elast;

namespace {

struct Options {
  std::string problem = "square";
  std::string config;
  std::vector<std::string> methods{"hz3+l4"};
  int levels = 3;
  std::string box;
  int layers = 0;
  std::string seed_point;
  std::string out;
  std::string norm = "stress_l2";
  bool vtk = false;
  bool check = false;
  bool sequential = false;
};

void add_common(CLI::App* app, Options& o) {
  app->add_option("--problem", o.problem, "builtin problem: square, lshape, cook, patch");
  app->add_option("--config", o.config, "JSON problem description");
  app->add_option("--levels", o.levels, "number of refinement levels (starting at 0)");
  app->add_option("--box", o.box, "minus region box x0,y0,x1,y1");
  app->add_option("--layers", o.layers, "minus region: element layers around the seed");
  app->add_option("--seed-point", o.seed_point, "seed point x,y for --layers");
  app->add_option("--out", o.out, "output directory");
  app->add_flag("--sequential", o.sequential, "single-threaded assembly");
}

ce::RunConfig make_config(const Options& o, const std::string& method) {
  ce::RunConfig c;
  c.problem = o.problem;
  c.config_path = o.config;
  c.method = ce::MethodConfig::parse(method);
  c.levels = o.levels;
  c.out_dir = o.out;
  c.vtk = o.vtk;
  c.check = o.check;
  c.sequential = o.sequential;
  if (!o.box.empty() && o.layers > 0) throw ce::ConfigError("--box and --layers are mutually exclusive");
  if (!o.box.empty()) {
    const auto b = ce::parse_numbers(o.box, 4, "--box");
    c.region = ce::BoxRegion{{b[0], b[1]}, {b[2], b[3]}};
  } else if (o.layers > 0 || !o.seed_point.empty()) {
    ce::Seed seed = ce::PointSeed{{0.0, 0.0}};
    if (!o.seed_point.empty()) {
      const auto s = ce::parse_numbers(o.seed_point, 2, "--seed-point");
      seed = ce::PointSeed{{s[0], s[1]}};
    } else {
      const ce::ProblemSpec p = ce::load_problem(c);
      if (const auto* l = std::get_if<ce::LayerRegion>(&p.region)) seed = l->seed;
    }
    c.region = ce::LayerRegion{seed, std::max(1, o.layers)};
  }
  return c;
}

void print_table(const ce::RunResult& r) {
  ce::write_csv(r, std::cout);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Coupled Hu-Zhang / Lagrange linear elasticity solver"};
  app.require_subcommand(1);
  Options o;

  auto* run = app.add_subcommand("run", "run a convergence study");
  add_common(run, o);
  run->add_option("--method", o.methods.front(), "hz{k}+l{m}, lagrange{m} or hz{k}");
  run->add_flag("--vtk", o.vtk, "write VTK files per level (needs --out)");
  run->add_flag("--check", o.check, "exit 4 unless the expected rates are met");

  std::vector<std::string> compare_methods;
  auto* cmp = app.add_subcommand("compare", "compare methods level by level");
  add_common(cmp, o);
  cmp->add_option("--method", compare_methods, "method (repeat for each configuration)")->required();
  cmp->add_option("--norm", o.norm, "norm column to compare");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (run->parsed()) {
      std::vector<ce::CheckOutcome> checks;
      const ce::RunResult r = ce::run(make_config(o, o.methods.front()), &checks);
      print_table(r);
      bool ok = true;
      for (const auto& c : checks) {
        std::cout << (c.pass ? "PASS " : "FAIL ") << c.name << " = " << ce::format_number(c.value)
                  << " (target " << ce::format_number(c.target) << " +/- " << ce::format_number(c.tolerance)
                  << ")\n";
        ok = ok && c.pass;
      }
      return ok ? 0 : 4;
    }
    std::vector<ce::RunResult> runs;
    const std::string out = o.out;
    for (std::size_t i = 0; i < compare_methods.size(); ++i) {
      Options oi = o;
      oi.out = out.empty() ? "" : out + "/" + std::to_string(i + 1) + "_" + compare_methods[i];
      runs.push_back(ce::run(make_config(oi, compare_methods[i])));
    }
    ce::write_comparison(runs, o.norm, std::cout);
    if (!out.empty()) {
      std::ofstream os(std::filesystem::path(out) / "comparison.csv");
      ce::write_comparison(runs, o.norm, os);
    }
    return 0;
  } catch (const ce::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const ce::SolverError& e) {
    std::cerr << "solver failure: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  }
}
