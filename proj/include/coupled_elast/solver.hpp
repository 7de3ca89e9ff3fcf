#pragma once

#include "coupled_elast/assembly.hpp"

#include <Eigen/SparseLU>
#ifdef COUPLED_ELAST_HAVE_UMFPACK
#include <Eigen/UmfPackSupport>
#endif

#include <chrono>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

namespace coupled_elast {

struct SolveReport {
  Eigen::VectorXd solution;
  BlockLayout layout;
  double relative_residual = 0.0;
  std::string backend;
  int refinement_steps = 0;
  long long nonzeros = 0;
  double factor_seconds = 0.0;

  Eigen::Ref<const Eigen::VectorXd> sigma() const { return solution.segment(layout.sigma_offset(), layout.n_sigma); }
  Eigen::Ref<const Eigen::VectorXd> u_minus() const {
    return solution.segment(layout.u_minus_offset(), layout.n_u_minus);
  }
  Eigen::Ref<const Eigen::VectorXd> u_plus() const { return solution.segment(layout.u_plus_offset(), layout.n_u_plus); }
};

struct SolverOptions {
  double tolerance = 1e-10;
  int max_refinement = 3;
  bool force_sparse_lu = false;
};

namespace detail {

inline double relative_residual(const Eigen::SparseMatrix<double>& a, const Eigen::VectorXd& x,
                                const Eigen::VectorXd& b) {
  const double nb = b.norm();
  const double nr = (a * x - b).norm();
  if (nb == 0.0) return nr;
  return nr / nb;
}

template <class Factor>
SolveReport solve_with(Factor& lu, const Eigen::SparseMatrix<double>& a, const Eigen::VectorXd& b,
                       const SolverOptions& opt) {
  SolveReport rep;
  Eigen::VectorXd x = lu.solve(b);
  if (lu.info() != Eigen::Success || !x.allFinite()) throw SolverError("triangular solve failed");
  rep.relative_residual = relative_residual(a, x, b);
  while (rep.relative_residual > 0.01 * opt.tolerance && rep.refinement_steps < opt.max_refinement) {
    const Eigen::VectorXd r = b - a * x;
    const Eigen::VectorXd dx = lu.solve(r);
    const Eigen::VectorXd trial = x + dx;
    const double res = relative_residual(a, trial, b);
    ++rep.refinement_steps;
    if (!(res < rep.relative_residual)) break;
    x = trial;
    rep.relative_residual = res;
  }
  rep.solution = std::move(x);
  return rep;
}

}  // namespace detail

/// Direct solve of an assembled, constrained system with a few steps of
/// iterative refinement. Throws SolverError when the factorization breaks down
/// or the relative residual exceeds the tolerance.
inline SolveReport solve(const Eigen::SparseMatrix<double>& a, const Eigen::VectorXd& b,
                         const SolverOptions& opt = {}) {
  if (a.rows() != a.cols() || a.rows() != b.size()) throw SolverError("dimension mismatch");
  SolveReport rep;
  if (a.rows() == 0) return rep;
  if (b.squaredNorm() == 0.0) {
    rep.solution = Eigen::VectorXd::Zero(b.size());
    rep.backend = "trivial";
    rep.nonzeros = a.nonZeros();
    return rep;
  }
  const auto start = std::chrono::steady_clock::now();
  auto seconds = [&] { return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count(); };
  bool done = false;
#ifdef COUPLED_ELAST_HAVE_UMFPACK
  if (!opt.force_sparse_lu) {
    Eigen::UmfPackLU<Eigen::SparseMatrix<double>> lu;
    lu.compute(a);
    if (lu.info() == Eigen::Success) {
      rep = detail::solve_with(lu, a, b, opt);
      rep.backend = "umfpack";
      done = true;
    }
  }
#endif
  if (!done) {
    Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> lu;
    lu.compute(a);
    if (lu.info() != Eigen::Success)
      throw SolverError("sparse LU factorization failed: " + lu.lastErrorMessage());
    rep = detail::solve_with(lu, a, b, opt);
    rep.backend = "sparselu";
  }
  rep.factor_seconds = seconds();
  rep.nonzeros = a.nonZeros();
  if (!(rep.relative_residual <= opt.tolerance)) {
    std::ostringstream os;
    os << "relative residual " << std::scientific << rep.relative_residual << " exceeds " << opt.tolerance
       << " (" << rep.backend << ")";
    throw SolverError(os.str());
  }
  return rep;
}

inline SolveReport solve(const CoupledSystem& sys, const SolverOptions& opt = {}) {
  SolveReport rep = solve(sys.matrix, sys.rhs, opt);
  if (rep.solution.size() == 0) rep.solution = Eigen::VectorXd::Zero(sys.rhs.size());
  rep.layout = sys.layout;
  return rep;
}

/// MatrixMarket coordinate (general, real) export.
inline void write_matrix_market(const Eigen::SparseMatrix<double>& a, std::ostream& os) {
  os << "%%MatrixMarket matrix coordinate real general\n";
  os << a.rows() << ' ' << a.cols() << ' ' << a.nonZeros() << '\n';
  os << std::setprecision(17);
  for (int k = 0; k < a.outerSize(); ++k)
    for (Eigen::SparseMatrix<double>::InnerIterator it(a, k); it; ++it)
      os << it.row() + 1 << ' ' << it.col() + 1 << ' ' << it.value() << '\n';
}

inline void write_matrix_market(const Eigen::SparseMatrix<double>& a, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw Error("cannot open " + path);
  write_matrix_market(a, os);
}

}  // namespace coupled_elast
