#pragma once

#include "coupled_elast/postprocess.hpp"

#include <cstdio>
#include <fstream>

namespace coupled_elast {

namespace detail {

inline void vtk_header(std::ostream& os, const std::string& title) {
  os << "# vtk DataFile Version 3.0\n" << title << "\nASCII\nDATASET UNSTRUCTURED_GRID\n";
}

inline void vtk_number(std::ostream& os, double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9e", std::isfinite(v) ? v : 0.0);
  os << buf;
}

}  // namespace detail

/// Connected mesh with the subdomain tag as cell data.
inline void write_vtk_mesh(const Mesh& m, const SubdomainPartition& part, std::ostream& os) {
  detail::vtk_header(os, "coupled_elast mesh");
  os << "POINTS " << m.num_vertices() << " double\n";
  for (const Point& p : m.vertices()) {
    detail::vtk_number(os, p.x());
    os << ' ';
    detail::vtk_number(os, p.y());
    os << " 0\n";
  }
  os << "CELLS " << m.num_triangles() << ' ' << 4 * m.num_triangles() << '\n';
  for (const auto& t : m.triangles()) os << "3 " << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
  os << "CELL_TYPES " << m.num_triangles() << '\n';
  for (int t = 0; t < m.num_triangles(); ++t) os << "5\n";
  os << "CELL_DATA " << m.num_triangles() << "\nSCALARS subdomain int 1\nLOOKUP_TABLE default\n";
  for (int t = 0; t < m.num_triangles(); ++t) os << (part.is_minus(t) ? 1 : 0) << '\n';
}

/// Solution on an exploded copy of the mesh (three private points per
/// triangle) so element-wise discontinuities stay visible. Point data:
/// displacement, post-processed displacement (u* on minus, u_h+ on plus) and
/// stress components; cell data: subdomain tag and element-average stress.
inline void write_vtk_solution(const DiscreteSolution& sol, const DGField* ustar, std::ostream& os) {
  const Discretization& d = sol.discretization();
  const Mesh& m = d.mesh;
  const int nt = m.num_triangles();
  detail::vtk_header(os, "coupled_elast solution " + d.method.name());
  os << "POINTS " << 3 * nt << " double\n";
  for (int t = 0; t < nt; ++t)
    for (int v : m.triangle(t)) {
      detail::vtk_number(os, m.vertex(v).x());
      os << ' ';
      detail::vtk_number(os, m.vertex(v).y());
      os << " 0\n";
    }
  os << "CELLS " << nt << ' ' << 4 * nt << '\n';
  for (int t = 0; t < nt; ++t) os << "3 " << 3 * t << ' ' << 3 * t + 1 << ' ' << 3 * t + 2 << '\n';
  os << "CELL_TYPES " << nt << '\n';
  for (int t = 0; t < nt; ++t) os << "5\n";

  std::vector<Vec2> u(3 * nt), us(3 * nt);
  std::vector<Tensor2> s(3 * nt);
  for (int t = 0; t < nt; ++t)
    for (int i = 0; i < 3; ++i) {
      const Eigen::Vector3d lam = Eigen::Vector3d::Unit(i);
      u[3 * t + i] = sol.displacement(t, lam);
      s[3 * t + i] = sol.stress(t, lam);
      us[3 * t + i] = (ustar && d.partition.is_minus(t)) ? ustar->value(t, lam) : u[3 * t + i];
    }
  auto vectors = [&](const char* name, const std::vector<Vec2>& f) {
    os << "VECTORS " << name << " double\n";
    for (const Vec2& v : f) {
      detail::vtk_number(os, v.x());
      os << ' ';
      detail::vtk_number(os, v.y());
      os << " 0\n";
    }
  };
  auto scalars = [&](const char* name, auto&& get, int count) {
    os << "SCALARS " << name << " double 1\nLOOKUP_TABLE default\n";
    for (int i = 0; i < count; ++i) {
      detail::vtk_number(os, get(i));
      os << '\n';
    }
  };
  os << "POINT_DATA " << 3 * nt << '\n';
  vectors("displacement", u);
  vectors("displacement_post", us);
  scalars("sigma_xx", [&](int i) { return s[i](0, 0); }, 3 * nt);
  scalars("sigma_xy", [&](int i) { return s[i](0, 1); }, 3 * nt);
  scalars("sigma_yy", [&](int i) { return s[i](1, 1); }, 3 * nt);
  os << "CELL_DATA " << nt << "\nSCALARS subdomain int 1\nLOOKUP_TABLE default\n";
  for (int t = 0; t < nt; ++t) os << (d.partition.is_minus(t) ? 1 : 0) << '\n';
  const Eigen::Vector3d centroid = Eigen::Vector3d::Constant(1.0 / 3.0);
  std::vector<Tensor2> sc(nt);
  for (int t = 0; t < nt; ++t) sc[t] = sol.stress(t, centroid);
  scalars("sigma_xx_centroid", [&](int t) { return sc[t](0, 0); }, nt);
  scalars("sigma_xy_centroid", [&](int t) { return sc[t](0, 1); }, nt);
  scalars("sigma_yy_centroid", [&](int t) { return sc[t](1, 1); }, nt);
}

inline void write_vtk_file(const std::string& path, const std::function<void(std::ostream&)>& body) {
  std::ofstream os(path);
  if (!os) throw Error("cannot open " + path);
  body(os);
}

}  // namespace coupled_elast
