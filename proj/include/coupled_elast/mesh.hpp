#pragma once

#include "coupled_elast/core.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <numbers>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <vector>

namespace coupled_elast {

/// Triangle-local edge e joins local vertices (e+1)%3 and (e+2)%3, i.e. it is
/// opposite local vertex e.
constexpr std::array<int, 2> local_edge_vertices(int e) { return {(e + 1) % 3, (e + 2) % 3}; }

struct Edge {
  std::array<int, 2> v{};                 // v[0] < v[1]
  std::array<int, 2> elements{-1, -1};    // incident triangles, ascending; [1] = -1 on the boundary
  bool boundary() const { return elements[1] < 0; }
};

/// Conforming triangulation with edge topology. Immutable after construction.
class Mesh {
 public:
  Mesh() = default;

  Mesh(std::vector<Point> vertices, std::vector<std::array<int, 3>> triangles)
      : vertices_(std::move(vertices)), triangles_(std::move(triangles)) {
    build();
  }

  int num_vertices() const { return static_cast<int>(vertices_.size()); }
  int num_triangles() const { return static_cast<int>(triangles_.size()); }
  int num_edges() const { return static_cast<int>(edges_.size()); }

  const Point& vertex(int v) const { return vertices_[v]; }
  const std::vector<Point>& vertices() const { return vertices_; }
  const std::array<int, 3>& triangle(int t) const { return triangles_[t]; }
  const std::vector<std::array<int, 3>>& triangles() const { return triangles_; }
  /// Global edge ids of triangle t, indexed by the local edge convention.
  const std::array<int, 3>& triangle_edges(int t) const { return triangle_edges_[t]; }
  const Edge& edge(int e) const { return edges_[e]; }

  /// Unit normal n_F. Interior edges: points from the incident triangle of
  /// larger index to the smaller one. Boundary edges: outward.
  const Vec2& edge_normal(int e) const { return normals_[e]; }
  /// t_F = n_F rotated by +90 degrees.
  Vec2 edge_tangent(int e) const { return rotate_ccw(normals_[e]); }
  double edge_length(int e) const { return (vertices_[edges_[e].v[1]] - vertices_[edges_[e].v[0]]).norm(); }

  double area(int t) const {
    const auto& tri = triangles_[t];
    return 0.5 * cross(vertices_[tri[1]] - vertices_[tri[0]], vertices_[tri[2]] - vertices_[tri[0]]);
  }
  double diameter(int t) const {
    const auto& tri = triangles_[t];
    double h = 0.0;
    for (int e = 0; e < 3; ++e) {
      auto [a, b] = local_edge_vertices(e);
      h = std::max(h, (vertices_[tri[a]] - vertices_[tri[b]]).norm());
    }
    return h;
  }
  double max_diameter() const {
    double h = 0.0;
    for (int t = 0; t < num_triangles(); ++t) h = std::max(h, diameter(t));
    return h;
  }
  Point barycenter(int t) const {
    const auto& tri = triangles_[t];
    return (vertices_[tri[0]] + vertices_[tri[1]] + vertices_[tri[2]]) / 3.0;
  }
  /// Smallest interior angle (radians) over all triangles.
  double min_angle() const {
    double best = std::numbers::pi;
    for (const auto& tri : triangles_) {
      for (int i = 0; i < 3; ++i) {
        Vec2 a = vertices_[tri[(i + 1) % 3]] - vertices_[tri[i]];
        Vec2 b = vertices_[tri[(i + 2) % 3]] - vertices_[tri[i]];
        best = std::min(best, std::acos(std::clamp(a.dot(b) / (a.norm() * b.norm()), -1.0, 1.0)));
      }
    }
    return best;
  }

  /// Local index (0..2) of global vertex v in triangle t, or -1.
  int local_vertex(int t, int v) const {
    for (int i = 0; i < 3; ++i)
      if (triangles_[t][i] == v) return i;
    return -1;
  }
  /// Local edge index (0..2) of global edge e in triangle t, or -1.
  int local_edge(int t, int e) const {
    for (int i = 0; i < 3; ++i)
      if (triangle_edges_[t][i] == e) return i;
    return -1;
  }
  /// Outward unit normal of triangle t on its local edge le.
  Vec2 outward_normal(int t, int le) const {
    auto [a, b] = local_edge_vertices(le);
    Vec2 d = vertices_[triangles_[t][b]] - vertices_[triangles_[t][a]];
    return Vec2(d.y(), -d.x()).normalized();
  }

  std::span<const int> vertex_triangles(int v) const {
    return {vertex_tri_.data() + vertex_tri_offset_[v],
            static_cast<std::size_t>(vertex_tri_offset_[v + 1] - vertex_tri_offset_[v])};
  }
  bool is_boundary_vertex(int v) const { return boundary_vertex_[v]; }
  std::vector<int> boundary_edges() const {
    std::vector<int> out;
    for (int e = 0; e < num_edges(); ++e)
      if (edges_[e].boundary()) out.push_back(e);
    return out;
  }

  /// Index of the vertex within `tol` of p, or -1.
  int find_vertex(const Point& p, double tol = 1e-12) const {
    for (int v = 0; v < num_vertices(); ++v)
      if ((vertices_[v] - p).norm() <= tol) return v;
    return -1;
  }

  double total_area() const {
    double a = 0.0;
    for (int t = 0; t < num_triangles(); ++t) a += area(t);
    return a;
  }

 private:
  void build() {
    const int nv = num_vertices();
    for (int t = 0; t < num_triangles(); ++t) {
      for (int i : triangles_[t])
        if (i < 0 || i >= nv) throw ConfigError("triangle " + std::to_string(t) + " references a missing vertex");
      if (!(area(t) > 0.0))
        throw ConfigError("triangle " + std::to_string(t) + " has non-positive signed area");
    }

    // Edges sorted lexicographically by (low, high) vertex pair.
    std::vector<std::array<int, 4>> half;  // low, high, triangle, local edge
    half.reserve(3 * triangles_.size());
    for (int t = 0; t < num_triangles(); ++t) {
      for (int e = 0; e < 3; ++e) {
        auto [a, b] = local_edge_vertices(e);
        int va = triangles_[t][a], vb = triangles_[t][b];
        half.push_back({std::min(va, vb), std::max(va, vb), t, e});
      }
    }
    std::sort(half.begin(), half.end());
    triangle_edges_.assign(triangles_.size(), {-1, -1, -1});
    for (std::size_t i = 0; i < half.size();) {
      std::size_t j = i;
      while (j < half.size() && half[j][0] == half[i][0] && half[j][1] == half[i][1]) ++j;
      if (j - i > 2) throw ConfigError("non-manifold edge in mesh");
      Edge edge;
      edge.v = {half[i][0], half[i][1]};
      const int id = static_cast<int>(edges_.size());
      for (std::size_t q = i; q < j; ++q) {
        edge.elements[q - i] = half[q][2];
        triangle_edges_[half[q][2]][half[q][3]] = id;
      }
      if (edge.elements[1] >= 0 && edge.elements[1] < edge.elements[0]) std::swap(edge.elements[0], edge.elements[1]);
      edges_.push_back(edge);
      i = j;
    }

    normals_.resize(edges_.size());
    boundary_vertex_.assign(nv, false);
    for (int e = 0; e < num_edges(); ++e) {
      const Edge& edge = edges_[e];
      // Outward normal of the larger-index element points towards the smaller one.
      const int owner = edge.boundary() ? edge.elements[0] : edge.elements[1];
      normals_[e] = outward_normal(owner, local_edge(owner, e));
      if (edge.boundary()) boundary_vertex_[edge.v[0]] = boundary_vertex_[edge.v[1]] = true;
    }

    vertex_tri_offset_.assign(nv + 1, 0);
    for (const auto& tri : triangles_)
      for (int v : tri) ++vertex_tri_offset_[v + 1];
    for (int v = 0; v < nv; ++v) vertex_tri_offset_[v + 1] += vertex_tri_offset_[v];
    vertex_tri_.resize(vertex_tri_offset_[nv]);
    std::vector<int> fill(vertex_tri_offset_.begin(), vertex_tri_offset_.end() - 1);
    for (int t = 0; t < num_triangles(); ++t)
      for (int v : triangles_[t]) vertex_tri_[fill[v]++] = t;
  }

  std::vector<Point> vertices_;
  std::vector<std::array<int, 3>> triangles_;
  std::vector<std::array<int, 3>> triangle_edges_;
  std::vector<Edge> edges_;
  std::vector<Vec2> normals_;
  std::vector<bool> boundary_vertex_;
  std::vector<int> vertex_tri_offset_;
  std::vector<int> vertex_tri_;
};

namespace detail {

/// Vertex list with coordinate deduplication (absolute tolerance 1e-12).
class VertexPool {
 public:
  int add(const Point& p) {
    auto key = std::make_pair(std::llround(p.x() * 1e9), std::llround(p.y() * 1e9));
    auto [lo, hi] = index_.equal_range(key);
    for (auto it = lo; it != hi; ++it)
      if ((points_[it->second] - p).norm() <= 1e-12) return it->second;
    for (long long dx = -1; dx <= 1; ++dx)
      for (long long dy = -1; dy <= 1; ++dy) {
        auto [l2, h2] = index_.equal_range({key.first + dx, key.second + dy});
        for (auto it = l2; it != h2; ++it)
          if ((points_[it->second] - p).norm() <= 1e-12) return it->second;
      }
    index_.emplace(key, static_cast<int>(points_.size()));
    points_.push_back(p);
    return static_cast<int>(points_.size()) - 1;
  }
  std::vector<Point> take() { return std::move(points_); }

 private:
  std::vector<Point> points_;
  std::multimap<std::pair<long long, long long>, int> index_;
};

}  // namespace detail

/// Unit square split into n x n cells, each cut by its north-east diagonal.
inline Mesh build_structured_square(int n) {
  if (n < 1) throw ConfigError("build_structured_square: n must be >= 1");
  std::vector<Point> v;
  for (int j = 0; j <= n; ++j)
    for (int i = 0; i <= n; ++i) v.emplace_back(double(i) / n, double(j) / n);
  auto id = [n](int i, int j) { return j * (n + 1) + i; };
  std::vector<std::array<int, 3>> t;
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      t.push_back({id(i, j), id(i + 1, j), id(i + 1, j + 1)});
      t.push_back({id(i, j), id(i + 1, j + 1), id(i, j + 1)});
    }
  return Mesh(std::move(v), std::move(t));
}

/// L-shaped domain (-1,1)^2 \ ((0,1)x(-1,0)): three unit squares, each cut by
/// both diagonals into four congruent right triangles.
inline Mesh build_lshape_mesh() {
  detail::VertexPool pool;
  std::vector<std::array<int, 3>> t;
  const std::array<Point, 3> lower_left = {Point(-1, -1), Point(-1, 0), Point(0, 0)};
  for (const Point& o : lower_left) {
    const std::array<Point, 4> c = {o, o + Point(1, 0), o + Point(1, 1), o + Point(0, 1)};
    const int center = pool.add(o + Point(0.5, 0.5));
    for (int s = 0; s < 4; ++s) t.push_back({pool.add(c[s]), pool.add(c[(s + 1) % 4]), center});
  }
  return Mesh(pool.take(), std::move(t));
}

/// Cook's tapered plate, hull of (0,0), (48,44), (48,60), (0,44), with the
/// inclusion triangle (12,20.25), (36,38.75), (36,50.25) resolved by mesh edges.
///
/// The plate is the bilinear image of a 4x4 grid of the unit square; in those
/// coordinates the inclusion is (1/4,1/4), (3/4,1/4), (3/4,3/4). The image of
/// the grid point (1/2,1/2) is moved onto the straight inclusion side so the
/// four inclusion triangles tile it exactly.
inline Mesh build_cook_mesh() {
  constexpr int n = 4;
  auto map = [](double s, double r) {
    const double x = 48.0 * s;
    const double bottom = 44.0 * s;
    const double top = 44.0 + 16.0 * s;
    return Point(x, bottom + r * (top - bottom));
  };
  std::vector<Point> v;
  for (int j = 0; j <= n; ++j)
    for (int i = 0; i <= n; ++i) v.push_back(map(double(i) / n, double(j) / n));
  auto id = [](int i, int j) { return j * (n + 1) + i; };
  v[id(2, 2)] = 0.5 * (Point(12.0, 20.25) + Point(36.0, 50.25));
  std::vector<std::array<int, 3>> t;
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      t.push_back({id(i, j), id(i + 1, j), id(i + 1, j + 1)});
      t.push_back({id(i, j), id(i + 1, j + 1), id(i, j + 1)});
    }
  return Mesh(std::move(v), std::move(t));
}

/// Red refinement: every triangle is split into four by its edge midpoints.
/// Child ordering for parent (a,b,c): (a,ab,ca), (ab,b,bc), (ca,bc,c), (ab,bc,ca).
inline Mesh uniform_refine(const Mesh& m) {
  std::vector<Point> v = m.vertices();
  const int nv = m.num_vertices();
  v.reserve(nv + m.num_edges());
  for (int e = 0; e < m.num_edges(); ++e) v.push_back(0.5 * (m.vertex(m.edge(e).v[0]) + m.vertex(m.edge(e).v[1])));
  std::vector<std::array<int, 3>> t;
  t.reserve(4 * m.num_triangles());
  for (int k = 0; k < m.num_triangles(); ++k) {
    const auto& tri = m.triangle(k);
    const auto& te = m.triangle_edges(k);
    const int a = tri[0], b = tri[1], c = tri[2];
    const int bc = nv + te[0], ca = nv + te[1], ab = nv + te[2];
    t.push_back({a, ab, ca});
    t.push_back({ab, b, bc});
    t.push_back({ca, bc, c});
    t.push_back({ab, bc, ca});
  }
  return Mesh(std::move(v), std::move(t));
}

inline Mesh refine_times(Mesh m, int levels) {
  for (int i = 0; i < levels; ++i) m = uniform_refine(m);
  return m;
}

// ---------------------------------------------------------------------------
// ASCII mesh format:
//   triangles 2D
//   V E T
//   x y            (V lines)
//   a b c          (T lines, 0-based, counterclockwise)

inline void write_mesh_ascii(const Mesh& m, std::ostream& os) {
  os << "triangles 2D\n" << m.num_vertices() << ' ' << m.num_edges() << ' ' << m.num_triangles() << '\n';
  os.precision(17);
  for (const Point& p : m.vertices()) os << p.x() << ' ' << p.y() << '\n';
  for (const auto& t : m.triangles()) os << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
}

inline Mesh read_mesh_ascii(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line.rfind("triangles 2D", 0) != 0)
    throw ConfigError("mesh file: expected header 'triangles 2D'");
  long nv = -1, ne = -1, nt = -1;
  if (!(is >> nv >> ne >> nt) || nv < 3 || nt < 1 || ne < 0) throw ConfigError("mesh file: bad 'V E T' line");
  std::vector<Point> v(nv);
  for (auto& p : v)
    if (!(is >> p.x() >> p.y())) throw ConfigError("mesh file: truncated vertex block");
  std::vector<std::array<int, 3>> t(nt);
  for (auto& tri : t)
    if (!(is >> tri[0] >> tri[1] >> tri[2])) throw ConfigError("mesh file: truncated triangle block");
  Mesh m(std::move(v), std::move(t));
  if (m.num_edges() != ne)
    throw ConfigError("mesh file: edge count " + std::to_string(ne) + " does not match topology (" +
                      std::to_string(m.num_edges()) + ")");
  return m;
}

inline Mesh read_mesh_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open mesh file " + path);
  return read_mesh_ascii(in);
}

}  // namespace coupled_elast
