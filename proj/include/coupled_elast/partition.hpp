#pragma once

#include "coupled_elast/mesh.hpp"

#include <functional>
#include <variant>

namespace coupled_elast {

enum class Side : unsigned char { plus, minus };

/// Edge of the interface between the primal (plus) and mixed (minus) regions.
struct InterfaceEdge {
  int edge = -1;
  int minus_element = -1;
  int plus_element = -1;
  Vec2 normal_minus;  // unit normal pointing from the minus side into the plus side
};

/// Element tags and the derived interface / exterior-boundary edge sets.
class SubdomainPartition {
 public:
  SubdomainPartition() = default;

  SubdomainPartition(const Mesh& mesh, std::vector<Side> tags) : tags_(std::move(tags)) {
    if (static_cast<int>(tags_.size()) != mesh.num_triangles())
      throw ConfigError("partition: tag count does not match triangle count");
    for (int e = 0; e < mesh.num_edges(); ++e) {
      const Edge& edge = mesh.edge(e);
      if (edge.boundary()) {
        (tags_[edge.elements[0]] == Side::minus ? gamma_minus_ : gamma_plus_).push_back(e);
        continue;
      }
      const Side s0 = tags_[edge.elements[0]], s1 = tags_[edge.elements[1]];
      if (s0 == s1) continue;
      InterfaceEdge ie;
      ie.edge = e;
      ie.minus_element = s0 == Side::minus ? edge.elements[0] : edge.elements[1];
      ie.plus_element = s0 == Side::minus ? edge.elements[1] : edge.elements[0];
      ie.normal_minus = mesh.outward_normal(ie.minus_element, mesh.local_edge(ie.minus_element, e));
      interface_.push_back(ie);
    }
    for (int t = 0; t < static_cast<int>(tags_.size()); ++t)
      (tags_[t] == Side::minus ? minus_ : plus_).push_back(t);
  }

  Side tag(int t) const { return tags_[t]; }
  bool is_minus(int t) const { return tags_[t] == Side::minus; }
  const std::vector<Side>& tags() const { return tags_; }
  const std::vector<int>& minus_elements() const { return minus_; }
  const std::vector<int>& plus_elements() const { return plus_; }
  const std::vector<InterfaceEdge>& interface_edges() const { return interface_; }
  /// Exterior boundary edges belonging to plus / minus elements.
  const std::vector<int>& gamma_plus() const { return gamma_plus_; }
  const std::vector<int>& gamma_minus() const { return gamma_minus_; }

 private:
  std::vector<Side> tags_;
  std::vector<int> minus_, plus_;
  std::vector<InterfaceEdge> interface_;
  std::vector<int> gamma_plus_, gamma_minus_;
};

inline SubdomainPartition all_plus(const Mesh& m) { return {m, std::vector<Side>(m.num_triangles(), Side::plus)}; }
inline SubdomainPartition all_minus(const Mesh& m) { return {m, std::vector<Side>(m.num_triangles(), Side::minus)}; }

/// Tags an element minus when `inside` holds at its barycenter. The predicate
/// is also probed near the vertices and edge midpoints; an element on which it
/// is not constant straddles the region boundary and is rejected.
inline SubdomainPartition partition_by_region(const Mesh& m, const std::function<bool(const Point&)>& inside) {
  std::vector<Side> tags(m.num_triangles());
  constexpr double eps = 1e-3;
  const std::array<Eigen::Vector3d, 7> probes = {
      Eigen::Vector3d(1.0 / 3, 1.0 / 3, 1.0 / 3), Eigen::Vector3d(1 - 2 * eps, eps, eps),
      Eigen::Vector3d(eps, 1 - 2 * eps, eps),     Eigen::Vector3d(eps, eps, 1 - 2 * eps),
      Eigen::Vector3d(eps, 0.5 - eps / 2, 0.5 - eps / 2), Eigen::Vector3d(0.5 - eps / 2, eps, 0.5 - eps / 2),
      Eigen::Vector3d(0.5 - eps / 2, 0.5 - eps / 2, eps)};
  for (int t = 0; t < m.num_triangles(); ++t) {
    const auto& tri = m.triangle(t);
    auto at = [&](const Eigen::Vector3d& l) {
      return Point(l[0] * m.vertex(tri[0]) + l[1] * m.vertex(tri[1]) + l[2] * m.vertex(tri[2]));
    };
    const bool center = inside(at(probes[0]));
    for (std::size_t p = 1; p < probes.size(); ++p)
      if (inside(at(probes[p])) != center) {
        const Point c = m.barycenter(t);
        throw ConfigError("partition_by_region: triangle " + std::to_string(t) + " (barycenter " +
                          std::to_string(c.x()) + ", " + std::to_string(c.y()) +
                          ") straddles the region boundary; the region is not mesh-aligned");
      }
    tags[t] = center ? Side::minus : Side::plus;
  }
  return {m, std::move(tags)};
}

/// Open axis-aligned box predicate.
inline std::function<bool(const Point&)> open_box(Point lo, Point hi) {
  return [lo, hi](const Point& p) { return p.x() > lo.x() && p.x() < hi.x() && p.y() > lo.y() && p.y() < hi.y(); };
}

// ---------------------------------------------------------------------------
// Layer growth around a stress-concentration set.

struct PointSeed {
  Point p;
};
struct SegmentSeed {
  Point a, b;
};
/// Region seed: elements with positive-area overlap with the box.
struct BoxSeed {
  Point lo, hi;
};
using Seed = std::variant<PointSeed, SegmentSeed, BoxSeed>;

namespace detail {

inline bool point_in_triangle(const Mesh& m, int t, const Point& p, double tol) {
  const auto& tri = m.triangle(t);
  const double scale = m.diameter(t);
  for (int e = 0; e < 3; ++e) {
    auto [a, b] = local_edge_vertices(e);
    const Point& pa = m.vertex(tri[a]);
    const Point& pb = m.vertex(tri[b]);
    if (cross(pb - pa, p - pa) < -tol * scale * scale) return false;
  }
  return true;
}

inline bool segments_intersect(const Point& p1, const Point& p2, const Point& q1, const Point& q2, double tol) {
  auto orient = [](const Point& a, const Point& b, const Point& c) { return cross(b - a, c - a); };
  const double d1 = orient(q1, q2, p1), d2 = orient(q1, q2, p2);
  const double d3 = orient(p1, p2, q1), d4 = orient(p1, p2, q2);
  const double s = tol * std::max((p2 - p1).squaredNorm(), (q2 - q1).squaredNorm());
  if (((d1 > s && d2 < -s) || (d1 < -s && d2 > s)) && ((d3 > s && d4 < -s) || (d3 < -s && d4 > s))) return true;
  auto on_seg = [&](const Point& a, const Point& b, const Point& c, double d) {
    return std::abs(d) <= s && c.x() >= std::min(a.x(), b.x()) - tol && c.x() <= std::max(a.x(), b.x()) + tol &&
           c.y() >= std::min(a.y(), b.y()) - tol && c.y() <= std::max(a.y(), b.y()) + tol;
  };
  return on_seg(q1, q2, p1, d1) || on_seg(q1, q2, p2, d2) || on_seg(p1, p2, q1, d3) || on_seg(p1, p2, q2, d4);
}

/// Area of triangle t clipped to the box (Sutherland-Hodgman).
inline double clipped_area(const Mesh& m, int t, const Point& lo, const Point& hi) {
  std::vector<Point> poly;
  for (int v : m.triangle(t)) poly.push_back(m.vertex(v));
  auto clip = [&poly](int axis, double bound, bool keep_greater) {
    std::vector<Point> out;
    const std::size_t n = poly.size();
    for (std::size_t i = 0; i < n; ++i) {
      const Point& a = poly[i];
      const Point& b = poly[(i + 1) % n];
      const bool ina = keep_greater ? a[axis] >= bound : a[axis] <= bound;
      const bool inb = keep_greater ? b[axis] >= bound : b[axis] <= bound;
      if (ina) out.push_back(a);
      if (ina != inb) {
        const double s = (bound - a[axis]) / (b[axis] - a[axis]);
        out.push_back(a + s * (b - a));
      }
    }
    poly = std::move(out);
  };
  clip(0, lo.x(), true);
  clip(0, hi.x(), false);
  clip(1, lo.y(), true);
  clip(1, hi.y(), false);
  double a = 0.0;
  for (std::size_t i = 0; i < poly.size(); ++i) a += cross(poly[i], poly[(i + 1) % poly.size()]);
  return 0.5 * a;
}

inline bool intersects(const Mesh& m, int t, const Seed& seed) {
  constexpr double tol = 1e-12;
  if (const auto* ps = std::get_if<PointSeed>(&seed)) return point_in_triangle(m, t, ps->p, tol);
  if (const auto* ss = std::get_if<SegmentSeed>(&seed)) {
    if (point_in_triangle(m, t, ss->a, tol) || point_in_triangle(m, t, ss->b, tol)) return true;
    const auto& tri = m.triangle(t);
    for (int e = 0; e < 3; ++e) {
      auto [a, b] = local_edge_vertices(e);
      if (segments_intersect(ss->a, ss->b, m.vertex(tri[a]), m.vertex(tri[b]), tol)) return true;
    }
    return false;
  }
  const auto& bs = std::get<BoxSeed>(seed);
  return clipped_area(m, t, bs.lo, bs.hi) > tol * m.area(t);
}

}  // namespace detail

/// Membership mask of omega_i: omega_1 holds the elements meeting the seed,
/// omega_j adds every element sharing a vertex with omega_{j-1}.
inline std::vector<bool> layer_mask(const Mesh& m, const Seed& seed, int layers) {
  if (layers < 1) throw ConfigError("grow_layers: layer count must be >= 1");
  std::vector<bool> in(m.num_triangles(), false);
  bool any = false;
  for (int t = 0; t < m.num_triangles(); ++t)
    if (detail::intersects(m, t, seed)) in[t] = any = true;
  if (!any) throw ConfigError("grow_layers: seed does not intersect the mesh");
  for (int j = 2; j <= layers; ++j) {
    std::vector<bool> next = in;
    for (int t = 0; t < m.num_triangles(); ++t) {
      if (!in[t]) continue;
      for (int v : m.triangle(t))
        for (int s : m.vertex_triangles(v)) next[s] = true;
    }
    if (next == in) break;
    in = std::move(next);
  }
  return in;
}

inline SubdomainPartition grow_layers(const Mesh& m, const Seed& seed, int layers) {
  auto mask = layer_mask(m, seed, layers);
  std::vector<Side> tags(m.num_triangles());
  for (int t = 0; t < m.num_triangles(); ++t) tags[t] = mask[t] ? Side::minus : Side::plus;
  return {m, std::move(tags)};
}

}  // namespace coupled_elast
