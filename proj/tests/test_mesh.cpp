#include "coupled_elast/mesh.hpp"
#include "coupled_elast/problems.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <set>
#include <sstream>

using namespace coupled_elast;

namespace {

double shoelace(const std::vector<Point>& poly) {
  double a = 0.0;
  for (std::size_t i = 0; i < poly.size(); ++i) a += cross(poly[i], poly[(i + 1) % poly.size()]);
  return 0.5 * a;
}

}  // namespace

TEST(StructuredSquare, CountsMatchCombinatorics) {
  for (int n : {1, 2, 4, 7}) {
    const Mesh m = build_structured_square(n);
    EXPECT_EQ(m.num_vertices(), (n + 1) * (n + 1));
    EXPECT_EQ(m.num_triangles(), 2 * n * n);
    EXPECT_EQ(m.num_edges(), 2 * n * (n + 1) + n * n);
    EXPECT_EQ(static_cast<int>(m.boundary_edges().size()), 4 * n);
  }
  const Mesh m4 = build_structured_square(4);
  EXPECT_EQ(m4.num_triangles(), 32);
  EXPECT_EQ(m4.num_vertices(), 25);
  EXPECT_EQ(m4.num_edges(), 56);
}

TEST(StructuredSquare, AreasAndOrientation) {
  const Mesh m = build_structured_square(2);
  for (int t = 0; t < m.num_triangles(); ++t) EXPECT_NEAR(m.area(t), 1.0 / 8.0, 1e-15);
  EXPECT_NEAR(m.total_area(), 1.0, 1e-14);
}

TEST(StructuredSquare, RejectsNonPositiveSize) { EXPECT_THROW(build_structured_square(0), ConfigError); }

TEST(Mesh, RejectsInvertedTriangle) {
  std::vector<Point> v = {{0, 0}, {1, 0}, {0, 1}};
  EXPECT_THROW(Mesh(v, {{0, 2, 1}}), ConfigError);
  EXPECT_THROW(Mesh(v, {{0, 1, 3}}), ConfigError);
}

TEST(Mesh, EdgesKnowTheirNeighbours) {
  const Mesh m = build_structured_square(3);
  int interior = 0;
  for (int e = 0; e < m.num_edges(); ++e) {
    const Edge& ed = m.edge(e);
    EXPECT_LT(ed.v[0], ed.v[1]);
    if (!ed.boundary()) {
      ++interior;
      EXPECT_LT(ed.elements[0], ed.elements[1]);
    }
    for (int t : ed.elements) {
      if (t < 0) continue;
      const int le = m.local_edge(t, e);
      EXPECT_EQ(m.triangle_edges(t)[le], e);
    }
  }
  EXPECT_EQ(interior, m.num_edges() - 12);
}

TEST(Mesh, NormalsAreUnitOrthogonalAndConsistent) {
  const Mesh m = refine_times(build_lshape_mesh(), 1);
  for (int e = 0; e < m.num_edges(); ++e) {
    const Edge& ed = m.edge(e);
    const Vec2 n = m.edge_normal(e);
    const Vec2 d = m.vertex(ed.v[1]) - m.vertex(ed.v[0]);
    EXPECT_NEAR(n.norm(), 1.0, 1e-14);
    EXPECT_NEAR(n.dot(d), 0.0, 1e-14);
    EXPECT_NEAR(m.edge_tangent(e).dot(n), 0.0, 1e-15);
    const Point mid = 0.5 * (m.vertex(ed.v[0]) + m.vertex(ed.v[1]));
    const int owner = ed.boundary() ? ed.elements[0] : ed.elements[1];
    // Points away from the owner's barycenter.
    EXPECT_GT(n.dot(mid - m.barycenter(owner)), 0.0);
  }
}

TEST(LShape, InitialAndRefinedMesh) {
  const Mesh m = build_lshape_mesh();
  EXPECT_EQ(m.num_triangles(), 12);
  EXPECT_NEAR(m.total_area(), 3.0, 1e-14);
  const Mesh r = uniform_refine(m);
  EXPECT_EQ(r.num_triangles(), 48);
  EXPECT_NEAR(r.total_area(), 3.0, 1e-14);
  // The removed quadrant (0,1) x (-1,0) is empty.
  for (int t = 0; t < r.num_triangles(); ++t) {
    const Point c = r.barycenter(t);
    EXPECT_FALSE(c.x() > 0.0 && c.y() < 0.0);
  }
  EXPECT_NEAR(m.min_angle(), std::numbers::pi / 4, 1e-12);
}

TEST(Cook, AreaAndInclusionAlignment) {
  const Mesh m = build_cook_mesh();
  const double plate = shoelace({{0, 0}, {48, 44}, {48, 60}, {0, 44}});
  EXPECT_NEAR(m.total_area(), plate, 1e-10);
  const double inclusion = shoelace({{12, 20.25}, {36, 38.75}, {36, 50.25}});
  double inside = 0.0;
  int count = 0;
  for (int t = 0; t < m.num_triangles(); ++t)
    if (cook::in_inclusion(m.barycenter(t))) {
      inside += m.area(t);
      ++count;
      for (int v : m.triangle(t)) {
        // Every vertex lies in the closed inclusion triangle.
        const Point x = m.vertex(v);
        const std::array<Point, 3> c = {Point(12, 20.25), Point(36, 38.75), Point(36, 50.25)};
        for (int i = 0; i < 3; ++i) EXPECT_GE(cross(c[(i + 1) % 3] - c[i], x - c[i]), -1e-9);
      }
    }
  EXPECT_EQ(count, 4);
  EXPECT_NEAR(inside, inclusion, 1e-10);
  for (const Point& p : {Point(12, 20.25), Point(36, 38.75), Point(36, 50.25), Point(48, 60)})
    EXPECT_GE(m.find_vertex(p, 1e-9), 0);
}

TEST(Refinement, HalvesMeshSizeAndKeepsShape) {
  Mesh m = build_structured_square(4);
  const double a0 = m.min_angle();
  for (int l = 0; l < 3; ++l) {
    const Mesh r = uniform_refine(m);
    EXPECT_EQ(r.num_triangles(), 4 * m.num_triangles());
    EXPECT_EQ(r.num_vertices(), m.num_vertices() + m.num_edges());
    EXPECT_NEAR(r.max_diameter(), 0.5 * m.max_diameter(), 1e-14);
    EXPECT_NEAR(r.min_angle(), a0, 1e-12);
    EXPECT_NEAR(r.total_area(), 1.0, 1e-13);
    m = r;
  }
}

TEST(Refinement, ChildrenTileParent) {
  const Mesh m = build_cook_mesh();
  const Mesh r = uniform_refine(m);
  for (int t = 0; t < m.num_triangles(); ++t) {
    double sum = 0.0;
    for (int c = 0; c < 4; ++c) sum += r.area(4 * t + c);
    EXPECT_NEAR(sum, m.area(t), 1e-10);
    EXPECT_NEAR(r.area(4 * t + 3), 0.25 * m.area(t), 1e-10);
  }
}

TEST(Mesh, VertexTrianglesMatchBruteForce) {
  const Mesh m = refine_times(build_lshape_mesh(), 1);
  for (int v = 0; v < m.num_vertices(); ++v) {
    std::set<int> brute;
    for (int t = 0; t < m.num_triangles(); ++t)
      for (int w : m.triangle(t))
        if (w == v) brute.insert(t);
    auto span = m.vertex_triangles(v);
    EXPECT_EQ(std::set<int>(span.begin(), span.end()), brute);
  }
}

TEST(MeshIo, RoundTrip) {
  const Mesh m = refine_times(build_cook_mesh(), 1);
  std::stringstream ss;
  write_mesh_ascii(m, ss);
  const Mesh r = read_mesh_ascii(ss);
  ASSERT_EQ(r.num_vertices(), m.num_vertices());
  ASSERT_EQ(r.num_triangles(), m.num_triangles());
  EXPECT_EQ(r.num_edges(), m.num_edges());
  for (int v = 0; v < m.num_vertices(); ++v) EXPECT_EQ((r.vertex(v) - m.vertex(v)).norm(), 0.0);
  EXPECT_EQ(r.triangles(), m.triangles());
}

TEST(MeshIo, RejectsMalformedInput) {
  std::stringstream bad_header("quads\n4 5 2\n");
  EXPECT_THROW(read_mesh_ascii(bad_header), ConfigError);
  std::stringstream wrong_edges("triangles 2D\n3 4 1\n0 0\n1 0\n0 1\n0 1 2\n");
  EXPECT_THROW(read_mesh_ascii(wrong_edges), ConfigError);
  std::stringstream truncated("triangles 2D\n3 3 1\n0 0\n1 0\n");
  EXPECT_THROW(read_mesh_ascii(truncated), ConfigError);
}
