#include "coupled_elast/partition.hpp"

#include <gtest/gtest.h>

#include <set>

using namespace coupled_elast;

namespace {

std::set<int> touching(const Mesh& m, const std::set<int>& elems) {
  std::set<int> verts;
  for (int t : elems)
    for (int v : m.triangle(t)) verts.insert(v);
  std::set<int> out;
  for (int t = 0; t < m.num_triangles(); ++t)
    for (int v : m.triangle(t))
      if (verts.count(v)) out.insert(t);
  return out;
}

std::set<int> as_set(const std::vector<bool>& mask) {
  std::set<int> s;
  for (std::size_t t = 0; t < mask.size(); ++t)
    if (mask[t]) s.insert(static_cast<int>(t));
  return s;
}

}  // namespace

TEST(Partition, BoxSelectsAlignedCells) {
  const Mesh m = build_structured_square(4);
  const auto p = partition_by_region(m, open_box({0.25, 0.25}, {0.75, 0.75}));
  EXPECT_EQ(p.minus_elements().size(), 8u);
  EXPECT_EQ(p.plus_elements().size(), 24u);
  EXPECT_EQ(p.interface_edges().size(), 8u);
  EXPECT_TRUE(p.gamma_minus().empty());
  EXPECT_EQ(p.gamma_plus().size(), 16u);
  for (const auto& ie : p.interface_edges()) {
    EXPECT_TRUE(p.is_minus(ie.minus_element));
    EXPECT_FALSE(p.is_minus(ie.plus_element));
    // Normal leaves the minus element.
    const Edge& e = m.edge(ie.edge);
    const Point mid = 0.5 * (m.vertex(e.v[0]) + m.vertex(e.v[1]));
    EXPECT_GT(ie.normal_minus.dot(mid - m.barycenter(ie.minus_element)), 0.0);
    EXPECT_LT(ie.normal_minus.dot(mid - m.barycenter(ie.plus_element)), 0.0);
  }
}

TEST(Partition, StraddlingBoxIsRejected) {
  const Mesh m = build_structured_square(4);
  EXPECT_THROW(partition_by_region(m, open_box({0.3, 0.3}, {0.7, 0.7})), ConfigError);
}

TEST(Partition, TagCountMustMatch) {
  const Mesh m = build_structured_square(2);
  EXPECT_THROW(SubdomainPartition(m, std::vector<Side>(3, Side::plus)), ConfigError);
}

TEST(Partition, TrivialPartitionsHaveNoInterface) {
  const Mesh m = build_structured_square(3);
  EXPECT_TRUE(all_plus(m).interface_edges().empty());
  EXPECT_TRUE(all_minus(m).interface_edges().empty());
  EXPECT_EQ(all_minus(m).gamma_minus().size(), 12u);
  EXPECT_EQ(all_plus(m).gamma_plus().size(), 12u);
}

TEST(Layers, PointSeedMatchesVertexSharingOracle) {
  const Mesh m = build_structured_square(4);
  const int center = m.find_vertex({0.5, 0.5});
  ASSERT_GE(center, 0);
  std::set<int> expect;
  for (int t = 0; t < m.num_triangles(); ++t)
    for (int v : m.triangle(t))
      if (v == center) expect.insert(t);
  EXPECT_EQ(as_set(layer_mask(m, PointSeed{{0.5, 0.5}}, 1)), expect);
  for (int layers = 2; layers <= 4; ++layers) {
    expect = touching(m, expect);
    EXPECT_EQ(as_set(layer_mask(m, PointSeed{{0.5, 0.5}}, layers)), expect) << layers;
  }
}

TEST(Layers, NestedAndSaturating) {
  const Mesh m = refine_times(build_lshape_mesh(), 1);
  std::set<int> prev;
  for (int l = 1; l <= 6; ++l) {
    const auto cur = as_set(layer_mask(m, PointSeed{{0.0, 0.0}}, l));
    EXPECT_TRUE(std::includes(cur.begin(), cur.end(), prev.begin(), prev.end()));
    prev = cur;
  }
  EXPECT_EQ(static_cast<int>(prev.size()), m.num_triangles());
  const auto p = grow_layers(m, PointSeed{{0.0, 0.0}}, 2);
  EXPECT_EQ(as_set(layer_mask(m, PointSeed{{0.0, 0.0}}, 2)), std::set<int>(p.minus_elements().begin(), p.minus_elements().end()));
}

TEST(Layers, SegmentAndBoxSeeds) {
  const Mesh m = build_structured_square(4);
  // Segment along the line y = 0.5 touches the two rows adjacent to it.
  const auto seg = as_set(layer_mask(m, SegmentSeed{{0.0, 0.5}, {1.0, 0.5}}, 1));
  for (int t = 0; t < m.num_triangles(); ++t) {
    const double y = m.barycenter(t).y();
    EXPECT_EQ(seg.count(t) == 1, y > 0.25 && y < 0.75) << t;
  }
  // A box seed counts only positive-area overlap: edge contact is not enough.
  const auto box = as_set(layer_mask(m, BoxSeed{{0.25, 0.25}, {0.5, 0.5}}, 1));
  EXPECT_EQ(box.size(), 2u);
}

TEST(Layers, RejectsEmptySeedAndBadCount) {
  const Mesh m = build_structured_square(2);
  EXPECT_THROW(layer_mask(m, PointSeed{{5.0, 5.0}}, 1), ConfigError);
  EXPECT_THROW(layer_mask(m, PointSeed{{0.5, 0.5}}, 0), ConfigError);
}
