#include <gtest/gtest.h>

#include <functional>
#include <random>

#include "oracles.hpp"
#include "qtseg/stratify.hpp"

using namespace qtseg;

namespace {

GrayImage four_quadrants(int side = 64) {
  GrayImage img(side, side);
  const int h = side / 2;
  for (int y = 0; y < side; ++y)
    for (int x = 0; x < side; ++x) img.at(x, y) = static_cast<std::uint8_t>(85 * ((y >= h ? 2 : 0) + (x >= h ? 1 : 0)));
  return img;
}

SplitPolicy random_policy(std::mt19937_64& rng) {
  SplitPolicy p;
  p.max_depth = std::uniform_int_distribution<int>(0, 6)(rng);
  p.min_side = std::uniform_int_distribution<int>(2, 12)(rng);
  p.var_threshold = std::uniform_real_distribution<double>(0.0, 2000.0)(rng);
  return p;
}

// True when `small` is `big` with some subtrees collapsed to leaves.
bool is_prefix(const RegionNode& small, const RegionNode& big) {
  if (!(small.rect == big.rect)) return false;
  if (small.is_leaf()) return true;
  if (big.is_leaf()) return false;
  for (int i = 0; i < 4; ++i)
    if (!is_prefix(small.children[i], big.children[i])) return false;
  return true;
}

bool same_structure(const RegionNode& a, const RegionNode& b) {
  if (!(a.rect == b.rect) || a.depth != b.depth || a.children.size() != b.children.size()) return false;
  if (!(a.hist == b.hist)) return false;
  for (std::size_t i = 0; i < a.children.size(); ++i)
    if (!same_structure(a.children[i], b.children[i])) return false;
  return true;
}

}  // namespace

TEST(Quadtree, ConstantImageIsOneLeaf) {
  for (int side : {1, 17, 64, 200}) {
    const QuadTree t = build_quadtree(GrayImage(side, side + 3, 77));
    EXPECT_TRUE(t.root.is_leaf());
    EXPECT_EQ(t.root.rect, (Rect{0, 0, side, side + 3}));
  }
}

TEST(Quadtree, FourQuadrantsSplitOnce) {
  const QuadTree t = build_quadtree(four_quadrants());
  const auto ls = leaves(t);
  ASSERT_EQ(ls.size(), 4u);
  const Rect want[4] = {{0, 0, 32, 32}, {32, 0, 32, 32}, {0, 32, 32, 32}, {32, 32, 32, 32}};
  for (int i = 0; i < 4; ++i) {
    EXPECT_EQ(ls[i]->rect, want[i]);
    EXPECT_EQ(ls[i]->depth, 1);
    EXPECT_EQ(ls[i]->stats.variance, 0.0);
    EXPECT_EQ(ls[i]->stats.mean, 85.0 * i);
  }
  // Hand value: levels 0, 85, 170, 255 equally weighted.
  EXPECT_NEAR(t.root.stats.variance, 85.0 * 85.0 * 1.25, 1e-9);
}

TEST(Quadtree, DepthCapZeroGivesOneLeaf) {
  std::mt19937_64 rng(1);
  SplitPolicy p;
  p.max_depth = 0;
  EXPECT_TRUE(build_quadtree(oracle::random_image(rng, 128, 128), p).root.is_leaf());
}

TEST(Quadtree, ImageBelowMinSideIsOneLeaf) {
  std::mt19937_64 rng(2);
  EXPECT_TRUE(build_quadtree(oracle::random_image(rng, 31, 200)).root.is_leaf());
  EXPECT_FALSE(build_quadtree(oracle::random_image(rng, 32, 200)).root.is_leaf());
}

TEST(Quadtree, OddDimensionsSplitAtCeiling) {
  const auto q = quadrants(Rect{3, 5, 7, 9});
  EXPECT_EQ(q[0], (Rect{3, 5, 4, 5}));
  EXPECT_EQ(q[1], (Rect{7, 5, 3, 5}));
  EXPECT_EQ(q[2], (Rect{3, 10, 4, 4}));
  EXPECT_EQ(q[3], (Rect{7, 10, 3, 4}));
}

TEST(Quadtree, SingleLeafSequenceIsRoot) {
  const QuadTree t = build_quadtree(GrayImage(9, 9, 0));
  const auto ls = leaves(t);
  ASSERT_EQ(ls.size(), 1u);
  EXPECT_EQ(ls[0], &t.root);
}

TEST(Quadtree, SplitRuleHoldsAtEveryNode) {
  std::mt19937_64 rng(4);
  for (int i = 0; i < 50; ++i) {
    const GrayImage img = oracle::random_blocky_image(rng, 40 + i * 3, 90 - i);
    const SplitPolicy p = random_policy(rng);
    const QuadTree t = build_quadtree(img, p);
    std::function<void(const RegionNode&)> check = [&](const RegionNode& n) {
      const bool expect = n.depth < p.max_depth && n.stats.variance > p.var_threshold && n.rect.w / 2 >= p.min_side &&
                          n.rect.h / 2 >= p.min_side;
      EXPECT_EQ(!n.is_leaf(), expect);
      for (const auto& c : n.children) check(c);
    };
    check(t.root);
  }
}

TEST(Quadtree, TilingAndStatsOnRandomImages) {
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<int> dim(1, 150);
  for (int i = 0; i < 200; ++i) {
    const GrayImage img = i % 2 ? oracle::random_blocky_image(rng, dim(rng), dim(rng))
                                : oracle::random_image(rng, dim(rng), dim(rng));
    const QuadTree t = build_quadtree(img, random_policy(rng));
    const auto a = oracle::audit_tree(img, t);
    ASSERT_TRUE(a.coverage_exact) << "case " << i;
    ASSERT_TRUE(a.structure_ok) << "case " << i;
    ASSERT_TRUE(a.count_exact) << "case " << i;
    ASSERT_LE(a.max_rel_error, 1e-9) << "case " << i;
    std::int64_t area = 0;
    for (const auto* l : leaves(t)) area += l->rect.area();
    EXPECT_EQ(area, img.bounds().area());
  }
}

TEST(Quadtree, HigherThresholdGivesPrefixTree) {
  std::mt19937_64 rng(8);
  for (int i = 0; i < 40; ++i) {
    const GrayImage img = oracle::random_blocky_image(rng, 100, 120);
    SplitPolicy lo = random_policy(rng);
    SplitPolicy hi = lo;
    hi.var_threshold += std::uniform_real_distribution<double>(0.0, 1500.0)(rng);
    const QuadTree a = build_quadtree(img, hi);
    const QuadTree b = build_quadtree(img, lo);
    EXPECT_TRUE(is_prefix(a.root, b.root));
    EXPECT_LE(tree_depth(a.root), tree_depth(b.root));
  }
}

TEST(Quadtree, Deterministic) {
  std::mt19937_64 rng(9);
  const GrayImage img = oracle::random_blocky_image(rng, 200, 150);
  EXPECT_TRUE(same_structure(build_quadtree(img).root, build_quadtree(img).root));
}

TEST(Quadtree, PolicyValidation) {
  const GrayImage img(8, 8, 0);
  EXPECT_THROW(build_quadtree(img, SplitPolicy{13, 16, 400}), Error);
  EXPECT_THROW(build_quadtree(img, SplitPolicy{4, 1, 400}), Error);
  EXPECT_THROW(build_quadtree(img, SplitPolicy{4, 16, -1}), Error);
}

TEST(Complexity, EntropyOverEight) {
  RegionNode n;
  n.stats = stats_from_histogram(region_histogram(GrayImage(4, 4, 9), Rect{0, 0, 4, 4}));
  EXPECT_EQ(region_complexity(n), 0.0);

  GrayImage all(256, 1);
  for (int x = 0; x < 256; ++x) all.at(x, 0) = static_cast<std::uint8_t>(x);
  n.stats = stats_from_histogram(region_histogram(all, all.bounds()));
  EXPECT_NEAR(region_complexity(n), 1.0, 1e-12);

  const GrayImage two(2, 3, std::vector<std::uint8_t>{10, 200, 10, 200, 10, 200});
  n.stats = stats_from_histogram(region_histogram(two, two.bounds()));
  EXPECT_NEAR(region_complexity(n), 0.125, 1e-12);
}
