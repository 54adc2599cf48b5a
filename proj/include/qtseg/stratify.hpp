#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <vector>

#include "qtseg/error.hpp"
#include "qtseg/imgio.hpp"

namespace qtseg {

/// Controls when a region is subdivided.
struct SplitPolicy {
  int max_depth = 4;
  int min_side = 16;
  double var_threshold = 400.0;

  void validate() const {
    if (max_depth < 0 || max_depth > 12) throw Error(ErrorCategory::InvalidArgument, "max_depth must be in [0, 12]");
    if (min_side < 2) throw Error(ErrorCategory::InvalidArgument, "min_side must be >= 2");
    if (!(var_threshold >= 0.0) || !std::isfinite(var_threshold)) {
      throw Error(ErrorCategory::InvalidArgument, "var_threshold must be a finite nonnegative number");
    }
  }
};

struct RegionStats {
  std::int64_t count = 0;
  double mean = 0.0;
  double variance = 0.0;  // population variance
  double entropy = 0.0;   // bits
};

/// Moments and Shannon entropy (log2, 0 log 0 = 0) of a histogram.
inline RegionStats stats_from_histogram(const Histogram256& hist) {
  RegionStats s;
  s.count = hist.total();
  if (s.count == 0) return s;
  const double n = static_cast<double>(s.count);
  double sum = 0.0;
  for (int g = 0; g < 256; ++g) sum += static_cast<double>(g) * static_cast<double>(hist.counts[g]);
  s.mean = sum / n;
  double ss = 0.0;
  double ent = 0.0;
  for (int g = 0; g < 256; ++g) {
    const auto c = hist.counts[g];
    if (c == 0) continue;
    const double d = g - s.mean;
    ss += d * d * static_cast<double>(c);
    const double p = static_cast<double>(c) / n;
    ent -= p * std::log2(p);
  }
  s.variance = ss / n;
  s.entropy = ent;
  return s;
}

struct RegionNode {
  Rect rect;
  int depth = 0;
  Histogram256 hist;
  RegionStats stats;
  std::vector<RegionNode> children;  // empty (leaf) or exactly 4: NW, NE, SW, SE

  bool is_leaf() const noexcept { return children.empty(); }
};

struct QuadTree {
  RegionNode root;
  int width = 0;
  int height = 0;
};

/// Splits at ceil(w/2), ceil(h/2) so the NW child takes the larger share.
inline std::array<Rect, 4> quadrants(const Rect& r) noexcept {
  const int w1 = (r.w + 1) / 2;
  const int h1 = (r.h + 1) / 2;
  const int w2 = r.w - w1;
  const int h2 = r.h - h1;
  return {Rect{r.x0, r.y0, w1, h1}, Rect{r.x0 + w1, r.y0, w2, h1}, Rect{r.x0, r.y0 + h1, w1, h2},
          Rect{r.x0 + w1, r.y0 + h1, w2, h2}};
}

namespace detail {

inline bool should_split(const RegionNode& node, const SplitPolicy& policy) noexcept {
  if (node.depth >= policy.max_depth) return false;
  if (!(node.stats.variance > policy.var_threshold)) return false;
  // The smaller half (floor) of each side must still satisfy min_side.
  return node.rect.w / 2 >= policy.min_side && node.rect.h / 2 >= policy.min_side;
}

inline RegionNode build_node(const GrayImage& img, const Rect& rect, int depth, const SplitPolicy& policy) {
  RegionNode node;
  node.rect = rect;
  node.depth = depth;
  node.hist = region_histogram(img, rect);
  node.stats = stats_from_histogram(node.hist);
  if (should_split(node, policy)) {
    node.children.reserve(4);
    for (const Rect& q : quadrants(rect)) node.children.push_back(build_node(img, q, depth + 1, policy));
  }
  return node;
}

}  // namespace detail

/// Recursive variance-driven quadtree. A node splits iff its variance exceeds
/// the policy threshold, it is above max_depth, and every child side would be
/// at least min_side. An image smaller than min_side simply yields one leaf.
inline QuadTree build_quadtree(const GrayImage& img, const SplitPolicy& policy = {}) {
  policy.validate();
  if (img.empty()) throw Error(ErrorCategory::InvalidArgument, "cannot stratify an empty image");
  QuadTree tree;
  tree.width = img.width();
  tree.height = img.height();
  tree.root = detail::build_node(img, img.bounds(), 0, policy);
  return tree;
}

/// Visits leaves depth-first in NW, NE, SW, SE order.
inline void for_each_leaf(const RegionNode& node, const std::function<void(const RegionNode&)>& fn) {
  if (node.is_leaf()) {
    fn(node);
    return;
  }
  for (const auto& child : node.children) for_each_leaf(child, fn);
}

inline std::vector<const RegionNode*> leaves(const QuadTree& tree) {
  std::vector<const RegionNode*> out;
  for_each_leaf(tree.root, [&](const RegionNode& n) { out.push_back(&n); });
  return out;
}

inline int tree_depth(const RegionNode& node) {
  int d = node.depth;
  for (const auto& c : node.children) d = std::max(d, tree_depth(c));
  return d;
}

/// Gray-level entropy over its 8-bit maximum, in [0, 1].
inline double region_complexity(const RegionNode& node) noexcept {
  return std::clamp(node.stats.entropy / 8.0, 0.0, 1.0);
}

}  // namespace qtseg
