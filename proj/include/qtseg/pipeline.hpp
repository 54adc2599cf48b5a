#pragma once

#include <algorithm>

#include "qtseg/imgio.hpp"
#include "qtseg/stratify.hpp"
#include "qtseg/threshopt.hpp"

namespace qtseg {

struct SegmentOptions {
  SplitPolicy policy;
  ObjectiveWeights weights;
  SimplexParams simplex;
  bool inherit_homogeneous = true;
  unsigned threads = 0;
};

struct SegmentationResult {
  QuadTree tree;
  ThresholdReport report;
  GrayImage mask;
};

/// Stratify, optimize a threshold per subdomain, stitch the binary mask.
inline SegmentationResult segment_image(const GrayImage& img, const SegmentOptions& options = {}) {
  SegmentationResult out;
  out.tree = build_quadtree(img, options.policy);
  TreeOptimizeOptions topt;
  topt.inherit_homogeneous = options.inherit_homogeneous;
  topt.var_threshold = options.policy.var_threshold;
  topt.threads = options.threads;
  out.report = optimize_tree(out.tree, options.weights, options.simplex, topt);
  out.mask = segment(img, out.tree, out.report);
  return out;
}

/// One threshold for the whole image, chosen by exhaustive search over the
/// full-image histogram. Baseline for the stratified pipeline.
inline GrayImage segment_global_oracle(const GrayImage& img, const ObjectiveWeights& weights, int* threshold_out = nullptr) {
  const Histogram256 hist = region_histogram(img, img.bounds());
  const double complexity = std::clamp(stats_from_histogram(hist).entropy / 8.0, 0.0, 1.0);
  const OracleThreshold best = oracle_best_threshold(hist, complexity, weights);
  if (threshold_out != nullptr) *threshold_out = best.threshold;
  return apply_threshold(img, best.threshold);
}

}  // namespace qtseg
