#pragma once

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <optional>
#include <thread>
#include <utility>
#include <vector>

#include "qtseg/error.hpp"
#include "qtseg/imgio.hpp"
#include "qtseg/stratify.hpp"

namespace qtseg {

/// Relative weights of the between-class variance and entropy terms.
struct ObjectiveWeights {
  double w_var = 0.7;
  double w_ent = 0.3;
  bool adaptive = true;
};

struct EffectiveWeights {
  double w_var = 1.0;
  double w_ent = 0.0;
};

/// Normalizes the weights to sum to one. In adaptive mode the entropy weight
/// is scaled by region complexity, so flat regions rely on variance alone.
inline EffectiveWeights effective_weights(const ObjectiveWeights& w, double complexity) {
  if (!(w.w_var >= 0.0) || !(w.w_ent >= 0.0) || !std::isfinite(w.w_var) || !std::isfinite(w.w_ent)) {
    throw Error(ErrorCategory::InvalidArgument, "objective weights must be finite and nonnegative");
  }
  const double sum = w.w_var + w.w_ent;
  if (!(sum > 0.0)) throw Error(ErrorCategory::InvalidArgument, "objective weights must not both be zero");
  const double var_n = w.w_var / sum;
  const double ent_n = w.w_ent / sum;
  if (!w.adaptive) return {var_n, ent_n};
  const double ent = ent_n * std::clamp(complexity, 0.0, 1.0);
  return {1.0 - ent, ent};
}

struct SimplexParams {
  int max_iter = 200;
  double diameter_tol = 0.5;
  double reflection = 1.0;
  double expansion = 2.0;
  double contraction = 0.5;
  double shrink = 0.5;
  double initial_step = 16.0;

  void validate() const {
    if (max_iter < 1) throw Error(ErrorCategory::InvalidArgument, "max_iter must be >= 1");
    if (!(diameter_tol > 0.0)) throw Error(ErrorCategory::InvalidArgument, "diameter_tol must be > 0");
    if (!(reflection > 0.0)) throw Error(ErrorCategory::InvalidArgument, "reflection must be > 0");
    if (!(expansion > reflection)) throw Error(ErrorCategory::InvalidArgument, "expansion must exceed reflection");
    if (!(contraction > 0.0 && contraction < 1.0)) {
      throw Error(ErrorCategory::InvalidArgument, "contraction must be in (0, 1)");
    }
    if (!(shrink > 0.0 && shrink < 1.0)) throw Error(ErrorCategory::InvalidArgument, "shrink must be in (0, 1)");
    if (!(initial_step != 0.0) || !std::isfinite(initial_step)) {
      throw Error(ErrorCategory::InvalidArgument, "initial_step must be finite and nonzero");
    }
  }
};

namespace detail {

inline double xlogx(double x) noexcept { return x > 0.0 ? x * std::log(x) : 0.0; }

}  // namespace detail

/// Weighted threshold criterion over one histogram:
///
///   J(t) = w_var * V(t) + w_ent * E(t)
///
/// V is Otsu's between-class variance normalized by the total variance, E is
/// Kapur's two-class entropy normalized by 2 ln 256. Class 0 holds levels <= t.
/// For non-integer t the mass of level floor(t)+1 is split fractionally
/// between the classes, which makes cumulative mass and first moment
/// piecewise linear in t and leaves values at integer knots untouched.
class ThresholdObjective {
 public:
  ThresholdObjective(const Histogram256& hist, EffectiveWeights weights) : counts_(hist.counts), weights_(weights) {
    for (int g = 0; g < 256; ++g) {
      const auto c = counts_[g];
      if (c < 0) throw Error(ErrorCategory::InvalidArgument, "negative histogram count");
      cum_count_[g + 1] = cum_count_[g] + c;
      cum_moment_[g + 1] = cum_moment_[g] + std::int64_t{g} * c;
      cum_xlogx_[g + 1] = cum_xlogx_[g] + detail::xlogx(static_cast<double>(c));
    }
    total_ = cum_count_[256];
    if (total_ <= 0) throw Error(ErrorCategory::EmptyHistogram, "histogram has no mass");
    const double n = static_cast<double>(total_);
    mean_ = static_cast<double>(cum_moment_[256]) / n;
    double ss = 0.0;
    for (int g = 0; g < 256; ++g) {
      const double d = g - mean_;
      ss += d * d * static_cast<double>(counts_[g]);
    }
    variance_ = ss / n;
  }

  double mean() const noexcept { return mean_; }
  double variance() const noexcept { return variance_; }
  std::int64_t total() const noexcept { return total_; }
  const EffectiveWeights& weights() const noexcept { return weights_; }

  double operator()(double t) const noexcept {
    const Split s = split(t);
    return weights_.w_var * variance_term(s) + weights_.w_ent * entropy_term(s);
  }

  double variance_term(double t) const noexcept { return variance_term(split(t)); }
  double entropy_term(double t) const noexcept { return entropy_term(split(t)); }

 private:
  struct Split {
    double c0, m0, l0;  // count, first moment, sum of h ln h for class 0
    double c1, m1, l1;
  };

  Split split(double t) const noexcept {
    if (!(t >= 0.0)) t = 0.0;  // also maps NaN to 0
    if (t > 255.0) t = 255.0;
    const int k = static_cast<int>(std::floor(t));
    if (k >= 255) {
      return {static_cast<double>(total_), static_cast<double>(cum_moment_[256]), cum_xlogx_[256], 0.0, 0.0, 0.0};
    }
    const double frac = t - k;
    const int next = k + 1;
    const double h = static_cast<double>(counts_[next]);
    const double a = frac * h;  // portion of level `next` assigned to class 0
    const double b = h - a;
    Split s{};
    s.c0 = static_cast<double>(cum_count_[next]) + a;
    s.m0 = static_cast<double>(cum_moment_[next]) + a * next;
    s.l0 = cum_xlogx_[next] + detail::xlogx(a);
    s.c1 = static_cast<double>(total_ - cum_count_[next + 1]) + b;
    s.m1 = static_cast<double>(cum_moment_[256] - cum_moment_[next + 1]) + b * next;
    s.l1 = (cum_xlogx_[256] - cum_xlogx_[next + 1]) + detail::xlogx(b);
    return s;
  }

  double variance_term(const Split& s) const noexcept {
    if (!(variance_ > 0.0) || !(s.c0 > 0.0) || !(s.c1 > 0.0)) return 0.0;
    const double n = static_cast<double>(total_);
    const double d = s.m0 / s.c0 - s.m1 / s.c1;
    const double between = (s.c0 / n) * (s.c1 / n) * d * d;
    return between / variance_;
  }

  double entropy_term(const Split& s) const noexcept {
    // Class entropy in nats from counts: H = ln c - (sum h ln h) / c.
    const auto class_entropy = [](double c, double l) { return c > 0.0 ? std::log(c) - l / c : 0.0; };
    const double e = (class_entropy(s.c0, s.l0) + class_entropy(s.c1, s.l1)) / (2.0 * std::log(256.0));
    return std::clamp(e, 0.0, 1.0);
  }

  std::array<std::int64_t, 256> counts_{};
  EffectiveWeights weights_;
  std::array<std::int64_t, 257> cum_count_{};
  std::array<std::int64_t, 257> cum_moment_{};
  std::array<double, 257> cum_xlogx_{};
  std::int64_t total_ = 0;
  double mean_ = 0.0;
  double variance_ = 0.0;
};

inline double objective(const Histogram256& hist, double t, const ObjectiveWeights& weights, double complexity) {
  return ThresholdObjective(hist, effective_weights(weights, complexity))(t);
}

struct SimplexResult {
  double x = 0.0;
  double value = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// One-dimensional Nelder-Mead maximizing `f`, starting from the simplex
/// {x0, x0 + initial_step}. Stops when the simplex diameter drops below
/// diameter_tol or after max_iter iterations; returns the best vertex.
template <class F>
SimplexResult nelder_mead_1d(F&& f, double x0, const SimplexParams& params = {}) {
  params.validate();
  struct Vertex {
    double x;
    double cost;  // -f(x), minimized
  };
  const auto eval = [&](double x) { return Vertex{x, -static_cast<double>(f(x))}; };

  Vertex best = eval(x0);
  Vertex worst = eval(x0 + params.initial_step);
  if (worst.cost < best.cost) std::swap(best, worst);

  SimplexResult result;
  while (true) {
    if (std::abs(worst.x - best.x) < params.diameter_tol) {
      result.converged = true;
      break;
    }
    if (result.iterations >= params.max_iter) break;
    ++result.iterations;

    // With two vertices the centroid of all but the worst is the best vertex.
    const double centroid = best.x;
    const Vertex reflected = eval(centroid + params.reflection * (centroid - worst.x));
    bool do_shrink = false;
    if (reflected.cost < best.cost) {
      const Vertex expanded = eval(centroid + params.expansion * (reflected.x - centroid));
      worst = expanded.cost < reflected.cost ? expanded : reflected;
    } else if (reflected.cost < worst.cost) {
      const Vertex outside = eval(centroid + params.contraction * (reflected.x - centroid));
      if (outside.cost <= reflected.cost) {
        worst = outside;
      } else {
        do_shrink = true;
      }
    } else {
      const Vertex inside = eval(centroid + params.contraction * (worst.x - centroid));
      if (inside.cost < worst.cost) {
        worst = inside;
      } else {
        do_shrink = true;
      }
    }
    if (do_shrink) worst = eval(best.x + params.shrink * (worst.x - best.x));
    if (worst.cost < best.cost) std::swap(best, worst);
  }
  result.x = best.x;
  result.value = -best.cost;
  return result;
}

/// Optimized threshold for one region.
struct LeafThreshold {
  int threshold = 0;       // final integer threshold in [0, 255]
  double t_star = 0.0;     // continuous simplex optimum
  int rounded = 0;         // round(clamp(t_star, 0, 255)), refinement start
  double objective = 0.0;  // J(threshold)
  EffectiveWeights weights;
  int iterations = 0;
  bool converged = false;
};

/// Simplex search from the region mean, rounding, then an integer hill-climb
/// over +-3 windows that ends on the smallest window maximizer. The result
/// satisfies J(t) >= J(t-1) and J(t) >= J(t+1).
inline LeafThreshold optimize_leaf(const Histogram256& hist, double complexity, const ObjectiveWeights& weights,
                                   const SimplexParams& params = {}) {
  params.validate();
  const ThresholdObjective j(hist, effective_weights(weights, complexity));
  LeafThreshold out;
  out.weights = j.weights();

  // Single occupied level: J is identically zero, report the level itself.
  if (!(j.variance() > 0.0)) {
    const auto it = std::find_if(hist.counts.begin(), hist.counts.end(), [](std::int64_t c) { return c > 0; });
    out.threshold = static_cast<int>(it - hist.counts.begin());
    out.t_star = out.threshold;
    out.rounded = out.threshold;
    out.objective = j(out.threshold);
    out.converged = true;
    return out;
  }

  const SimplexResult nm = nelder_mead_1d(j, j.mean(), params);
  out.t_star = nm.x;
  out.iterations = nm.iterations;
  out.converged = nm.converged;
  out.rounded = static_cast<int>(std::lround(std::clamp(nm.x, 0.0, 255.0)));

  constexpr int kRadius = 3;
  int t = out.rounded;
  while (true) {
    const int lo = std::max(0, t - kRadius);
    const int hi = std::min(255, t + kRadius);
    double best = j(t);
    int first_best = t;
    for (int c = lo; c <= hi; ++c) {
      const double v = j(c);
      if (v > best || (v == best && c < first_best)) {
        best = v;
        first_best = c;
      }
    }
    if (best > j(t)) {
      t = first_best;
      continue;
    }
    // t is a window maximizer; first_best is the smallest one. Its left
    // neighbour may sit outside the window, so check before stopping.
    if (first_best > 0 && j(first_best - 1) > best) {
      t = first_best - 1;
      continue;
    }
    t = first_best;
    break;
  }
  out.threshold = t;
  out.objective = j(t);
  return out;
}

struct OracleThreshold {
  int threshold = 0;
  double objective = 0.0;
};

/// Exhaustive scan of J over every integer threshold; smallest t on ties.
inline OracleThreshold oracle_best_threshold(const Histogram256& hist, double complexity,
                                             const ObjectiveWeights& weights) {
  const ThresholdObjective j(hist, effective_weights(weights, complexity));
  OracleThreshold best{0, j(0.0)};
  for (int t = 1; t < 256; ++t) {
    const double v = j(t);
    if (v > best.objective) best = {t, v};
  }
  return best;
}

enum class ThresholdSource {
  Own,     // optimized on the leaf's own histogram
  Parent,  // homogeneous leaf, threshold taken from its parent region
};

struct ThresholdEntry {
  Rect rect;
  ThresholdSource source = ThresholdSource::Own;
  Rect source_rect;  // region whose histogram produced the threshold
  LeafThreshold result;
};

struct ThresholdReport {
  std::vector<ThresholdEntry> entries;  // one per leaf, in leaves() order
};

struct TreeOptimizeOptions {
  /// Leaves whose variance does not exceed the split threshold carry no
  /// usable two-class structure; when set they reuse the parent's threshold.
  bool inherit_homogeneous = true;
  double var_threshold = SplitPolicy{}.var_threshold;
  /// Worker threads for per-region optimization; 0 picks hardware concurrency.
  unsigned threads = 0;
};

/// Runs optimize_leaf over a tree. Output order follows leaves() regardless of
/// how the work is scheduled.
inline ThresholdReport optimize_tree(const QuadTree& tree, const ObjectiveWeights& weights,
                                     const SimplexParams& params = {}, const TreeOptimizeOptions& options = {}) {
  params.validate();
  effective_weights(weights, 0.0);  // validates

  struct Job {
    const RegionNode* leaf;
    const RegionNode* source;
  };
  std::vector<Job> jobs;
  const auto collect = [&](const auto& self, const RegionNode& node, const RegionNode* parent) -> void {
    if (node.is_leaf()) {
      const bool homogeneous = !(node.stats.variance > options.var_threshold);
      const bool inherit = options.inherit_homogeneous && parent != nullptr && homogeneous;
      jobs.push_back({&node, inherit ? parent : &node});
      return;
    }
    for (const auto& child : node.children) self(self, child, &node);
  };
  collect(collect, tree.root, nullptr);

  // Distinct regions to optimize, in first-use order.
  std::vector<const RegionNode*> sources;
  std::vector<std::size_t> source_index(jobs.size());
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    const auto it = std::find(sources.begin(), sources.end(), jobs[i].source);
    source_index[i] = static_cast<std::size_t>(it - sources.begin());
    if (it == sources.end()) sources.push_back(jobs[i].source);
  }

  std::vector<LeafThreshold> results(sources.size());
  const auto work = [&](std::size_t i) {
    const RegionNode& n = *sources[i];
    results[i] = optimize_leaf(n.hist, region_complexity(n), weights, params);
  };

  unsigned threads = options.threads == 0 ? std::max(1u, std::thread::hardware_concurrency()) : options.threads;
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, sources.size()));
  if (threads <= 1) {
    for (std::size_t i = 0; i < sources.size(); ++i) work(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    pool.reserve(threads);
    for (unsigned w = 0; w < threads; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < sources.size(); i = next++) work(i);
      });
    }
  }

  ThresholdReport report;
  report.entries.reserve(jobs.size());
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    const bool own = jobs[i].source == jobs[i].leaf;
    report.entries.push_back({jobs[i].leaf->rect, own ? ThresholdSource::Own : ThresholdSource::Parent,
                              jobs[i].source->rect, results[source_index[i]]});
  }
  return report;
}

/// Stitches per-leaf binarizations into a full mask: intensity <= threshold
/// maps to 0 (background), everything else to 255.
inline GrayImage segment(const GrayImage& img, const QuadTree& tree, const ThresholdReport& report) {
  if (tree.width != img.width() || tree.height != img.height()) {
    throw Error(ErrorCategory::DimensionMismatch, "tree dimensions differ from image");
  }
  const auto leaf_nodes = leaves(tree);
  if (leaf_nodes.size() != report.entries.size()) {
    throw Error(ErrorCategory::ReportTreeMismatch, "report has " + std::to_string(report.entries.size()) +
                                                       " entries, tree has " + std::to_string(leaf_nodes.size()) +
                                                       " leaves");
  }
  GrayImage mask(img.width(), img.height(), 0);
  for (std::size_t i = 0; i < leaf_nodes.size(); ++i) {
    const Rect& r = leaf_nodes[i]->rect;
    const auto& entry = report.entries[i];
    if (!(entry.rect == r)) throw Error(ErrorCategory::ReportTreeMismatch, "leaf rect mismatch at entry " + std::to_string(i));
    const int t = entry.result.threshold;
    if (t < 0 || t > 255) throw Error(ErrorCategory::ReportTreeMismatch, "threshold out of range");
    for (int y = r.y0; y < r.y0 + r.h; ++y) {
      for (int x = r.x0; x < r.x0 + r.w; ++x) mask.at(x, y) = img.at(x, y) <= t ? 0 : 255;
    }
  }
  return mask;
}

/// Single threshold applied to every pixel.
inline GrayImage apply_threshold(const GrayImage& img, int threshold) {
  GrayImage mask(img.width(), img.height(), 0);
  const auto src = img.pixels();
  auto dst = mask.pixels();
  for (std::size_t i = 0; i < src.size(); ++i) dst[i] = src[i] <= threshold ? 0 : 255;
  return mask;
}

}  // namespace qtseg
