#pragma once

#include <algorithm>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "qtseg/error.hpp"
#include "qtseg/kgda.hpp"
#include "qtseg/phantom.hpp"
#include "qtseg/pipeline.hpp"
#include "qtseg/stratify.hpp"
#include "qtseg/threshopt.hpp"

namespace qtseg {

using Json = nlohmann::ordered_json;

inline Json to_json(const Rect& r) { return Json{{"x0", r.x0}, {"y0", r.y0}, {"w", r.w}, {"h", r.h}}; }

inline Json to_json(const RegionNode& node) {
  Json j;
  j["rect"] = to_json(node.rect);
  j["depth"] = node.depth;
  j["stats"] = Json{{"count", node.stats.count},
                    {"mean", node.stats.mean},
                    {"variance", node.stats.variance},
                    {"entropy", node.stats.entropy}};
  Json children = Json::array();
  for (const auto& c : node.children) children.push_back(to_json(c));
  j["children"] = std::move(children);
  return j;
}

inline Json to_json(const ThresholdEntry& e) {
  return Json{{"rect", to_json(e.rect)},
              {"threshold", e.result.threshold},
              {"source", e.source == ThresholdSource::Own ? "own" : "parent"},
              {"source_rect", to_json(e.source_rect)},
              {"t_star", e.result.t_star},
              {"rounded", e.result.rounded},
              {"objective", e.result.objective},
              {"w_var", e.result.weights.w_var},
              {"w_ent", e.result.weights.w_ent},
              {"iterations", e.result.iterations},
              {"converged", e.result.converged}};
}

/// Segmentation report: settings, nested tree, and one record per leaf.
inline Json segmentation_report(const SegmentationResult& result, const SegmentOptions& options) {
  Json j;
  j["image"] = Json{{"width", result.tree.width}, {"height", result.tree.height}};
  j["policy"] = Json{{"max_depth", options.policy.max_depth},
                     {"min_side", options.policy.min_side},
                     {"var_threshold", options.policy.var_threshold}};
  j["weights"] = Json{{"w_var", options.weights.w_var},
                      {"w_ent", options.weights.w_ent},
                      {"adaptive", options.weights.adaptive}};
  j["simplex"] = Json{{"max_iter", options.simplex.max_iter},
                      {"diameter_tol", options.simplex.diameter_tol},
                      {"reflection", options.simplex.reflection},
                      {"expansion", options.simplex.expansion},
                      {"contraction", options.simplex.contraction},
                      {"shrink", options.simplex.shrink}};
  j["inherit_homogeneous"] = options.inherit_homogeneous;
  j["tree"] = to_json(result.tree.root);
  Json leaves_json = Json::array();
  int lo = 255;
  int hi = 0;
  for (const auto& e : result.report.entries) {
    leaves_json.push_back(to_json(e));
    lo = std::min(lo, e.result.threshold);
    hi = std::max(hi, e.result.threshold);
  }
  j["summary"] = Json{{"leaf_count", result.report.entries.size()}, {"min_threshold", lo}, {"max_threshold", hi}};
  j["leaves"] = std::move(leaves_json);
  return j;
}

namespace detail {

template <class T>
T require(const Json& j, const char* key, ErrorCategory category) {
  if (!j.contains(key)) throw Error(category, std::string("missing field '") + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw Error(category, std::string("field '") + key + "' has the wrong type");
  }
}

template <class T>
T optional_field(const Json& j, const char* key, T fallback, ErrorCategory category) {
  return j.contains(key) ? require<T>(j, key, category) : fallback;
}

inline Json parse_json(std::string_view text, ErrorCategory category) {
  try {
    return Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(category, std::string("invalid JSON: ") + e.what());
  }
}

}  // namespace detail

/// Phantom description, e.g.
///   {"width": 256, "height": 256, "background": 60, "gradient": 40,
///    "noise_sigma": 8, "seed": 7,
///    "shapes": [{"type": "ellipse", "cx": 128, "cy": 128, "rx": 50, "ry": 30, "intensity": 120},
///               {"type": "rectangle", "cx": 40, "cy": 40, "width": 20, "height": 10, "intensity": 200}]}
inline PhantomSpec parse_phantom_spec(std::string_view text) {
  constexpr auto cat = ErrorCategory::InvalidSpec;
  const Json j = detail::parse_json(text, cat);
  if (!j.is_object()) throw Error(cat, "phantom spec must be a JSON object");
  PhantomSpec spec;
  spec.width = detail::require<int>(j, "width", cat);
  spec.height = detail::require<int>(j, "height", cat);
  spec.background = detail::optional_field<int>(j, "background", 0, cat);
  spec.gradient = detail::optional_field<double>(j, "gradient", 0.0, cat);
  spec.noise_sigma = detail::optional_field<double>(j, "noise_sigma", 0.0, cat);
  spec.seed = detail::optional_field<std::uint64_t>(j, "seed", 0, cat);
  if (j.contains("shapes")) {
    if (!j["shapes"].is_array()) throw Error(cat, "'shapes' must be an array");
    for (const auto& s : j["shapes"]) {
      PhantomShape shape;
      const auto type = detail::require<std::string>(s, "type", cat);
      shape.cx = detail::require<double>(s, "cx", cat);
      shape.cy = detail::require<double>(s, "cy", cat);
      shape.intensity = detail::require<int>(s, "intensity", cat);
      if (type == "ellipse") {
        shape.kind = PhantomShape::Kind::Ellipse;
        shape.rx = detail::require<double>(s, "rx", cat);
        shape.ry = detail::require<double>(s, "ry", cat);
      } else if (type == "rectangle") {
        shape.kind = PhantomShape::Kind::Rectangle;
        shape.rx = detail::require<double>(s, "width", cat) / 2.0;
        shape.ry = detail::require<double>(s, "height", cat) / 2.0;
      } else {
        throw Error(cat, "unknown shape type '" + type + "'");
      }
      spec.shapes.push_back(shape);
    }
  }
  spec.validate();
  return spec;
}

inline Json to_json(const PhantomSpec& spec) {
  Json shapes = Json::array();
  for (const auto& s : spec.shapes) {
    if (s.kind == PhantomShape::Kind::Ellipse) {
      shapes.push_back(Json{{"type", "ellipse"}, {"cx", s.cx}, {"cy", s.cy}, {"rx", s.rx}, {"ry", s.ry}, {"intensity", s.intensity}});
    } else {
      shapes.push_back(Json{{"type", "rectangle"}, {"cx", s.cx}, {"cy", s.cy}, {"width", 2.0 * s.rx},
                            {"height", 2.0 * s.ry}, {"intensity", s.intensity}});
    }
  }
  return Json{{"width", spec.width},       {"height", spec.height},           {"background", spec.background},
              {"gradient", spec.gradient}, {"noise_sigma", spec.noise_sigma}, {"seed", spec.seed},
              {"shapes", std::move(shapes)}};
}

inline constexpr std::string_view kModelFormat = "qtseg-gda-model";

namespace detail {

inline Json matrix_rows(const MatrixXd& m) {
  Json rows = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    Json row = Json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline MatrixXd matrix_from_rows(const Json& j, Eigen::Index expect_rows, Eigen::Index expect_cols, const char* what) {
  constexpr auto cat = ErrorCategory::InvalidSpec;
  if (!j.is_array() || static_cast<Eigen::Index>(j.size()) != expect_rows) {
    throw Error(cat, std::string("'") + what + "' has the wrong number of rows");
  }
  MatrixXd m(expect_rows, expect_cols);
  for (Eigen::Index r = 0; r < expect_rows; ++r) {
    const auto& row = j[static_cast<std::size_t>(r)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != expect_cols) {
      throw Error(cat, std::string("'") + what + "' has a row of the wrong length");
    }
    for (Eigen::Index c = 0; c < expect_cols; ++c) {
      const auto& v = row[static_cast<std::size_t>(c)];
      if (!v.is_number()) throw Error(cat, std::string("'") + what + "' contains a non-number");
      m(r, c) = v.get<double>();
    }
  }
  return m;
}

}  // namespace detail

inline Json to_json(const GdaModel& model) {
  Json j;
  j["format"] = kModelFormat;
  j["version"] = 1;
  j["kernel"] = Json{{"kind", kernel_name(model.kernel.kind)},
                     {"gamma", model.kernel.gamma},
                     {"degree", model.kernel.degree},
                     {"coef", model.kernel.coef}};
  j["extraction"] = extraction_name(model.extraction);
  j["regularization"] = model.regularization;
  j["requested"] = model.requested;
  j["rank_limited"] = model.rank_limited;
  j["class_labels"] = model.class_labels;
  std::vector<int> raw_labels;
  raw_labels.reserve(model.labels.size());
  for (int l : model.labels) raw_labels.push_back(model.class_labels[static_cast<std::size_t>(l)]);
  j["labels"] = raw_labels;
  j["samples"] = detail::matrix_rows(model.samples);
  j["eta"] = std::vector<double>(model.eta.data(), model.eta.data() + model.eta.size());
  j["sigma"] = detail::matrix_rows(model.sigma.transpose());  // one row per discriminant
  j["class_means"] = detail::matrix_rows(model.class_means);
  return j;
}

inline std::string serialize_model(const GdaModel& model) { return to_json(model).dump(2) + "\n"; }

namespace detail {

inline GdaModel parse_model_document(const Json& j) {
  constexpr auto cat = ErrorCategory::InvalidSpec;
  if (!j.is_object() || detail::optional_field<std::string>(j, "format", "", cat) != kModelFormat) {
    throw Error(cat, "not a GDA model document");
  }
  GdaModel m;
  const Json& kj = j.at("kernel");
  m.kernel.kind = parse_kernel_kind(detail::require<std::string>(kj, "kind", cat));
  m.kernel.gamma = detail::require<double>(kj, "gamma", cat);
  m.kernel.degree = detail::require<int>(kj, "degree", cat);
  m.kernel.coef = detail::require<double>(kj, "coef", cat);
  m.kernel.validate();
  m.extraction = parse_extraction(detail::require<std::string>(j, "extraction", cat));
  m.regularization = detail::require<double>(j, "regularization", cat);
  m.requested = detail::require<int>(j, "requested", cat);
  m.rank_limited = detail::require<bool>(j, "rank_limited", cat);
  m.class_labels = detail::require<std::vector<int>>(j, "class_labels", cat);
  const auto raw_labels = detail::require<std::vector<int>>(j, "labels", cat);
  const auto eta = detail::require<std::vector<double>>(j, "eta", cat);

  const auto rows = static_cast<Eigen::Index>(raw_labels.size());
  const Json& samples = j.at("samples");
  if (!samples.is_array() || samples.empty() || !samples[0].is_array()) throw Error(cat, "'samples' must be a nonempty matrix");
  const auto n = static_cast<Eigen::Index>(samples[0].size());
  const auto d = static_cast<Eigen::Index>(eta.size());
  const auto z = static_cast<Eigen::Index>(m.class_labels.size());
  m.samples = detail::matrix_from_rows(samples, rows, n, "samples");
  m.sigma = detail::matrix_from_rows(j.at("sigma"), d, rows, "sigma").transpose();
  m.class_means = detail::matrix_from_rows(j.at("class_means"), z, d, "class_means");
  m.eta = Eigen::Map<const VectorXd>(eta.data(), d);

  m.labels.reserve(raw_labels.size());
  for (int raw : raw_labels) {
    const auto it = std::find(m.class_labels.begin(), m.class_labels.end(), raw);
    if (it == m.class_labels.end()) throw Error(cat, "label " + std::to_string(raw) + " not among class_labels");
    m.labels.push_back(static_cast<int>(it - m.class_labels.begin()));
  }
  if (m.classes() < 2 || m.discriminants() < 1) throw Error(cat, "model needs at least two classes and one discriminant");
  return m;
}

}  // namespace detail

inline GdaModel parse_model(std::string_view text) {
  const Json j = detail::parse_json(text, ErrorCategory::InvalidSpec);
  try {
    return detail::parse_model_document(j);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCategory::InvalidSpec, std::string("malformed model document: ") + e.what());
  }
}

}  // namespace qtseg
