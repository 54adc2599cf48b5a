// qtseg: stratified threshold segmentation and kernel discriminant analysis.
//
//   qtseg phantom SPEC.json --image IMG.pgm --truth TRUTH.pgm
//   qtseg segment IMG.pgm --mask MASK.pgm --report REPORT.json [policy/weight/simplex flags]
//   qtseg eval-seg MASK.pgm TRUTH.pgm
//   qtseg gda-train DATA.csv --model MODEL.json [--kernel rbf --gamma G --discriminants D]
//   qtseg gda-project MODEL.json DATA.csv [--output FEATURES.csv]
//   qtseg gda-eval MODEL.json DATA.csv
//
// Failures print "error: <Category>: <message>" on stderr and exit nonzero.

#include <chrono>
#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "qtseg/qtseg.hpp"

namespace {

using namespace qtseg;

std::string read_text(const std::string& path) {
  const Bytes b = read_file(path);
  return std::string(b.begin(), b.end());
}

std::string fixed4(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4f", v);
  return buf;
}

struct PhantomArgs {
  std::string spec;
  std::string image;
  std::string truth;
};

void run_phantom(const PhantomArgs& a) {
  const PhantomSpec spec = parse_phantom_spec(read_text(a.spec));
  const Phantom p = generate_phantom(spec);
  write_file(a.image, save_pgm(p.image));
  write_file(a.truth, save_pgm(p.truth));
  std::cout << "wrote " << a.image << " and " << a.truth << " (" << spec.width << "x" << spec.height << ")\n";
}

struct SegmentArgs {
  std::string input;
  std::string mask;
  std::string report;
  SegmentOptions options;
  bool no_adaptive = false;
  bool no_inherit = false;
  bool timing = false;
};

void run_segment(SegmentArgs a) {
  a.options.weights.adaptive = !a.no_adaptive;
  a.options.inherit_homogeneous = !a.no_inherit;
  const GrayImage img = load_pgm(read_file(a.input));
  const auto start = std::chrono::steady_clock::now();
  const SegmentationResult result = segment_image(img, a.options);
  const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();

  Json report = segmentation_report(result, a.options);
  // Wall time varies run to run, so it only enters the report on request.
  if (a.timing) report["wall_time_ms"] = ms;
  write_file(a.mask, save_pgm(result.mask));
  write_file(a.report, report.dump(2) + "\n");
  std::cout << "leaves=" << result.report.entries.size() << " wall_time_ms=" << fixed4(ms) << "\n";
}

struct EvalSegArgs {
  std::string mask;
  std::string truth;
};

void run_eval_seg(const EvalSegArgs& a) {
  const SegMetrics m = compute_metrics(load_pgm(read_file(a.mask)), load_pgm(read_file(a.truth)));
  std::cout << "{\n"
            << "  \"distortion\": " << fixed4(m.distortion) << ",\n"
            << "  \"reliability\": " << fixed4(m.reliability) << ",\n"
            << "  \"pixels\": " << m.pixels << ",\n"
            << "  \"mismatched\": " << m.mismatched << ",\n"
            << "  \"true_positive\": " << m.true_positive << ",\n"
            << "  \"predicted_foreground\": " << m.predicted_foreground << ",\n"
            << "  \"truth_foreground\": " << m.truth_foreground << ",\n"
            << "  \"definitions\": {\n"
            << "    \"distortion\": \"fraction of pixels whose label differs from the truth\",\n"
            << "    \"reliability\": \"Dice coefficient 2|A and B| / (|A| + |B|) over foreground (255) pixels\"\n"
            << "  }\n"
            << "}\n";
}

struct GdaTrainArgs {
  std::string csv;
  std::string model;
  bool header = false;
  std::string kernel = "rbf";
  double gamma = 0.0;
  int degree = 2;
  double coef = 1.0;
  int discriminants = 0;
  std::string extraction = "sequential";
};

void run_gda_train(const GdaTrainArgs& a) {
  const LabeledDataset data = parse_labeled_csv(read_text(a.csv), a.header);
  KernelSpec spec;
  spec.kind = parse_kernel_kind(a.kernel);
  spec.gamma = a.gamma;
  spec.degree = a.degree;
  spec.coef = a.coef;
  const GdaModel model = train_gda(data, spec, a.discriminants, parse_extraction(a.extraction));
  write_file(a.model, serialize_model(model));
  Json summary{{"discriminants", model.discriminants()},
               {"requested", model.requested},
               {"rank_limited", model.rank_limited},
               {"regularization", model.regularization},
               {"eta", std::vector<double>(model.eta.data(), model.eta.data() + model.eta.size())}};
  std::cout << summary.dump() << "\n";
}

struct GdaDataArgs {
  std::string model;
  std::string csv;
  bool header = false;
  std::string output;
};

// Splits rows into features and, when the row has one extra column, a label.
struct ProjectInput {
  MatrixXd features;
  std::optional<std::vector<int>> labels;
};

ProjectInput read_projection_input(const GdaModel& model, const std::string& path, bool header) {
  const CsvTable table = parse_csv(read_text(path), header);
  const auto n = static_cast<std::size_t>(model.input_dimension());
  ProjectInput in;
  in.features.resize(static_cast<Eigen::Index>(table.rows.size()), model.input_dimension());
  if (table.rows.empty()) return in;
  const auto width = table.rows.front().size();
  if (width != n && width != n + 1) {
    throw Error(ErrorCategory::DimensionMismatch,
                "rows have " + std::to_string(width) + " columns, model expects " + std::to_string(n) + " features");
  }
  if (width == n + 1) in.labels.emplace();
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const auto& row = table.rows[i];
    for (std::size_t c = 0; c < n; ++c) in.features(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = row[c];
    if (in.labels) {
      if (row[n] != std::floor(row[n])) throw Error(ErrorCategory::CsvParse, "label must be an integer");
      in.labels->push_back(static_cast<int>(row[n]));
    }
  }
  return in;
}

void emit(const std::string& path, const std::string& text) {
  if (path.empty()) {
    std::cout << text;
  } else {
    write_file(path, text);
  }
}

void run_gda_project(const GdaDataArgs& a) {
  const GdaModel model = parse_model(read_text(a.model));
  const ProjectInput in = read_projection_input(model, a.csv, a.header);
  const MatrixXd f = project_batch(model, in.features);
  std::string out;
  for (Eigen::Index k = 0; k < f.cols(); ++k) out += (k ? ",f" : "f") + std::to_string(k + 1);
  if (in.labels) out += ",label";
  out += "\n";
  for (Eigen::Index i = 0; i < f.rows(); ++i) {
    for (Eigen::Index k = 0; k < f.cols(); ++k) out += (k ? "," : "") + format_double(f(i, k));
    if (in.labels) out += "," + std::to_string((*in.labels)[static_cast<std::size_t>(i)]);
    out += "\n";
  }
  emit(a.output, out);
}

void run_gda_eval(const GdaDataArgs& a) {
  const GdaModel model = parse_model(read_text(a.model));
  const ProjectInput in = read_projection_input(model, a.csv, a.header);
  if (!in.labels) throw Error(ErrorCategory::CsvParse, "evaluation needs a label column");
  const MatrixXd f = project_batch(model, in.features);
  const auto z = static_cast<std::size_t>(model.classes());
  std::vector<std::vector<int>> confusion(z, std::vector<int>(z, 0));
  int correct = 0;
  int unknown = 0;
  for (Eigen::Index i = 0; i < f.rows(); ++i) {
    const int predicted = nearest_class(model, f.row(i).transpose());
    const int raw = (*in.labels)[static_cast<std::size_t>(i)];
    const auto it = std::find(model.class_labels.begin(), model.class_labels.end(), raw);
    if (it == model.class_labels.end()) {
      ++unknown;
      continue;
    }
    const auto truth = static_cast<std::size_t>(it - model.class_labels.begin());
    ++confusion[truth][static_cast<std::size_t>(predicted)];
    correct += truth == static_cast<std::size_t>(predicted);
  }
  const double accuracy = f.rows() > 0 ? static_cast<double>(correct) / static_cast<double>(f.rows()) : 0.0;
  Json report{{"samples", f.rows()},
              {"correct", correct},
              {"accuracy", accuracy},
              {"unknown_labels", unknown},
              {"class_labels", model.class_labels},
              {"confusion", confusion},
              {"confusion_layout", "rows are true classes, columns are predicted classes"}};
  emit(a.output, report.dump(2) + "\n");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Quadtree-stratified threshold segmentation and kernel discriminant analysis"};
  app.require_subcommand(1);

  PhantomArgs phantom;
  auto* cmd_phantom = app.add_subcommand("phantom", "Render a synthetic phantom and its ground-truth mask");
  cmd_phantom->add_option("spec", phantom.spec, "Phantom spec (JSON)")->required();
  cmd_phantom->add_option("--image", phantom.image, "Output image (P5)")->required();
  cmd_phantom->add_option("--truth", phantom.truth, "Output ground-truth mask (P5)")->required();

  SegmentArgs seg;
  auto* cmd_segment = app.add_subcommand("segment", "Stratify, optimize per-subdomain thresholds, write the mask");
  cmd_segment->add_option("input", seg.input, "Input image (PGM)")->required();
  cmd_segment->add_option("--mask", seg.mask, "Output mask (P5)")->required();
  cmd_segment->add_option("--report", seg.report, "Output report (JSON)")->required();
  cmd_segment->add_option("--max-depth", seg.options.policy.max_depth, "Maximum quadtree depth")->capture_default_str();
  cmd_segment->add_option("--min-side", seg.options.policy.min_side, "Minimum child side in pixels")->capture_default_str();
  cmd_segment->add_option("--var-threshold", seg.options.policy.var_threshold, "Split when variance exceeds this")
      ->capture_default_str();
  cmd_segment->add_option("--w-var", seg.options.weights.w_var, "Between-class variance weight")->capture_default_str();
  cmd_segment->add_option("--w-ent", seg.options.weights.w_ent, "Entropy weight")->capture_default_str();
  cmd_segment->add_flag("--no-adaptive", seg.no_adaptive, "Use fixed weights instead of complexity-scaled ones");
  cmd_segment->add_option("--max-iter", seg.options.simplex.max_iter, "Simplex iteration cap")->capture_default_str();
  cmd_segment->add_option("--diameter-tol", seg.options.simplex.diameter_tol, "Simplex diameter tolerance")
      ->capture_default_str();
  cmd_segment->add_option("--reflection", seg.options.simplex.reflection)->capture_default_str();
  cmd_segment->add_option("--expansion", seg.options.simplex.expansion)->capture_default_str();
  cmd_segment->add_option("--contraction", seg.options.simplex.contraction)->capture_default_str();
  cmd_segment->add_option("--shrink", seg.options.simplex.shrink)->capture_default_str();
  cmd_segment->add_flag("--no-inherit", seg.no_inherit, "Homogeneous leaves keep their own threshold");
  cmd_segment->add_option("--threads", seg.options.threads, "Worker threads (0 = hardware)")->capture_default_str();
  cmd_segment->add_flag("--timing", seg.timing, "Record wall time in the report");

  EvalSegArgs eval;
  auto* cmd_eval = app.add_subcommand("eval-seg", "Distortion and Dice reliability of a mask against ground truth");
  cmd_eval->add_option("mask", eval.mask, "Binary mask (PGM)")->required();
  cmd_eval->add_option("truth", eval.truth, "Ground-truth mask (PGM)")->required();

  GdaTrainArgs train;
  auto* cmd_train = app.add_subcommand("gda-train", "Train a kernel discriminant model from labeled CSV");
  cmd_train->add_option("csv", train.csv, "Samples: n feature columns then an integer label")->required();
  cmd_train->add_option("--model", train.model, "Output model (JSON)")->required();
  cmd_train->add_flag("--header", train.header, "First CSV line is a header");
  cmd_train->add_option("--kernel", train.kernel, "linear | rbf | polynomial")->capture_default_str();
  cmd_train->add_option("--gamma", train.gamma, "RBF gamma (default 1/n)");
  cmd_train->add_option("--degree", train.degree, "Polynomial degree")->capture_default_str();
  cmd_train->add_option("--coef", train.coef, "Polynomial offset")->capture_default_str();
  cmd_train->add_option("--discriminants", train.discriminants, "Discriminant count (default Z-1)");
  cmd_train->add_option("--extraction", train.extraction, "sequential | batch")->capture_default_str();

  GdaDataArgs project_args;
  auto* cmd_project = app.add_subcommand("gda-project", "Project CSV samples onto a model's discriminants");
  cmd_project->add_option("model", project_args.model, "Model (JSON)")->required();
  cmd_project->add_option("csv", project_args.csv, "Samples, label column optional")->required();
  cmd_project->add_flag("--header", project_args.header, "First CSV line is a header");
  cmd_project->add_option("--output", project_args.output, "Features CSV (stdout when omitted)");

  GdaDataArgs eval_args;
  auto* cmd_gda_eval = app.add_subcommand("gda-eval", "Nearest-class-mean accuracy on labeled CSV");
  cmd_gda_eval->add_option("model", eval_args.model, "Model (JSON)")->required();
  cmd_gda_eval->add_option("csv", eval_args.csv, "Labeled samples")->required();
  cmd_gda_eval->add_flag("--header", eval_args.header, "First CSV line is a header");
  cmd_gda_eval->add_option("--output", eval_args.output, "Report (stdout when omitted)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: Usage: " << e.what() << "\n";
    return 2;
  }

  try {
    if (*cmd_phantom) run_phantom(phantom);
    else if (*cmd_segment) run_segment(seg);
    else if (*cmd_eval) run_eval_seg(eval);
    else if (*cmd_train) run_gda_train(train);
    else if (*cmd_project) run_gda_project(project_args);
    else if (*cmd_gda_eval) run_gda_eval(eval_args);
  } catch (const qtseg::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: Internal: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
