// Acceptance gate: one PASS/FAIL line per criterion, exit status 1 if any fails.
#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <random>
#include <string>

#include "oracles.hpp"
#include "qtseg/qtseg.hpp"

using namespace qtseg;
using Eigen::MatrixXd;
using Eigen::VectorXd;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

int failures = 0;

void report(int id, bool pass, const std::string& detail) {
  std::printf("criterion %d: %s  %s\n", id, pass ? "PASS" : "FAIL", detail.c_str());
  std::fflush(stdout);
  if (!pass) ++failures;
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

void criterion_threshold_oracle() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> m1(30, 100), m2(150, 230), sd(5, 25), wt(0.25, 0.75);
  const ObjectiveWeights weights;
  int within99 = 0, within95 = 0, local_max = 0;
  double worst = 1.0;
  const int n = 500;
  for (int i = 0; i < n; ++i) {
    const double a = m1(rng), b = m2(rng), s1 = sd(rng), s2 = sd(rng), w = wt(rng);
    const Histogram256 h = oracle::sampled_bimodal(rng, a, s1, b, s2, w, 4096);
    const double complexity = std::clamp(stats_from_histogram(h).entropy / 8.0, 0.0, 1.0);
    const LeafThreshold leaf = optimize_leaf(h, complexity, weights);
    const OracleThreshold best = oracle_best_threshold(h, complexity, weights);
    const double ratio = best.objective > 0 ? leaf.objective / best.objective : 1.0;
    worst = std::min(worst, ratio);
    within99 += ratio >= 0.99;
    within95 += ratio >= 0.95;
    const EffectiveWeights ew = effective_weights(weights, complexity);
    const long double here = oracle::discrete_objective(h, leaf.threshold, ew);
    const bool left = leaf.threshold == 0 || oracle::discrete_objective(h, leaf.threshold - 1, ew) <= here;
    const bool right = leaf.threshold == 255 || oracle::discrete_objective(h, leaf.threshold + 1, ew) <= here;
    local_max += left && right;
  }
  const double secs = seconds_since(t0);
  const bool pass = within99 >= 0.95 * n && within95 == n && local_max == n && secs < 5.0;
  report(1, pass,
         fmt("threshold oracle: %d/500 >= 0.99x, %d/500 >= 0.95x (worst ratio %.6f), %d/500 integer local maxima, %.2f s",
             within99, within95, worst, local_max, secs));
}

void criterion_tiling() {
  std::mt19937_64 rng(2025);
  std::uniform_int_distribution<int> side(1, 300), depth(0, 7), min_side(2, 40), kind(0, 1);
  std::uniform_real_distribution<double> var(0.0, 3000.0);
  int exact = 0;
  double worst = 0.0;
  for (int i = 0; i < 200; ++i) {
    const int w = side(rng), h = side(rng);
    const GrayImage img = kind(rng) ? oracle::random_blocky_image(rng, w, h) : oracle::random_image(rng, w, h);
    const SplitPolicy policy{depth(rng), min_side(rng), var(rng)};
    const QuadTree tree = build_quadtree(img, policy);
    const auto audit = oracle::audit_tree(img, tree);
    worst = std::max(worst, audit.max_rel_error);
    exact += audit.coverage_exact && audit.structure_ok && audit.count_exact && audit.max_rel_error <= 1e-9;
  }
  report(2, exact == 200, fmt("quadtree tiling: %d/200 exact coverage and stats (max relative stat error %.2e)", exact, worst));
}

void criterion_phantom() {
  const auto t0 = Clock::now();
  PhantomSpec s;
  s.width = 512;
  s.height = 512;
  s.background = 70;
  s.gradient = 40;
  s.noise_sigma = 8;
  s.seed = 7;
  s.shapes = {{PhantomShape::Kind::Ellipse, 170, 190, 110, 80, 120}, {PhantomShape::Kind::Ellipse, 350, 340, 90, 120, 120}};
  const Phantom p = generate_phantom(s);
  const auto res = segment_image(p.image);
  const auto ours = compute_metrics(res.mask, p.truth);
  const double secs = seconds_since(t0);
  int t = -1;
  const auto global = compute_metrics(segment_global_oracle(p.image, {}, &t), p.truth);
  const bool pass = ours.distortion <= 0.05 && ours.reliability >= 0.96 && global.reliability < ours.reliability && secs < 3.0;
  report(3, pass,
         fmt("phantom: stratified distortion %.4f Dice %.4f (%zu leaves, %.2f s); global oracle t=%d distortion %.4f Dice %.4f",
             ours.distortion, ours.reliability, res.report.entries.size(), secs, t, global.distortion, global.reliability));
}

struct RandomSet {
  LabeledDataset data;
  KernelSpec spec;
};

RandomSet random_set(std::mt19937_64& rng, int i) {
  std::uniform_int_distribution<int> rows(8, 40), dims(2, 8), classes(2, 4);
  std::normal_distribution<double> n01(0.0, 1.0);
  const int m = rows(rng), n = dims(rng), z = classes(rng);
  std::uniform_int_distribution<int> pick(0, z - 1);
  MatrixXd centers(z, n);
  for (int c = 0; c < z; ++c)
    for (int k = 0; k < n; ++k) centers(c, k) = 3.0 * n01(rng);
  MatrixXd x(m, n);
  std::vector<int> labels;
  for (int r = 0; r < m; ++r) {
    const int c = r < z ? r : pick(rng);
    labels.push_back(c);
    for (int k = 0; k < n; ++k) x(r, k) = centers(c, k) + n01(rng);
  }
  KernelSpec spec;
  spec.kind = static_cast<KernelKind>(i % 3);
  return {make_dataset(std::move(x), labels), spec};
}

void criterion_scatter() {
  std::mt19937_64 rng(2026);
  double worst_identity = 0.0, worst_psd = 0.0;
  for (int i = 0; i < 50; ++i) {
    const auto set = random_set(rng, i);
    const MatrixXd k = compute_kernel_matrix(set.data, set.spec);
    const auto s = scatter_matrices(k, set.data.labels, set.data.classes());
    const double identity = (s.total - s.between - s.within).norm() / std::max(s.total.norm(), 1e-30);
    worst_identity = std::max(worst_identity, identity);
    for (const MatrixXd* u : {&s.between, &s.within, &s.total}) {
      const double norm = oracle::spectral_norm(*u);
      if (norm > 0) worst_psd = std::max(worst_psd, -oracle::min_eigenvalue(*u) / norm);
    }
  }
  report(4, worst_identity <= 1e-10 && worst_psd <= 1e-8,
         fmt("scatter identity: max relative defect %.2e, max negative eigenvalue / norm %.2e over 50 datasets",
             worst_identity, worst_psd));
}

oracle::EigenAudit audit_model(const GdaModel& model) {
  const MatrixXd k = compute_kernel_matrix(model.samples, model.kernel);
  return oracle::audit_eigensystem(k, model.labels, model.classes(), model.sigma, model.eta);
}

void criterion_eigensystem() {
  const auto run = [&](Extraction mode, bool multi) {
    oracle::EigenAudit worst;
    std::mt19937_64 local(2027);
    for (int i = 0; i < 50; ++i) {
      const auto set = random_set(local, i);
      const GdaModel model = train_gda(set.data, set.spec, 0, mode);
      if (!multi && model.discriminants() > 1) continue;
      const auto a = audit_model(model);
      worst.max_residual = std::max(worst.max_residual, a.max_residual);
      worst.max_cross = std::max(worst.max_cross, a.max_cross);
      worst.max_norm_error = std::max(worst.max_norm_error, a.max_norm_error);
      worst.sorted = worst.sorted && a.sorted;
    }
    return worst;
  };
  const auto seq = run(Extraction::Sequential, true);
  const auto seq1 = run(Extraction::Sequential, false);
  const auto batch = run(Extraction::Batch, true);
  const bool pass = seq.max_residual <= 1e-8 && seq.max_cross <= 1e-8 && seq.max_norm_error <= 1e-8 && seq.sorted;
  report(5, pass,
         fmt("eigen-system (default sequential, 50 models): residual %.2e, cross %.2e, norm %.2e, sorted %s; "
             "single-axis models residual %.2e; batch mode residual %.2e cross %.2e",
             seq.max_residual, seq.max_cross, seq.max_norm_error, seq.sorted ? "yes" : "no", seq1.max_residual,
             batch.max_residual, batch.max_cross));
}

void criterion_lda() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(2028);
  const auto tt = oracle::gaussian_train_test(rng, 3, 20, 300, 4, 6.0);
  KernelSpec spec;
  spec.kind = KernelKind::Linear;
  const GdaModel model = train_gda(tt.train, spec);
  const auto lda = oracle::classical_lda(tt.train, 2);
  const MatrixXd ours = project_batch(model, tt.test.samples);
  const MatrixXd theirs = lda.project(tt.test.samples);
  double r1 = std::abs(oracle::pearson(ours.col(0), theirs.col(0)));
  double r2 = std::abs(oracle::pearson(ours.col(1), theirs.col(1)));
  int hits = 0, lda_hits = 0;
  for (Eigen::Index i = 0; i < tt.test.size(); ++i) {
    const VectorXd u = tt.test.samples.row(i).transpose();
    hits += nearest_class(model, ours.row(i).transpose()) == tt.test.labels[i];
    lda_hits += lda.classify(u) == tt.test.labels[i];
  }
  const double secs = seconds_since(t0);
  const double acc = hits / static_cast<double>(tt.test.size());
  const double lda_acc = lda_hits / static_cast<double>(tt.test.size());
  const GdaModel batch = train_gda(tt.train, spec, 0, Extraction::Batch);
  const MatrixXd bp = project_batch(batch, tt.test.samples);
  const double b2 = std::abs(oracle::pearson(bp.col(1), theirs.col(1)));
  const bool pass = r1 > 0.999 && r2 > 0.999 && acc >= 0.95 && std::abs(acc - lda_acc) <= 0.02 && secs < 2.0;
  report(6, pass,
         fmt("linear LDA: |r| axis1 %.6f axis2 %.6f (batch-mode axis2 %.6f); held-out accuracy %.4f vs oracle %.4f; %.2f s",
             r1, r2, b2, acc, lda_acc, secs));
}

void criterion_sequential_vs_batch() {
  std::mt19937_64 rng(2029);
  double worst = 0.0;
  int used = 0;
  for (int i = 0; used < 20 && i < 200; ++i) {
    auto set = random_set(rng, i);
    if (set.data.classes() < 3) continue;
    const GdaModel seq = train_gda(set.data, set.spec, 0, Extraction::Sequential);
    const GdaModel batch = train_gda(set.data, set.spec, 0, Extraction::Batch);
    if (batch.discriminants() < 2 || seq.discriminants() != batch.discriminants()) continue;
    bool gapped = true;
    for (Eigen::Index j = 1; j < batch.eta.size(); ++j)
      gapped = gapped && batch.eta(j - 1) - batch.eta(j) > 1e-6 * batch.eta(0);
    if (!gapped) continue;
    worst = std::max(worst, oracle::max_principal_angle(seq.sigma, batch.sigma));
    ++used;
  }
  report(7, used > 0 && worst < 1e-6,
         fmt("sequential vs batch: max principal angle %.3e rad over %d multi-axis datasets", worst, used));
}

int run_cli(const std::string& args) {
  const int status = std::system((std::string(QTSEG_CLI_PATH) + " " + args + " >/dev/null 2>&1").c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

void criterion_determinism() {
  const fs::path dir = fs::temp_directory_path() / ("qtseg_accept_" + std::to_string(::getpid()));
  fs::remove_all(dir);
  fs::create_directories(dir);
  const auto p = [&](const std::string& name) { return (dir / name).string(); };
  write_file(p("spec.json"), R"({"width": 300, "height": 220, "background": 60, "gradient": 30, "noise_sigma": 9,
    "seed": 11, "shapes": [{"type": "ellipse", "cx": 100, "cy": 110, "rx": 60, "ry": 45, "intensity": 130},
                           {"type": "rectangle", "cx": 220, "cy": 90, "width": 40, "height": 30, "intensity": 180}]})");
  std::mt19937_64 rng(2030);
  write_file(p("train.csv"), format_labeled_csv(oracle::gaussian_classes(rng, 3, 15, 3, 4.0), true));
  int codes = 0;
  for (const std::string t : {"a", "b"}) {
    codes += run_cli("phantom " + p("spec.json") + " --image " + p(t + "img.pgm") + " --truth " + p(t + "truth.pgm"));
    codes += run_cli("segment " + p(t + "img.pgm") + " --mask " + p(t + "mask.pgm") + " --report " + p(t + "report.json"));
    codes += run_cli("gda-train " + p("train.csv") + " --header --model " + p(t + "model.json"));
  }
  int same = 0;
  const char* files[] = {"img.pgm", "truth.pgm", "mask.pgm", "report.json", "model.json"};
  for (const char* f : files) {
    const Bytes a = read_file(p(std::string("a") + f)), b = read_file(p(std::string("b") + f));
    same += !a.empty() && a == b;
  }
  fs::remove_all(dir);
  report(8, codes == 0 && same == 5, fmt("determinism: %d/5 outputs byte-identical across two CLI runs", same));
}

void criterion_formats() {
  std::mt19937_64 rng(2031);
  std::uniform_int_distribution<int> side(1, 120), bit(0, 1), rows(2, 30), cols(1, 6), label(-5, 9);
  std::normal_distribution<double> g(0.0, 1.0);
  int pgm = 0, csv = 0, model = 0;
  for (int i = 0; i < 200; ++i) {
    const GrayImage img = oracle::random_image(rng, side(rng), side(rng));
    const Bytes bytes = save_pgm(img);
    const GrayImage back = load_pgm(bytes);
    pgm += back == img && save_pgm(back) == bytes;
  }
  for (int i = 0; i < 200; ++i) {
    const int m = rows(rng), n = cols(rng);
    MatrixXd x(m, n);
    for (int r = 0; r < m; ++r)
      for (int c = 0; c < n; ++c) x(r, c) = g(rng) * std::pow(10.0, (r + 3 * c) % 13 - 6);
    std::vector<int> labels;
    for (int r = 0; r < m; ++r) labels.push_back(label(rng));
    const auto d = make_dataset(std::move(x), labels);
    const bool header = bit(rng);
    const auto back = parse_labeled_csv(format_labeled_csv(d, header), header);
    csv += back.samples == d.samples && back.labels == d.labels && back.class_labels == d.class_labels;
  }
  for (int i = 0; i < 200; ++i) {
    auto set = random_set(rng, i);
    const GdaModel m = train_gda(set.data, set.spec, 0, i % 2 ? Extraction::Batch : Extraction::Sequential);
    const std::string text = serialize_model(m);
    const GdaModel back = parse_model(text);
    model += back.sigma == m.sigma && back.eta == m.eta && back.samples == m.samples &&
             back.class_means == m.class_means && back.labels == m.labels && serialize_model(back) == text;
  }
  report(9, pgm == 200 && csv == 200 && model == 200,
         fmt("format fidelity: PGM %d/200, CSV %d/200, model %d/200 exact round trips", pgm, csv, model));
}

}  // namespace

int main() {
  const std::pair<int, void (*)()> checks[] = {
      {1, criterion_threshold_oracle}, {2, criterion_tiling},      {3, criterion_phantom},
      {4, criterion_scatter},          {5, criterion_eigensystem}, {6, criterion_lda},
      {7, criterion_sequential_vs_batch}, {8, criterion_determinism}, {9, criterion_formats}};
  for (const auto& [id, fn] : checks) {
    try {
      fn();
    } catch (const std::exception& e) {
      report(id, false, std::string("exception: ") + e.what());
    }
  }
  std::printf("%d of 9 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
