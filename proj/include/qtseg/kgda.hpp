#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <Eigen/QR>

#include "qtseg/error.hpp"

namespace qtseg {

using Eigen::MatrixXd;
using Eigen::VectorXd;

/// M samples of dimension n (one per row), each tagged with a class index in
/// [0, Z). class_labels maps a class index back to the user-facing label.
struct LabeledDataset {
  MatrixXd samples;
  std::vector<int> labels;
  std::vector<int> class_labels;

  int classes() const noexcept { return static_cast<int>(class_labels.size()); }
  Eigen::Index size() const noexcept { return samples.rows(); }
  Eigen::Index dimension() const noexcept { return samples.cols(); }

  std::vector<int> class_counts() const {
    std::vector<int> counts(class_labels.size(), 0);
    for (int l : labels) {
      if (l < 0 || l >= classes()) throw Error(ErrorCategory::InvalidDataset, "label index out of range");
      ++counts[static_cast<std::size_t>(l)];
    }
    return counts;
  }

  void validate() const {
    if (static_cast<Eigen::Index>(labels.size()) != samples.rows()) {
      throw Error(ErrorCategory::InvalidDataset, "label count differs from sample count");
    }
    if (samples.rows() == 0 || samples.cols() == 0) throw Error(ErrorCategory::InvalidDataset, "dataset is empty");
    if (!samples.allFinite()) throw Error(ErrorCategory::InvalidDataset, "non-finite sample value");
    if (classes() < 2) throw Error(ErrorCategory::InvalidDataset, "at least two classes are required");
    const auto counts = class_counts();
    for (std::size_t i = 0; i < counts.size(); ++i) {
      if (counts[i] == 0) {
        throw Error(ErrorCategory::EmptyClass, "class " + std::to_string(class_labels[i]) + " has no samples");
      }
    }
  }
};

/// Builds a dataset from raw integer labels; classes are the distinct label
/// values in ascending order.
inline LabeledDataset make_dataset(MatrixXd samples, const std::vector<int>& raw_labels) {
  std::map<int, int> index;
  for (int l : raw_labels) index.emplace(l, 0);
  LabeledDataset data;
  data.samples = std::move(samples);
  for (auto& [label, idx] : index) {
    idx = static_cast<int>(data.class_labels.size());
    data.class_labels.push_back(label);
  }
  data.labels.reserve(raw_labels.size());
  for (int l : raw_labels) data.labels.push_back(index.at(l));
  return data;
}

enum class KernelKind { Linear, Rbf, Polynomial };

inline std::string_view kernel_name(KernelKind k) noexcept {
  switch (k) {
    case KernelKind::Linear: return "linear";
    case KernelKind::Rbf: return "rbf";
    case KernelKind::Polynomial: return "polynomial";
  }
  return "linear";
}

inline KernelKind parse_kernel_kind(std::string_view name) {
  if (name == "linear") return KernelKind::Linear;
  if (name == "rbf") return KernelKind::Rbf;
  if (name == "polynomial" || name == "poly") return KernelKind::Polynomial;
  throw Error(ErrorCategory::InvalidArgument, "unknown kernel '" + std::string(name) + "'");
}

struct KernelSpec {
  KernelKind kind = KernelKind::Rbf;
  double gamma = 0.0;  // rbf width; <= 0 means 1/n
  int degree = 2;
  double coef = 1.0;

  /// Copy with gamma fixed for inputs of dimension n.
  KernelSpec resolved(Eigen::Index n) const {
    KernelSpec out = *this;
    if (kind == KernelKind::Rbf && !(gamma > 0.0)) out.gamma = 1.0 / static_cast<double>(std::max<Eigen::Index>(n, 1));
    out.validate();
    return out;
  }

  void validate() const {
    if (kind == KernelKind::Rbf && (!(gamma > 0.0) || !std::isfinite(gamma))) {
      throw Error(ErrorCategory::InvalidArgument, "rbf gamma must be positive");
    }
    if (kind == KernelKind::Polynomial && degree < 1) {
      throw Error(ErrorCategory::InvalidArgument, "polynomial degree must be >= 1");
    }
    if (kind == KernelKind::Polynomial && !std::isfinite(coef)) {
      throw Error(ErrorCategory::InvalidArgument, "polynomial coef must be finite");
    }
  }

  template <class A, class B>
  double operator()(const Eigen::MatrixBase<A>& u, const Eigen::MatrixBase<B>& v) const {
    switch (kind) {
      case KernelKind::Linear: return u.dot(v);
      case KernelKind::Rbf: return std::exp(-gamma * (u - v).squaredNorm());
      case KernelKind::Polynomial: return std::pow(u.dot(v) + coef, degree);
    }
    return 0.0;
  }
};

/// K(a, b) = k(u_a, u_b); the upper triangle is evaluated and mirrored so K is
/// exactly symmetric.
inline MatrixXd compute_kernel_matrix(const MatrixXd& samples, const KernelSpec& spec) {
  spec.validate();
  const auto m = samples.rows();
  MatrixXd k(m, m);
  for (Eigen::Index a = 0; a < m; ++a) {
    for (Eigen::Index b = a; b < m; ++b) {
      const double v = spec(samples.row(a).transpose(), samples.row(b).transpose());
      k(a, b) = v;
      k(b, a) = v;
    }
  }
  return k;
}

inline MatrixXd compute_kernel_matrix(const LabeledDataset& data, const KernelSpec& spec) {
  return compute_kernel_matrix(data.samples, spec.resolved(data.dimension()));
}

/// Kernel class means: column i of `classes` is (1/M_i) * sum of K's columns
/// in class i; `global` averages all columns.
struct KernelMeans {
  MatrixXd classes;  // M x Z
  VectorXd global;   // M
};

inline KernelMeans kernel_class_means(const MatrixXd& k, const std::vector<int>& labels, int class_count) {
  const auto m = k.rows();
  if (k.cols() != m || static_cast<Eigen::Index>(labels.size()) != m) {
    throw Error(ErrorCategory::DimensionMismatch, "kernel matrix and labels disagree in size");
  }
  KernelMeans out{MatrixXd::Zero(m, class_count), VectorXd::Zero(m)};
  std::vector<int> counts(static_cast<std::size_t>(class_count), 0);
  for (Eigen::Index j = 0; j < m; ++j) {
    const int c = labels[static_cast<std::size_t>(j)];
    if (c < 0 || c >= class_count) throw Error(ErrorCategory::InvalidDataset, "label index out of range");
    out.classes.col(c) += k.col(j);
    out.global += k.col(j);
    ++counts[static_cast<std::size_t>(c)];
  }
  for (int c = 0; c < class_count; ++c) {
    if (counts[static_cast<std::size_t>(c)] == 0) {
      throw Error(ErrorCategory::EmptyClass, "class index " + std::to_string(c) + " has no samples");
    }
    out.classes.col(c) /= counts[static_cast<std::size_t>(c)];
  }
  out.global /= static_cast<double>(m);
  return out;
}

/// Between-class, within-class and total kernel scatter (all M x M):
///   Ub = sum_i (M_i/M) (d_i - d_0)(d_i - d_0)^T
///   Uw = (1/M) sum_j (K_j - d_{c(j)})(K_j - d_{c(j)})^T
///   Ut = (1/M) sum_j (K_j - d_0)(K_j - d_0)^T
struct ScatterMatrices {
  MatrixXd between;
  MatrixXd within;
  MatrixXd total;
  KernelMeans means;
};

namespace detail {

using LongMatrix = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;
using LongVector = Eigen::Matrix<long double, Eigen::Dynamic, 1>;

// Scatter matrices in extended precision. The top discriminants often lie
// where Uw is nearly singular, so eta reaches 1/eps and double rounding in Uw
// alone would be visible in the eigen residual.
struct ExtendedScatter {
  LongMatrix between;
  LongMatrix within;
  LongMatrix total;
  KernelMeans means;
};

inline ExtendedScatter extended_scatter(const MatrixXd& k, const std::vector<int>& labels, int class_count) {
  ExtendedScatter s;
  s.means = kernel_class_means(k, labels, class_count);
  const auto m = k.rows();
  const LongMatrix kl = k.cast<long double>();

  std::vector<int> counts(static_cast<std::size_t>(class_count), 0);
  for (int l : labels) ++counts[static_cast<std::size_t>(l)];
  LongMatrix class_means = LongMatrix::Zero(m, class_count);
  LongVector global = LongVector::Zero(m);
  for (Eigen::Index j = 0; j < m; ++j) {
    class_means.col(labels[static_cast<std::size_t>(j)]) += kl.col(j);
    global += kl.col(j);
  }
  for (int c = 0; c < class_count; ++c) class_means.col(c) /= static_cast<long double>(counts[static_cast<std::size_t>(c)]);
  global /= static_cast<long double>(m);

  const long double inv_m = 1.0L / static_cast<long double>(m);
  LongMatrix between_dev(m, class_count);
  for (int c = 0; c < class_count; ++c) {
    between_dev.col(c) = (class_means.col(c) - global) * std::sqrt(counts[static_cast<std::size_t>(c)] * inv_m);
  }
  LongMatrix within_dev(m, m);
  LongMatrix total_dev(m, m);
  for (Eigen::Index j = 0; j < m; ++j) {
    within_dev.col(j) = kl.col(j) - class_means.col(labels[static_cast<std::size_t>(j)]);
    total_dev.col(j) = kl.col(j) - global;
  }
  s.between = between_dev * between_dev.transpose();
  s.within = within_dev * within_dev.transpose() * inv_m;
  s.total = total_dev * total_dev.transpose() * inv_m;
  // Products of the form A A^T are symmetric in exact arithmetic only.
  s.between = 0.5L * (s.between + s.between.transpose()).eval();
  s.within = 0.5L * (s.within + s.within.transpose()).eval();
  s.total = 0.5L * (s.total + s.total.transpose()).eval();
  return s;
}

}  // namespace detail

inline ScatterMatrices scatter_matrices(const MatrixXd& k, const std::vector<int>& labels, int class_count) {
  detail::ExtendedScatter e = detail::extended_scatter(k, labels, class_count);
  return {e.between.cast<double>(), e.within.cast<double>(), e.total.cast<double>(), std::move(e.means)};
}

/// epsilon = 1e-8 * trace(Uw) / M, floored at 1e-12.
inline double within_regularization(const MatrixXd& within) {
  const double eps = 1e-8 * within.trace() / static_cast<double>(within.rows());
  return std::max(eps, 1e-12);
}

/// Rayleigh quotient sigma^T Ub sigma / sigma^T (Uw + eps I) sigma.
inline double fisher_criterion(const VectorXd& sigma, const ScatterMatrices& s, double eps) {
  if (sigma.size() != s.between.rows()) throw Error(ErrorCategory::DimensionMismatch, "sigma length differs from M");
  if (sigma.isZero(0.0)) throw Error(ErrorCategory::ZeroVector, "fisher criterion of the zero vector");
  const double num = sigma.dot(s.between * sigma);
  const double den = sigma.dot(s.within * sigma) + eps * sigma.squaredNorm();
  if (!(den > 0.0)) throw Error(ErrorCategory::InvalidArgument, "within-class scatter vanishes along sigma");
  return num / den;
}

struct GeneralizedEigen {
  VectorXd values;   // descending
  MatrixXd vectors;  // columns, W-orthonormal
};

/// Top `count` eigenpairs of B x = eta W x for symmetric B and SPD W, via the
/// Cholesky factor W = L L^T and the ordinary problem L^-1 B L^-T y = eta y.
inline GeneralizedEigen top_generalized_eigen(const MatrixXd& b, const MatrixXd& w, Eigen::Index count) {
  const Eigen::LLT<MatrixXd> llt(w);
  if (llt.info() != Eigen::Success) throw Error(ErrorCategory::DegenerateKernel, "regularized within-class scatter is not positive definite");
  const auto& l = llt.matrixL();
  MatrixXd a = l.solve(b);
  a = l.solve(a.transpose()).transpose();
  a = 0.5 * (a + a.transpose()).eval();
  const Eigen::SelfAdjointEigenSolver<MatrixXd> es(a);
  if (es.info() != Eigen::Success) throw Error(ErrorCategory::DegenerateKernel, "symmetric eigensolver failed");

  const auto n = b.rows();
  count = std::min(count, n);
  GeneralizedEigen out{VectorXd(count), MatrixXd(n, count)};
  for (Eigen::Index i = 0; i < count; ++i) {
    const auto src = n - 1 - i;  // eigenvalues come ascending
    out.values(i) = es.eigenvalues()(src);
    out.vectors.col(i) = llt.matrixU().solve(es.eigenvectors().col(src));
  }
  return out;
}

/// Numerical rank of a symmetric PSD matrix at a relative eigenvalue tolerance.
inline Eigen::Index numerical_rank(const MatrixXd& s, double rel_tol = 1e-10) {
  const Eigen::SelfAdjointEigenSolver<MatrixXd> es(s, Eigen::EigenvaluesOnly);
  const double top = es.eigenvalues().cwiseAbs().maxCoeff();
  if (!(top > 0.0)) return 0;
  return (es.eigenvalues().array() > rel_tol * top).count();
}

enum class Extraction {
  /// Each new direction maximizes the criterion subject to
  /// sigma_j^T K sigma = 0 for all earlier directions.
  Sequential,
  /// Top-d generalized eigenvectors taken at once.
  Batch,
};

inline std::string_view extraction_name(Extraction e) noexcept {
  return e == Extraction::Sequential ? "sequential" : "batch";
}

inline Extraction parse_extraction(std::string_view name) {
  if (name == "sequential") return Extraction::Sequential;
  if (name == "batch") return Extraction::Batch;
  throw Error(ErrorCategory::InvalidArgument, "unknown extraction '" + std::string(name) + "'");
}

/// Discriminant coefficients solved from a kernel matrix.
struct Discriminants {
  MatrixXd sigma;  // M x d, sigma_k^T K sigma_k = 1
  VectorXd eta;    // d, nonincreasing
  double regularization = 0.0;
  int requested = 0;
  bool rank_limited = false;
};

namespace detail {

// Polishes an approximate eigenpair of B x = eta W x by inverse iteration in
// extended precision. Returns false, leaving the inputs untouched, when the
// iteration drifts to a different eigenvector.
inline bool refine_eigenpair(const LongMatrix& b, const LongMatrix& w, LongVector& x, long double& eta) {
  const auto rayleigh = [&](const LongVector& v) { return v.dot(b * v) / v.dot(w * v); };
  LongVector v = x / x.norm();
  long double e = rayleigh(v);
  for (int it = 0; it < 3; ++it) {
    const Eigen::PartialPivLU<LongMatrix> lu(b - e * w);
    LongVector next = lu.solve(w * v);
    if (!next.allFinite() || !(next.norm() > 0.0L)) break;
    next /= next.norm();
    if (next.dot(v) < 0.0L) next = -next;
    v = next;
    e = rayleigh(v);
  }
  const LongVector x0 = x / x.norm();
  const long double cos_wv = std::abs(x0.dot(w * v)) / std::sqrt(x0.dot(w * x0) * v.dot(w * v));
  if (!v.allFinite() || !(cos_wv > 0.999L) || !(std::abs(e - eta) <= 1e-4L * std::abs(eta))) return false;
  x = v;
  eta = e;
  return true;
}

// Scale to unit K-norm and make the largest-magnitude entry positive.
inline bool normalize_direction(LongVector& sigma, const LongMatrix& k) {
  const long double norm2 = sigma.dot(k * sigma);
  if (!(norm2 > 0.0L) || !std::isfinite(static_cast<double>(norm2))) return false;
  sigma /= std::sqrt(norm2);
  Eigen::Index arg = 0;
  sigma.cwiseAbs().maxCoeff(&arg);
  if (sigma(arg) < 0.0L) sigma = -sigma;
  return true;
}

// Rounds sigma to double, then walks single coordinates by one ulp while that
// lowers |(B - eta W) sigma|. Plain rounding alone leaves residuals near 1e-8
// when eta is close to 1/eps.
inline VectorXd round_direction(const LongMatrix& b, const LongMatrix& w, const LongVector& sigma, double eta) {
  VectorXd out = sigma.cast<double>();
  const LongMatrix c = b - static_cast<long double>(eta) * w;
  LongVector r = c * out.cast<long double>();
  long double best = r.squaredNorm();
  for (int pass = 0; pass < 4; ++pass) {
    bool improved = false;
    for (Eigen::Index a = 0; a < out.size(); ++a) {
      for (const double dir : {1.0, -1.0}) {
        const double moved = std::nextafter(out(a), dir * std::numeric_limits<double>::infinity());
        const long double step = static_cast<long double>(moved) - static_cast<long double>(out(a));
        const LongVector trial = r + step * c.col(a);
        const long double norm = trial.squaredNorm();
        if (norm < best) {
          best = norm;
          r = trial;
          out(a) = moved;
          improved = true;
          break;
        }
      }
    }
    if (!improved) break;
  }
  return out;
}

}  // namespace detail

inline Discriminants solve_discriminants(const MatrixXd& k, const std::vector<int>& labels, int class_count,
                                         int requested, Extraction mode = Extraction::Sequential) {
  if (requested < 1) throw Error(ErrorCategory::InvalidArgument, "requested discriminant count must be >= 1");
  if (class_count < 2) throw Error(ErrorCategory::InvalidDataset, "at least two classes are required");
  if (!k.allFinite() || !(k.cwiseAbs().maxCoeff() > std::numeric_limits<double>::min())) {
    throw Error(ErrorCategory::DegenerateKernel, "kernel matrix is numerically zero");
  }
  using detail::LongMatrix;
  using detail::LongVector;
  const detail::ExtendedScatter ext = detail::extended_scatter(k, labels, class_count);
  const auto m = k.rows();

  Discriminants out;
  out.requested = requested;
  out.regularization = std::max(static_cast<double>(1e-8L * ext.within.trace() / static_cast<long double>(m)), 1e-12);
  const LongMatrix w_ext = ext.within + static_cast<long double>(out.regularization) * LongMatrix::Identity(m, m);
  const MatrixXd b = ext.between.cast<double>();
  const MatrixXd w = w_ext.cast<double>();
  const LongMatrix k_ext = k.cast<long double>();

  const auto rank_b = numerical_rank(b);
  if (rank_b == 0) throw Error(ErrorCategory::DegenerateKernel, "between-class scatter vanishes");
  const auto achievable = std::min<Eigen::Index>(class_count - 1, rank_b);
  const auto d = std::min<Eigen::Index>(requested, achievable);
  out.rank_limited = requested > achievable;

  std::vector<LongVector> sigmas;
  std::vector<double> etas;
  const auto accept = [&](LongVector v, long double eta) {
    if (!(eta > 0.0L) || !detail::normalize_direction(v, k_ext)) return false;
    sigmas.push_back(std::move(v));
    etas.push_back(static_cast<double>(eta));
    return true;
  };

  if (mode == Extraction::Batch) {
    const auto ge = top_generalized_eigen(b, w, d);
    for (Eigen::Index i = 0; i < ge.values.size(); ++i) {
      LongVector v = ge.vectors.col(i).cast<long double>();
      long double eta = ge.values(i);
      detail::refine_eigenpair(ext.between, w_ext, v, eta);
      if (!accept(std::move(v), eta)) break;
    }
  } else {
    for (Eigen::Index step = 0; step < d; ++step) {
      LongVector v;
      long double eta = 0.0L;
      if (step == 0) {
        const auto ge = top_generalized_eigen(b, w, 1);
        v = ge.vectors.col(0).cast<long double>();
        eta = ge.values(0);
        detail::refine_eigenpair(ext.between, w_ext, v, eta);
      } else {
        // Orthonormal basis of the complement of span{K sigma_1 .. K sigma_s}.
        MatrixXd constraints(m, step);
        for (Eigen::Index j = 0; j < step; ++j) {
          constraints.col(j) = (k_ext * sigmas[static_cast<std::size_t>(j)]).cast<double>();
        }
        const Eigen::HouseholderQR<MatrixXd> qr(constraints);
        const MatrixXd q_full = qr.householderQ();
        const LongMatrix basis = q_full.rightCols(m - step).cast<long double>();
        LongMatrix b_red = basis.transpose() * ext.between * basis;
        LongMatrix w_red = basis.transpose() * w_ext * basis;
        b_red = 0.5L * (b_red + b_red.transpose()).eval();
        w_red = 0.5L * (w_red + w_red.transpose()).eval();
        const auto ge = top_generalized_eigen(b_red.cast<double>(), w_red.cast<double>(), 1);
        LongVector z = ge.vectors.col(0).cast<long double>();
        eta = ge.values(0);
        detail::refine_eigenpair(b_red, w_red, z, eta);
        v = basis * z;
      }
      if (!accept(std::move(v), eta)) {
        out.rank_limited = true;
        break;
      }
    }
  }
  if (sigmas.empty()) throw Error(ErrorCategory::DegenerateKernel, "no discriminant direction has positive K-norm");
  if (static_cast<int>(sigmas.size()) < requested) out.rank_limited = true;

  out.sigma.resize(m, static_cast<Eigen::Index>(sigmas.size()));
  out.eta.resize(static_cast<Eigen::Index>(etas.size()));
  for (std::size_t i = 0; i < sigmas.size(); ++i) {
    // Later sequential axes solve a constrained problem; only full eigenpairs get the ulp walk.
    const bool full_eigenpair = mode == Extraction::Batch || i == 0;
    out.sigma.col(static_cast<Eigen::Index>(i)) =
        full_eigenpair ? detail::round_direction(ext.between, w_ext, sigmas[i], etas[i]) : VectorXd(sigmas[i].cast<double>());
    out.eta(static_cast<Eigen::Index>(i)) = etas[i];
  }
  return out;
}

/// Trained kernel discriminant model. Projection of u is sigma^T mu_u with
/// mu_u = (k(u_1, u), ..., k(u_M, u)).
struct GdaModel {
  KernelSpec kernel;  // gamma resolved
  Extraction extraction = Extraction::Sequential;
  MatrixXd samples;   // M x n training samples
  std::vector<int> labels;
  std::vector<int> class_labels;
  double regularization = 0.0;
  MatrixXd sigma;        // M x d
  VectorXd eta;          // d
  MatrixXd class_means;  // Z x d, in discriminant space
  int requested = 0;
  bool rank_limited = false;

  Eigen::Index input_dimension() const noexcept { return samples.cols(); }
  Eigen::Index discriminants() const noexcept { return sigma.cols(); }
  int classes() const noexcept { return static_cast<int>(class_labels.size()); }
};

inline VectorXd kernel_row(const GdaModel& model, const VectorXd& u) {
  if (u.size() != model.input_dimension()) {
    throw Error(ErrorCategory::DimensionMismatch,
                "sample has dimension " + std::to_string(u.size()) + ", model expects " +
                    std::to_string(model.input_dimension()));
  }
  VectorXd mu(model.samples.rows());
  for (Eigen::Index a = 0; a < mu.size(); ++a) mu(a) = model.kernel(model.samples.row(a).transpose(), u);
  return mu;
}

inline VectorXd project_kernel_row(const GdaModel& model, const VectorXd& mu) {
  if (mu.size() != model.sigma.rows()) throw Error(ErrorCategory::DimensionMismatch, "kernel row length differs from M");
  return model.sigma.transpose() * mu;
}

inline VectorXd project(const GdaModel& model, const VectorXd& u) {
  return project_kernel_row(model, kernel_row(model, u));
}

/// Projects each row of `samples`; result is rows x d.
inline MatrixXd project_batch(const GdaModel& model, const MatrixXd& samples) {
  MatrixXd out(samples.rows(), model.discriminants());
  for (Eigen::Index i = 0; i < samples.rows(); ++i) out.row(i) = project(model, samples.row(i).transpose()).transpose();
  return out;
}

/// Nearest class mean in discriminant space; smallest index on ties.
inline int nearest_class(const GdaModel& model, const VectorXd& feature) {
  int best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (int c = 0; c < model.classes(); ++c) {
    const double d = (model.class_means.row(c).transpose() - feature).squaredNorm();
    if (d < best_d) {
      best_d = d;
      best = c;
    }
  }
  return best;
}

inline int classify_nearest_mean(const GdaModel& model, const VectorXd& u) { return nearest_class(model, project(model, u)); }

inline GdaModel train_gda(const LabeledDataset& data, const KernelSpec& spec, int requested = 0,
                          Extraction mode = Extraction::Sequential) {
  data.validate();
  GdaModel model;
  model.kernel = spec.resolved(data.dimension());
  model.extraction = mode;
  model.samples = data.samples;
  model.labels = data.labels;
  model.class_labels = data.class_labels;
  if (requested <= 0) requested = data.classes() - 1;

  const MatrixXd k = compute_kernel_matrix(data.samples, model.kernel);
  Discriminants disc = solve_discriminants(k, data.labels, data.classes(), requested, mode);
  model.regularization = disc.regularization;
  model.sigma = std::move(disc.sigma);
  model.eta = std::move(disc.eta);
  model.requested = disc.requested;
  model.rank_limited = disc.rank_limited;

  // Training projections are K sigma since column j of K is mu_{u_j}.
  const MatrixXd proj = k * model.sigma;
  model.class_means = MatrixXd::Zero(data.classes(), model.discriminants());
  const auto counts = data.class_counts();
  for (Eigen::Index j = 0; j < proj.rows(); ++j) model.class_means.row(data.labels[static_cast<std::size_t>(j)]) += proj.row(j);
  for (int c = 0; c < data.classes(); ++c) model.class_means.row(c) /= counts[static_cast<std::size_t>(c)];
  return model;
}

}  // namespace qtseg
