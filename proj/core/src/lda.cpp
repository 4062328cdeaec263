#include "lfda/lda.hpp"

#include "lfda/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace lfda::lda {

namespace {

// Relative eigenvalue cutoff for the retained discriminant directions.
constexpr double kRankCutoff = 1e-10;

}  // namespace

ScatterPair scatter(const Matrix& points, std::span<const ClassId> labels, int num_classes) {
  const Eigen::Index m = points.rows();
  const Eigen::Index d = points.cols();
  if (static_cast<std::size_t>(m) != labels.size()) {
    throw DimensionError("scatter: " + std::to_string(m) + " points but " +
                         std::to_string(labels.size()) + " labels");
  }
  if (num_classes < 1) throw LabelError("scatter: need at least one class");

  ScatterPair sc;
  sc.class_means = Matrix::Zero(num_classes, d);
  sc.class_counts.assign(static_cast<std::size_t>(num_classes), 0);
  for (Eigen::Index i = 0; i < m; ++i) {
    const ClassId c = labels[static_cast<std::size_t>(i)];
    if (c < 0 || c >= num_classes) {
      throw LabelError("scatter: label " + std::to_string(c) + " outside [0, " +
                       std::to_string(num_classes) + ")");
    }
    sc.class_means.row(c) += points.row(i);
    ++sc.class_counts[static_cast<std::size_t>(c)];
  }
  for (int c = 0; c < num_classes; ++c) {
    const auto n = sc.class_counts[static_cast<std::size_t>(c)];
    if (n == 0) throw LabelError("scatter: class " + std::to_string(c) + " has no points");
    sc.class_means.row(c) /= static_cast<double>(n);
  }
  sc.global_mean = points.colwise().mean().transpose();

  Matrix centered(m, d);
  for (Eigen::Index i = 0; i < m; ++i) {
    centered.row(i) = points.row(i) - sc.class_means.row(labels[static_cast<std::size_t>(i)]);
  }
  sc.within = Matrix::Zero(d, d);
  sc.within.selfadjointView<Eigen::Lower>().rankUpdate(centered.transpose());
  sc.within = sc.within.selfadjointView<Eigen::Lower>();

  Matrix spread(d, num_classes);
  for (int c = 0; c < num_classes; ++c) {
    spread.col(c) = std::sqrt(static_cast<double>(sc.class_counts[static_cast<std::size_t>(c)])) *
                    (sc.class_means.row(c).transpose() - sc.global_mean);
  }
  sc.between = Matrix::Zero(d, d);
  sc.between.selfadjointView<Eigen::Lower>().rankUpdate(spread);
  sc.between = sc.between.selfadjointView<Eigen::Lower>();
  return sc;
}

Projection fit_projection(const ScatterPair& sc, double beta, Eigen::Index target_dim) {
  const Eigen::Index d = sc.within.rows();
  if (sc.within.cols() != d || sc.between.rows() != d || sc.between.cols() != d) {
    throw DimensionError("fit_projection: scatter matrices must be square and the same size");
  }
  if (!(beta >= 0.0)) throw InputError("fit_projection: beta must be non-negative");
  if (target_dim < 1 || target_dim > d) {
    throw DimensionError("fit_projection: target dimension " + std::to_string(target_dim) +
                         " outside [1, " + std::to_string(d) + "]");
  }
  if (!sc.class_counts.empty() &&
      target_dim > static_cast<Eigen::Index>(sc.class_counts.size()) - 1) {
    throw DimensionError("fit_projection: target dimension exceeds C - 1");
  }

  const double between_scale = sc.between.cwiseAbs().maxCoeff();
  const double reference_scale =
      std::max({sc.within.cwiseAbs().maxCoeff(), beta, std::numeric_limits<double>::min()});
  if (!(between_scale > 1e-12 * reference_scale)) {
    throw NoDiscriminationError("fit_projection: between-class scatter is numerically zero");
  }

  // Whitening restricted to the numerical range of S_w + beta I, which is
  // exactly where its pseudo-inverse acts.
  Matrix regularized = sc.within;
  regularized.diagonal().array() += beta;
  const linalg::EigenResult outer = linalg::sym_eigen(regularized);
  const double top = outer.eigenvalues.cwiseAbs().maxCoeff();
  const double cutoff = static_cast<double>(d) * std::numeric_limits<double>::epsilon() * top;
  Eigen::Index rank = 0;
  while (rank < d && outer.eigenvalues(rank) > cutoff) ++rank;
  if (rank == 0) throw NoDiscriminationError("fit_projection: regularized within scatter is zero");
  const Matrix whiten = outer.eigenvectors.leftCols(rank) *
                        outer.eigenvalues.head(rank).cwiseSqrt().cwiseInverse().asDiagonal();

  Matrix reduced = whiten.transpose() * sc.between * whiten;
  reduced = 0.5 * (reduced + reduced.transpose());
  const linalg::EigenResult inner = linalg::sym_eigen(reduced);
  const double lead = inner.eigenvalues(0);
  if (!(lead > 0.0)) {
    throw NoDiscriminationError("fit_projection: no positive discriminant eigenvalue");
  }
  Eigen::Index keep = 0;
  while (keep < std::min(target_dim, rank) && inner.eigenvalues(keep) > kRankCutoff * lead) ++keep;

  Projection p;
  p.requested_dim = target_dim;
  p.basis = whiten * inner.eigenvectors.leftCols(keep);
  for (Eigen::Index j = 0; j < keep; ++j) p.basis.col(j).normalize();
  linalg::normalize_column_signs(p.basis);
  p.eigenvalues = inner.eigenvalues.head(keep);
  return p;
}

Projection fit_lda(const Matrix& points, std::span<const ClassId> labels, int num_classes, double beta) {
  if (num_classes < 2) throw LabelError("fit_lda: need at least two classes");
  return fit_projection(scatter(points, labels, num_classes), beta, num_classes - 1);
}

Matrix project(const Projection& p, const Matrix& points) {
  if (points.cols() != p.input_dim()) {
    throw DimensionError("project: points have " + std::to_string(points.cols()) +
                         " columns, projection expects " + std::to_string(p.input_dim()));
  }
  return points * p.basis;
}

double trace_ratio(const ScatterPair& sc, const Matrix& basis) {
  if (basis.rows() != sc.within.rows()) throw DimensionError("objective: basis/scatter size mismatch");
  const Matrix num = basis.transpose() * sc.within * basis;
  Matrix den = basis.transpose() * sc.between * basis;
  den = 0.5 * (den + den.transpose());
  return (num * linalg::pseudo_inverse(den)).trace();
}

double objective(const ScatterPair& sc, const Matrix& basis, double beta) {
  return trace_ratio(sc, basis) + beta * (basis.transpose() * basis).trace();
}

}  // namespace lfda::lda
