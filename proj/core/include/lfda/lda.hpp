#pragma once

#include "lfda/linalg.hpp"
#include "lfda/mildata.hpp"

#include <span>
#include <vector>

namespace lfda::lda {

using linalg::Matrix;
using linalg::Vector;

/// Within- and between-class scatter (sums, not averages) plus the class
/// statistics they were built from.
struct ScatterPair {
  Matrix within;                       ///< sum_c sum_{x in c} (x - mu_c)(x - mu_c)^T
  Matrix between;                      ///< sum_c n_c (mu_c - mu)(mu_c - mu)^T
  Matrix class_means;                  ///< C x d
  Vector global_mean;
  std::vector<Eigen::Index> class_counts;
};

/// Discriminant subspace. Columns have unit norm and follow the linalg sign
/// convention; eigenvalues are those of (S_w + beta I)^+ S_b for each column.
struct Projection {
  Matrix basis;               ///< d x d'
  Vector eigenvalues;         ///< d', non-increasing
  Eigen::Index requested_dim = 0;

  Eigen::Index input_dim() const { return basis.rows(); }
  Eigen::Index output_dim() const { return basis.cols(); }
  bool rank_reduced() const { return output_dim() < requested_dim; }
};

/// Throws LabelError when a class in [0, num_classes) has no points.
ScatterPair scatter(const Matrix& points, std::span<const ClassId> labels, int num_classes);

/// Top `target_dim` eigenvectors of (S_w + beta I)^+ S_b, computed through the
/// symmetric problem W^T S_b W with W = U Lambda^{-1/2} from S_w + beta I.
/// Eigenvalues below 1e-10 of the largest are dropped, which can shrink the
/// output dimension. Throws NoDiscriminationError when S_b is numerically zero.
Projection fit_projection(const ScatterPair& sc, double beta, Eigen::Index target_dim);

/// Convenience: fit_projection(scatter(points, labels, C), beta, C - 1).
Projection fit_lda(const Matrix& points, std::span<const ClassId> labels, int num_classes, double beta);

/// points (m x d) times the basis.
Matrix project(const Projection& p, const Matrix& points);

/// trace((P^T S_w P)(P^T S_b P)^+) + beta * trace(P^T P).
double objective(const ScatterPair& sc, const Matrix& basis, double beta);
inline double objective(const ScatterPair& sc, const Projection& p, double beta) {
  return objective(sc, p.basis, beta);
}

/// The trace-ratio part of `objective` alone.
double trace_ratio(const ScatterPair& sc, const Matrix& basis);

}  // namespace lfda::lda
