#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <optional>

namespace lfda::linalg {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using IndexMatrix = Eigen::Matrix<Eigen::Index, Eigen::Dynamic, Eigen::Dynamic>;

/// Eigenpairs of a symmetric matrix. Eigenvalues are non-increasing and each
/// eigenvector column has unit norm with its largest-magnitude entry positive.
struct EigenResult {
  Vector eigenvalues;
  Matrix eigenvectors;
};

struct JacobiOptions {
  int max_sweeps = 100;
  /// Stop once the off-diagonal Frobenius norm falls below this fraction of
  /// the full Frobenius norm.
  double off_diagonal_tol = 1e-10;
  /// Largest tolerated |m(i,j) - m(j,i)|, scaled by max(1, max|m|).
  double symmetry_tol = 1e-8;
};

/// Cyclic Jacobi eigendecomposition of a symmetric matrix.
///
/// Throws DimensionError for non-square input, SymmetryError when the input is
/// not symmetric within `symmetry_tol`, and ConvergenceError when
/// `max_sweeps` is exhausted.
EigenResult sym_eigen(const Matrix& m, const JacobiOptions& options = {});

/// Flip each column so that its largest-magnitude entry is positive. Ties on
/// magnitude go to the lowest row index.
void normalize_column_signs(Matrix& columns);

/// Moore-Penrose pseudo-inverse of a symmetric matrix. Eigenvalues with
/// magnitude at or below `rank_tol` are treated as zero; the default cutoff is
/// rows * machine epsilon * largest |eigenvalue|.
Matrix pseudo_inverse(const Matrix& m, std::optional<double> rank_tol = std::nullopt);

/// Inverse square root factor W = U diag(lambda^-1/2) of an SPD matrix, so that
/// W^T m W = I. Throws NumericalError when m is not positive definite.
Matrix inverse_sqrt_factor(const Matrix& m);

struct PcaModel {
  Vector mean;
  Matrix basis;        ///< d x k, orthonormal columns
  Vector variances;    ///< k variances along the basis, non-increasing
};

struct PcaResult {
  PcaModel model;
  Matrix projected;    ///< n x k
};

/// Fit a k-dimensional principal subspace to row-major instances (n x d).
/// Requires n >= 2 and k <= min(n - 1, d).
PcaModel pca_fit(const Matrix& data, Eigen::Index target_dim);
Matrix pca_transform(const PcaModel& model, const Matrix& data);
PcaResult pca_fit_transform(const Matrix& data, Eigen::Index target_dim);

/// Squared Euclidean distances between the rows of `a` (n x d) and `b` (m x d).
Matrix pairwise_sq_dist(const Matrix& a, const Matrix& b);

/// Indices of the `k` rows of `reference` nearest to each row of `queries`,
/// ordered by increasing distance, ties by lower reference index. Works row by
/// row, so it never materializes the full distance matrix.
IndexMatrix knn_indices(const Matrix& queries, const Matrix& reference, Eigen::Index k);

/// Largest |m(i,j) - m(j,i)|.
double max_asymmetry(const Matrix& m);

}  // namespace lfda::linalg
