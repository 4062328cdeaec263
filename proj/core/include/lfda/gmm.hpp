#pragma once

#include "lfda/linalg.hpp"

#include <cstdint>
#include <vector>

namespace lfda::gmm {

using linalg::Matrix;
using linalg::Vector;

struct EmOptions {
  int components = 3;
  std::uint64_t seed = 0;
  int max_iter = 200;
  /// Stop when |LL_t - LL_{t-1}| <= ll_tol * max(1, |LL_{t-1}|).
  double ll_tol = 1e-6;
  int kmeans_iters = 10;
  /// Covariance floor = ridge_factor * (mean per-dimension variance of the data).
  /// Eigenvalues below the floor are raised to it after every M-step, which
  /// keeps the log-likelihood trace monotone.
  double ridge_factor = 1e-6;
};

/// Full-covariance Gaussian mixture for one class.
struct ClassMixture {
  Vector weights;                   ///< K mixing proportions, sum to 1
  Matrix means;                     ///< K x d
  std::vector<Matrix> covariances;  ///< K matrices, d x d
  double covariance_floor = 0.0;

  // Fit diagnostics.
  std::vector<double> log_likelihood_trace;  ///< total log-likelihood per EM iteration
  std::vector<int> reinit_iterations;        ///< iterations where a collapsed component was reseeded
  int iterations = 0;
  bool converged = false;

  int components() const { return static_cast<int>(weights.size()); }
  Eigen::Index dim() const { return means.cols(); }
};

/// Hard assignment of points to their most responsible component.
struct HardPartition {
  std::vector<int> assignment;                  ///< component per point
  std::vector<std::vector<Eigen::Index>> clusters;  ///< point indices per component
  bool has_empty_cluster = false;
};

/// EM for a K-component mixture seeded by k-means++ and a short Lloyd run.
/// Throws InsufficientDataError when points.rows() < K and DegenerateDataError
/// when all points coincide and K > 1.
ClassMixture fit_em(const Matrix& points, const EmOptions& options);

/// EM warm-started from given responsibilities (m x K) instead of k-means
/// seeding; the seed in `options` is unused.
ClassMixture fit_em_from(const Matrix& points, const Matrix& initial_resp, const EmOptions& options);

/// A single M-step: weights, means and floored covariances from soft
/// assignments. Collapsed components are reseeded as in fit_em.
ClassMixture mixture_from_responsibilities(const Matrix& points, const Matrix& resp,
                                           double ridge_factor = 1e-6);

/// log g(x | mu_k, Sigma_k) for one component.
double component_log_density(const ClassMixture& mix, int k, const Eigen::Ref<const Vector>& x);

/// log sum_k pi_k g(x | mu_k, Sigma_k), evaluated with log-sum-exp.
double log_density(const ClassMixture& mix, const Eigen::Ref<const Vector>& x);

/// n x K posterior component probabilities; each row sums to 1.
Matrix responsibilities(const ClassMixture& mix, const Matrix& points);

double total_log_likelihood(const ClassMixture& mix, const Matrix& points);

/// Ties go to the lower component index.
HardPartition hard_partition(const ClassMixture& mix, const Matrix& points);

}  // namespace lfda::gmm
