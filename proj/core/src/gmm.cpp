#include "lfda/gmm.hpp"

#include "lfda/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <string>

namespace lfda::gmm {

namespace {

constexpr double kLog2Pi = 1.8378770664093454835606594728112;
// A component holding less responsibility mass than this is treated as collapsed.
constexpr double kCollapsedMass = 1e-3;

struct Factor {
  Eigen::LLT<Matrix> llt;
  double log_det = 0.0;
};

Factor factorize(const Matrix& cov) {
  Factor f;
  f.llt.compute(cov);
  if (f.llt.info() != Eigen::Success) {
    throw NumericalError("gmm: covariance is not positive definite");
  }
  const Matrix& l = f.llt.matrixLLT();
  for (Eigen::Index i = 0; i < l.rows(); ++i) f.log_det += 2.0 * std::log(l(i, i));
  return f;
}

double gaussian_log_density(const Factor& f, const Vector& mean, const Eigen::Ref<const Vector>& x) {
  const Vector diff = x - mean;
  const Vector z = f.llt.matrixL().solve(diff);
  return -0.5 * (static_cast<double>(x.size()) * kLog2Pi + f.log_det + z.squaredNorm());
}

double log_sum_exp(const Eigen::Ref<const Vector>& v) {
  const double top = v.maxCoeff();
  if (!std::isfinite(top)) return top;
  return top + std::log((v.array() - top).exp().sum());
}

// Fills log(pi_k) + log g(x_i | k) for every point, returns factors.
Matrix weighted_log_densities(const ClassMixture& mix, const Matrix& points) {
  const int K = mix.components();
  Matrix out(points.rows(), K);
  for (int k = 0; k < K; ++k) {
    const Factor f = factorize(mix.covariances[static_cast<std::size_t>(k)]);
    const Vector mean = mix.means.row(k).transpose();
    const double log_w = mix.weights(k) > 0.0 ? std::log(mix.weights(k))
                                               : -std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < points.rows(); ++i) {
      out(i, k) = log_w + gaussian_log_density(f, mean, points.row(i).transpose());
    }
  }
  return out;
}

std::size_t uniform_index(std::mt19937_64& rng, std::size_t n) {
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  return pick(rng);
}

Matrix kmeans_plus_plus(const Matrix& points, int K, std::mt19937_64& rng) {
  const Eigen::Index m = points.rows();
  Matrix centers(K, points.cols());
  centers.row(0) = points.row(static_cast<Eigen::Index>(uniform_index(rng, static_cast<std::size_t>(m))));
  Vector best = (points.rowwise() - centers.row(0)).rowwise().squaredNorm();
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int k = 1; k < K; ++k) {
    const double total = best.sum();
    Eigen::Index chosen = 0;
    if (total > 0.0) {
      const double target = unit(rng) * total;
      double acc = 0.0;
      chosen = m - 1;
      for (Eigen::Index i = 0; i < m; ++i) {
        acc += best(i);
        if (acc >= target && best(i) > 0.0) {
          chosen = i;
          break;
        }
      }
    } else {
      chosen = static_cast<Eigen::Index>(uniform_index(rng, static_cast<std::size_t>(m)));
    }
    centers.row(k) = points.row(chosen);
    best = best.cwiseMin((points.rowwise() - centers.row(k)).rowwise().squaredNorm());
  }
  return centers;
}

std::vector<int> lloyd(const Matrix& points, Matrix& centers, int iterations) {
  const Eigen::Index m = points.rows();
  const int K = static_cast<int>(centers.rows());
  std::vector<int> assign(static_cast<std::size_t>(m), 0);
  for (int it = 0; it <= iterations; ++it) {
    for (Eigen::Index i = 0; i < m; ++i) {
      Eigen::Index arg = 0;
      (centers.rowwise() - points.row(i)).rowwise().squaredNorm().minCoeff(&arg);
      assign[static_cast<std::size_t>(i)] = static_cast<int>(arg);
    }
    if (it == iterations) break;
    Matrix sums = Matrix::Zero(K, points.cols());
    std::vector<Eigen::Index> counts(static_cast<std::size_t>(K), 0);
    for (Eigen::Index i = 0; i < m; ++i) {
      sums.row(assign[static_cast<std::size_t>(i)]) += points.row(i);
      ++counts[static_cast<std::size_t>(assign[static_cast<std::size_t>(i)])];
    }
    for (int k = 0; k < K; ++k) {
      if (counts[static_cast<std::size_t>(k)] > 0) {
        centers.row(k) = sums.row(k) / static_cast<double>(counts[static_cast<std::size_t>(k)]);
      } else {
        // Empty cluster: move it to the point farthest from its current center.
        Eigen::Index far = 0;
        double far_d = -1.0;
        for (Eigen::Index i = 0; i < m; ++i) {
          const double dd = (points.row(i) - centers.row(assign[static_cast<std::size_t>(i)])).squaredNorm();
          if (dd > far_d) {
            far_d = dd;
            far = i;
          }
        }
        centers.row(k) = points.row(far);
      }
    }
  }
  return assign;
}

// Nearest covariance (in the likelihood sense) whose eigenvalues are all >= floor.
Matrix clamp_eigenvalues(const Matrix& cov, double floor) {
  const linalg::EigenResult es = linalg::sym_eigen(cov);
  if (es.eigenvalues.minCoeff() >= floor) return cov;
  const Vector clamped = es.eigenvalues.cwiseMax(floor);
  Matrix out = es.eigenvectors * clamped.asDiagonal() * es.eigenvectors.transpose();
  return 0.5 * (out + out.transpose());
}

void m_step(const Matrix& points, const Matrix& resp, double floor, ClassMixture& mix) {
  const int K = static_cast<int>(resp.cols());
  const Eigen::Index d = points.cols();
  const Vector mass = resp.colwise().sum().transpose();
  mix.weights = mass / mass.sum();
  mix.means.resize(K, d);
  mix.covariances.assign(static_cast<std::size_t>(K), Matrix::Zero(d, d));
  for (int k = 0; k < K; ++k) {
    const double nk = mass(k);
    if (nk <= 0.0) {
      mix.means.row(k).setZero();
      mix.covariances[static_cast<std::size_t>(k)] = floor * Matrix::Identity(d, d);
      continue;
    }
    const Vector mean = (resp.col(k).transpose() * points).transpose() / nk;
    mix.means.row(k) = mean.transpose();
    const Matrix centered = points.rowwise() - mean.transpose();
    Matrix cov = (centered.array().colwise() * resp.col(k).array()).matrix().transpose() * centered / nk;
    mix.covariances[static_cast<std::size_t>(k)] = clamp_eigenvalues(0.5 * (cov + cov.transpose()), floor);
  }
}

// Reseeds components with negligible mass at the worst-explained point. Returns
// true when anything changed.
bool reseed_collapsed(const Matrix& points, const Matrix& data_cov, ClassMixture& mix) {
  const int K = mix.components();
  const double m = static_cast<double>(points.rows());
  bool changed = false;
  for (int k = 0; k < K; ++k) {
    if (mix.weights(k) * m >= kCollapsedMass) continue;
    const Matrix wld = weighted_log_densities(mix, points);
    Eigen::Index worst = 0;
    double worst_ll = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < points.rows(); ++i) {
      const double ll = log_sum_exp(wld.row(i).transpose());
      if (ll < worst_ll) {
        worst_ll = ll;
        worst = i;
      }
    }
    mix.means.row(k) = points.row(worst);
    mix.covariances[static_cast<std::size_t>(k)] = data_cov;
    mix.weights(k) = 1.0 / m;
    mix.weights /= mix.weights.sum();
    changed = true;
  }
  return changed;
}

}  // namespace

namespace {

struct Prepared {
  Matrix data_cov;  // data covariance plus floor, used for reseeding
  double floor = 0.0;
};

Prepared prepare(const Matrix& points, int K, double ridge_factor, const char* who) {
  const Eigen::Index m = points.rows();
  const Eigen::Index d = points.cols();
  if (K < 1) throw InputError(std::string(who) + ": need at least one component");
  if (d < 1) throw DimensionError(std::string(who) + ": points have zero dimension");
  if (m < K) {
    throw InsufficientDataError(std::string(who) + ": " + std::to_string(m) + " point(s) for " +
                                std::to_string(K) + " components");
  }
  if (!points.allFinite()) throw InputError(std::string(who) + ": non-finite points");

  const Vector mean = points.colwise().mean().transpose();
  const Matrix centered = points.rowwise() - mean.transpose();
  Prepared out;
  out.data_cov = centered.transpose() * centered / static_cast<double>(m);
  const double mean_var = out.data_cov.diagonal().mean();
  if (!(mean_var > 0.0) && K > 1) {
    throw DegenerateDataError(std::string(who) + ": all points coincide; cannot fit " +
                              std::to_string(K) + " components");
  }
  out.floor = mean_var > 0.0 ? ridge_factor * mean_var : ridge_factor;
  out.data_cov = clamp_eigenvalues(out.data_cov, out.floor);
  return out;
}

ClassMixture run_em(const Matrix& points, Matrix resp, const Prepared& prep, const EmOptions& options) {
  const Eigen::Index m = points.rows();
  ClassMixture mix;
  mix.covariance_floor = prep.floor;
  m_step(points, resp, prep.floor, mix);
  reseed_collapsed(points, prep.data_cov, mix);

  double previous = -std::numeric_limits<double>::infinity();
  for (int it = 0; it < options.max_iter; ++it) {
    // E-step.
    const Matrix wld = weighted_log_densities(mix, points);
    double ll = 0.0;
    for (Eigen::Index i = 0; i < m; ++i) {
      const double norm = log_sum_exp(wld.row(i).transpose());
      ll += norm;
      resp.row(i) = (wld.row(i).array() - norm).exp();
    }
    mix.log_likelihood_trace.push_back(ll);
    mix.iterations = it + 1;
    if (std::isfinite(previous) &&
        std::abs(ll - previous) <= options.ll_tol * std::max(1.0, std::abs(previous))) {
      mix.converged = true;
      break;
    }
    previous = ll;

    // M-step.
    m_step(points, resp, prep.floor, mix);
    if (reseed_collapsed(points, prep.data_cov, mix)) {
      mix.reinit_iterations.push_back(it + 1);
      previous = -std::numeric_limits<double>::infinity();
    }
  }
  return mix;
}

void check_responsibilities(const Matrix& points, const Matrix& resp, int K, const char* who) {
  if (resp.rows() != points.rows() || resp.cols() != K) {
    throw DimensionError(std::string(who) + ": responsibilities must be " +
                         std::to_string(points.rows()) + " x " + std::to_string(K));
  }
  if (!resp.allFinite() || (resp.array() < 0.0).any()) {
    throw InputError(std::string(who) + ": responsibilities must be finite and non-negative");
  }
}

}  // namespace

ClassMixture fit_em(const Matrix& points, const EmOptions& options) {
  const int K = options.components;
  const Prepared prep = prepare(points, K, options.ridge_factor, "fit_em");
  std::mt19937_64 rng(options.seed);
  Matrix centers = kmeans_plus_plus(points, K, rng);
  const std::vector<int> assign = lloyd(points, centers, options.kmeans_iters);
  Matrix resp = Matrix::Zero(points.rows(), K);
  for (Eigen::Index i = 0; i < points.rows(); ++i) resp(i, assign[static_cast<std::size_t>(i)]) = 1.0;
  return run_em(points, std::move(resp), prep, options);
}

ClassMixture fit_em_from(const Matrix& points, const Matrix& initial_resp, const EmOptions& options) {
  const int K = options.components;
  const Prepared prep = prepare(points, K, options.ridge_factor, "fit_em_from");
  check_responsibilities(points, initial_resp, K, "fit_em_from");
  return run_em(points, initial_resp, prep, options);
}

ClassMixture mixture_from_responsibilities(const Matrix& points, const Matrix& resp, double ridge_factor) {
  const int K = static_cast<int>(resp.cols());
  const Prepared prep = prepare(points, K, ridge_factor, "mixture_from_responsibilities");
  check_responsibilities(points, resp, K, "mixture_from_responsibilities");
  ClassMixture mix;
  mix.covariance_floor = prep.floor;
  m_step(points, resp, prep.floor, mix);
  reseed_collapsed(points, prep.data_cov, mix);
  return mix;
}

double component_log_density(const ClassMixture& mix, int k, const Eigen::Ref<const Vector>& x) {
  if (x.size() != mix.dim()) throw DimensionError("component_log_density: dimension mismatch");
  const Factor f = factorize(mix.covariances.at(static_cast<std::size_t>(k)));
  return gaussian_log_density(f, mix.means.row(k).transpose(), x);
}

double log_density(const ClassMixture& mix, const Eigen::Ref<const Vector>& x) {
  if (x.size() != mix.dim()) throw DimensionError("log_density: dimension mismatch");
  Matrix single(1, x.size());
  single.row(0) = x.transpose();
  return log_sum_exp(weighted_log_densities(mix, single).row(0).transpose());
}

Matrix responsibilities(const ClassMixture& mix, const Matrix& points) {
  if (points.cols() != mix.dim()) throw DimensionError("responsibilities: dimension mismatch");
  Matrix wld = weighted_log_densities(mix, points);
  for (Eigen::Index i = 0; i < wld.rows(); ++i) {
    const double norm = log_sum_exp(wld.row(i).transpose());
    wld.row(i) = (wld.row(i).array() - norm).exp();
  }
  return wld;
}

double total_log_likelihood(const ClassMixture& mix, const Matrix& points) {
  if (points.cols() != mix.dim()) throw DimensionError("total_log_likelihood: dimension mismatch");
  const Matrix wld = weighted_log_densities(mix, points);
  double ll = 0.0;
  for (Eigen::Index i = 0; i < wld.rows(); ++i) ll += log_sum_exp(wld.row(i).transpose());
  return ll;
}

HardPartition hard_partition(const ClassMixture& mix, const Matrix& points) {
  if (points.cols() != mix.dim()) throw DimensionError("hard_partition: dimension mismatch");
  const Matrix wld = weighted_log_densities(mix, points);
  HardPartition out;
  out.assignment.resize(static_cast<std::size_t>(points.rows()));
  out.clusters.assign(static_cast<std::size_t>(mix.components()), {});
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    Eigen::Index arg = 0;
    wld.row(i).maxCoeff(&arg);  // first maximum wins
    out.assignment[static_cast<std::size_t>(i)] = static_cast<int>(arg);
    out.clusters[static_cast<std::size_t>(arg)].push_back(i);
  }
  for (const auto& c : out.clusters) {
    if (c.empty()) out.has_empty_cluster = true;
  }
  return out;
}

}  // namespace lfda::gmm
