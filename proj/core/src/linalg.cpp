#include "lfda/linalg.hpp"

#include "lfda/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

namespace lfda::linalg {

namespace {

double off_diagonal_norm(const Matrix& a) {
  double sum = 0.0;
  const Eigen::Index n = a.rows();
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = 0; i < n; ++i) {
      if (i != j) sum += a(i, j) * a(i, j);
    }
  }
  return std::sqrt(sum);
}

// One Jacobi rotation zeroing a(p, q), p < q. Keeps `a` exactly symmetric.
void rotate(Matrix& a, Matrix& v, Eigen::Index p, Eigen::Index q) {
  const double apq = a(p, q);
  const double app = a(p, p);
  const double aqq = a(q, q);
  const double theta = (aqq - app) / (2.0 * apq);
  const double t = (theta >= 0.0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(1.0 + theta * theta));
  const double c = 1.0 / std::sqrt(1.0 + t * t);
  const double s = t * c;

  const Eigen::Index n = a.rows();
  double* colp = a.col(p).data();
  double* colq = a.col(q).data();
  for (Eigen::Index k = 0; k < n; ++k) {
    if (k == p || k == q) continue;
    const double akp = colp[k];
    const double akq = colq[k];
    const double new_kp = c * akp - s * akq;
    const double new_kq = s * akp + c * akq;
    colp[k] = new_kp;
    colq[k] = new_kq;
    a(p, k) = new_kp;
    a(q, k) = new_kq;
  }
  a(p, p) = app - t * apq;
  a(q, q) = aqq + t * apq;
  a(p, q) = 0.0;
  a(q, p) = 0.0;

  double* vp = v.col(p).data();
  double* vq = v.col(q).data();
  for (Eigen::Index k = 0; k < n; ++k) {
    const double x = vp[k];
    const double y = vq[k];
    vp[k] = c * x - s * y;
    vq[k] = s * x + c * y;
  }
}

}  // namespace

double max_asymmetry(const Matrix& m) {
  if (m.rows() != m.cols()) return std::numeric_limits<double>::infinity();
  double worst = 0.0;
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    for (Eigen::Index i = j + 1; i < m.rows(); ++i) {
      worst = std::max(worst, std::abs(m(i, j) - m(j, i)));
    }
  }
  return worst;
}

void normalize_column_signs(Matrix& columns) {
  for (Eigen::Index j = 0; j < columns.cols(); ++j) {
    Eigen::Index arg = 0;
    double best = -1.0;
    for (Eigen::Index i = 0; i < columns.rows(); ++i) {
      const double mag = std::abs(columns(i, j));
      if (mag > best) {
        best = mag;
        arg = i;
      }
    }
    if (columns.rows() > 0 && columns(arg, j) < 0.0) columns.col(j) *= -1.0;
  }
}

EigenResult sym_eigen(const Matrix& m, const JacobiOptions& options) {
  if (m.rows() != m.cols() || m.rows() < 1) {
    throw DimensionError("sym_eigen: expected a non-empty square matrix, got " +
                         std::to_string(m.rows()) + "x" + std::to_string(m.cols()));
  }
  if (!m.allFinite()) throw InputError("sym_eigen: matrix has non-finite entries");
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  if (max_asymmetry(m) > options.symmetry_tol * scale) {
    throw SymmetryError("sym_eigen: matrix is not symmetric (max asymmetry " +
                        std::to_string(max_asymmetry(m)) + ")");
  }

  const Eigen::Index n = m.rows();
  Matrix a = 0.5 * (m + m.transpose());
  Matrix v = Matrix::Identity(n, n);
  const double total = a.norm();

  bool converged = total == 0.0;
  for (int sweep = 0; sweep < options.max_sweeps && !converged; ++sweep) {
    if (off_diagonal_norm(a) <= options.off_diagonal_tol * total) {
      converged = true;
      break;
    }
    for (Eigen::Index p = 0; p < n - 1; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        // Below this the rotation would not change the diagonal in floating point.
        const double small = 1e-18 * (std::abs(a(p, p)) + std::abs(a(q, q)));
        if (std::abs(apq) <= small) {
          a(p, q) = 0.0;
          a(q, p) = 0.0;
          continue;
        }
        rotate(a, v, p, q);
      }
    }
  }
  if (!converged && off_diagonal_norm(a) > options.off_diagonal_tol * total) {
    throw ConvergenceError("sym_eigen: Jacobi iteration did not converge in " +
                           std::to_string(options.max_sweeps) + " sweeps");
  }

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index x, Eigen::Index y) { return a(x, x) > a(y, y); });

  EigenResult out;
  out.eigenvalues.resize(n);
  out.eigenvectors.resize(n, n);
  for (Eigen::Index k = 0; k < n; ++k) {
    const Eigen::Index src = order[static_cast<std::size_t>(k)];
    out.eigenvalues(k) = a(src, src);
    out.eigenvectors.col(k) = v.col(src).normalized();
  }
  normalize_column_signs(out.eigenvectors);
  return out;
}

Matrix pseudo_inverse(const Matrix& m, std::optional<double> rank_tol) {
  const EigenResult eig = sym_eigen(m);
  const double largest = eig.eigenvalues.cwiseAbs().maxCoeff();
  const double tol = rank_tol.value_or(static_cast<double>(m.rows()) *
                                       std::numeric_limits<double>::epsilon() * largest);
  Vector inv(eig.eigenvalues.size());
  for (Eigen::Index k = 0; k < inv.size(); ++k) {
    const double lambda = eig.eigenvalues(k);
    inv(k) = std::abs(lambda) > tol ? 1.0 / lambda : 0.0;
  }
  Matrix out = eig.eigenvectors * inv.asDiagonal() * eig.eigenvectors.transpose();
  return 0.5 * (out + out.transpose());
}

Matrix inverse_sqrt_factor(const Matrix& m) {
  const EigenResult eig = sym_eigen(m);
  const double smallest = eig.eigenvalues(eig.eigenvalues.size() - 1);
  if (!(smallest > 0.0)) {
    throw NumericalError("inverse_sqrt_factor: matrix is not positive definite (min eigenvalue " +
                         std::to_string(smallest) + ")");
  }
  return eig.eigenvectors * eig.eigenvalues.cwiseSqrt().cwiseInverse().asDiagonal();
}

PcaModel pca_fit(const Matrix& data, Eigen::Index target_dim) {
  const Eigen::Index n = data.rows();
  const Eigen::Index d = data.cols();
  if (n < 2) throw DimensionError("pca: need at least two instances");
  if (target_dim < 1 || target_dim > std::min(n - 1, d)) {
    throw DimensionError("pca: target dimension " + std::to_string(target_dim) +
                         " outside [1, " + std::to_string(std::min(n - 1, d)) + "]");
  }
  PcaModel model;
  model.mean = data.colwise().mean().transpose();
  const Matrix centered = data.rowwise() - model.mean.transpose();
  Matrix cov = (centered.transpose() * centered) / static_cast<double>(n - 1);
  cov = 0.5 * (cov + cov.transpose());
  const EigenResult eig = sym_eigen(cov);
  model.basis = eig.eigenvectors.leftCols(target_dim);
  model.variances = eig.eigenvalues.head(target_dim).cwiseMax(0.0);
  return model;
}

Matrix pca_transform(const PcaModel& model, const Matrix& data) {
  if (data.cols() != model.basis.rows()) {
    throw DimensionError("pca_transform: data has " + std::to_string(data.cols()) +
                         " columns, basis expects " + std::to_string(model.basis.rows()));
  }
  return (data.rowwise() - model.mean.transpose()) * model.basis;
}

PcaResult pca_fit_transform(const Matrix& data, Eigen::Index target_dim) {
  PcaResult out;
  out.model = pca_fit(data, target_dim);
  out.projected = pca_transform(out.model, data);
  return out;
}

Matrix pairwise_sq_dist(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.cols()) {
    throw DimensionError("pairwise_sq_dist: column mismatch " + std::to_string(a.cols()) +
                         " vs " + std::to_string(b.cols()));
  }
  Matrix out(a.rows(), b.rows());
  for (Eigen::Index j = 0; j < b.rows(); ++j) {
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
      out(i, j) = (a.row(i) - b.row(j)).squaredNorm();
    }
  }
  return out;
}

IndexMatrix knn_indices(const Matrix& queries, const Matrix& reference, Eigen::Index k) {
  if (queries.cols() != reference.cols()) {
    throw DimensionError("knn_indices: column mismatch " + std::to_string(queries.cols()) +
                         " vs " + std::to_string(reference.cols()));
  }
  if (k < 1 || k > reference.rows()) {
    throw DimensionError("knn_indices: k = " + std::to_string(k) + " with " +
                         std::to_string(reference.rows()) + " reference points");
  }
  const Eigen::Index m = reference.rows();
  IndexMatrix out(queries.rows(), k);
  std::vector<std::pair<double, Eigen::Index>> dist(static_cast<std::size_t>(m));
  // Transposed copy keeps each reference point contiguous.
  const Matrix ref_t = reference.transpose();
  for (Eigen::Index i = 0; i < queries.rows(); ++i) {
    const Vector q = queries.row(i).transpose();
    for (Eigen::Index j = 0; j < m; ++j) {
      dist[static_cast<std::size_t>(j)] = {(ref_t.col(j) - q).squaredNorm(), j};
    }
    const auto kth = dist.begin() + k;
    std::partial_sort(dist.begin(), kth, dist.end());
    for (Eigen::Index c = 0; c < k; ++c) out(i, c) = dist[static_cast<std::size_t>(c)].second;
  }
  return out;
}

}  // namespace lfda::linalg
