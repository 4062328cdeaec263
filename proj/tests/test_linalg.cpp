#include "lfda/error.hpp"
#include "lfda/linalg.hpp"
#include "support.hpp"

#include <doctest.h>

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <numbers>

using namespace lfda;
using namespace lfda::linalg;
using lfda::test::random_matrix;
using lfda::test::random_symmetric;

namespace {

double column_residual(const Matrix& m, const EigenResult& r, Eigen::Index k) {
  const Vector v = r.eigenvectors.col(k);
  return (m * v - r.eigenvalues(k) * v).norm() / std::max(1.0, m.norm());
}

// Roots of the 3x3 characteristic polynomial via the trigonometric formula.
std::vector<double> cubic_eigenvalues(const Matrix& a) {
  const double p1 = a(0, 1) * a(0, 1) + a(0, 2) * a(0, 2) + a(1, 2) * a(1, 2);
  const double q = a.trace() / 3.0;
  const double p2 = std::pow(a(0, 0) - q, 2) + std::pow(a(1, 1) - q, 2) + std::pow(a(2, 2) - q, 2) + 2.0 * p1;
  const double p = std::sqrt(p2 / 6.0);
  const Matrix b = (a - q * Matrix::Identity(3, 3)) / p;
  const double r = std::clamp(b.determinant() / 2.0, -1.0, 1.0);
  const double phi = std::acos(r) / 3.0;
  const double e1 = q + 2.0 * p * std::cos(phi);
  const double e3 = q + 2.0 * p * std::cos(phi + 2.0 * std::numbers::pi / 3.0);
  return {e1, 3.0 * q - e1 - e3, e3};
}

}  // namespace

TEST_CASE("sym_eigen on the identity") {
  const EigenResult r = sym_eigen(Matrix::Identity(3, 3));
  for (int k = 0; k < 3; ++k) CHECK(r.eigenvalues(k) == doctest::Approx(1.0));
  CHECK((r.eigenvectors.transpose() * r.eigenvectors - Matrix::Identity(3, 3)).norm() < 1e-12);
}

TEST_CASE("sym_eigen on a diagonal matrix returns sorted unit axes") {
  Matrix m = Matrix::Zero(3, 3);
  m.diagonal() << 1.0, 5.0, 2.0;
  const EigenResult r = sym_eigen(m);
  CHECK(r.eigenvalues(0) == doctest::Approx(5.0));
  CHECK(r.eigenvalues(1) == doctest::Approx(2.0));
  CHECK(r.eigenvalues(2) == doctest::Approx(1.0));
  CHECK(r.eigenvectors(1, 0) == doctest::Approx(1.0));
  CHECK(r.eigenvectors(2, 1) == doctest::Approx(1.0));
  CHECK(r.eigenvectors(0, 2) == doctest::Approx(1.0));
}

TEST_CASE("sym_eigen matches closed-form 2x2 eigenvalues") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    const Matrix m = random_symmetric(2, rng);
    const double mid = 0.5 * (m(0, 0) + m(1, 1));
    const double rad = std::hypot(0.5 * (m(0, 0) - m(1, 1)), m(0, 1));
    const EigenResult r = sym_eigen(m);
    CHECK(r.eigenvalues(0) == doctest::Approx(mid + rad).epsilon(1e-10));
    CHECK(r.eigenvalues(1) == doctest::Approx(mid - rad).epsilon(1e-10));
  }
}

TEST_CASE("sym_eigen matches closed-form 3x3 eigenvalues") {
  Matrix tri(3, 3);
  tri << 2, -1, 0, -1, 2, -1, 0, -1, 2;
  const EigenResult known = sym_eigen(tri);
  CHECK(known.eigenvalues(0) == doctest::Approx(2.0 + std::sqrt(2.0)));
  CHECK(known.eigenvalues(1) == doctest::Approx(2.0));
  CHECK(known.eigenvalues(2) == doctest::Approx(2.0 - std::sqrt(2.0)));

  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 50; ++trial) {
    const Matrix m = random_symmetric(3, rng);
    const std::vector<double> oracle = cubic_eigenvalues(m);
    const EigenResult r = sym_eigen(m);
    for (int k = 0; k < 3; ++k) CHECK(std::abs(r.eigenvalues(k) - oracle[static_cast<std::size_t>(k)]) < 1e-9);
  }
}

TEST_CASE("sym_eigen residuals, ordering, orthonormality and signs on random matrices") {
  std::mt19937_64 rng(13);
  for (Eigen::Index n : {1, 2, 6, 17, 40}) {
    const Matrix m = random_symmetric(n, rng);
    const EigenResult r = sym_eigen(m);
    for (Eigen::Index k = 0; k < n; ++k) {
      CHECK(column_residual(m, r, k) < 1e-6);
      CHECK(r.eigenvectors.col(k).norm() == doctest::Approx(1.0).epsilon(1e-12));
      Eigen::Index arg = 0;
      r.eigenvectors.col(k).cwiseAbs().maxCoeff(&arg);
      CHECK(r.eigenvectors(arg, k) > 0.0);
      if (k > 0) CHECK(r.eigenvalues(k - 1) >= r.eigenvalues(k));
    }
    const Matrix recon = r.eigenvectors * r.eigenvalues.asDiagonal() * r.eigenvectors.transpose();
    CHECK((m - recon).norm() / std::max(1e-300, m.norm()) < 1e-6);
    CHECK((r.eigenvectors.transpose() * r.eigenvectors - Matrix::Identity(n, n)).norm() < 1e-9);

    Eigen::SelfAdjointEigenSolver<Matrix> ref(m);
    for (Eigen::Index k = 0; k < n; ++k) {
      CHECK(std::abs(r.eigenvalues(k) - ref.eigenvalues()(n - 1 - k)) < 1e-9 * std::max(1.0, m.norm()));
    }
  }
}

TEST_CASE("sym_eigen rejects bad input") {
  CHECK_THROWS_AS(sym_eigen(Matrix::Zero(2, 3)), DimensionError);
  Matrix asym = Matrix::Identity(3, 3);
  asym(0, 1) = 1e-3;
  CHECK_THROWS_AS(sym_eigen(asym), SymmetryError);
  asym(0, 1) = 1e-10;
  CHECK_NOTHROW(sym_eigen(asym));

  std::mt19937_64 rng(14);
  JacobiOptions opts;
  opts.max_sweeps = 1;
  CHECK_THROWS_AS(sym_eigen(random_symmetric(12, rng), opts), ConvergenceError);
}

TEST_CASE("pseudo_inverse of diagonal and full-rank matrices") {
  Matrix d = Matrix::Zero(2, 2);
  d(0, 0) = 2.0;
  const Matrix dp = pseudo_inverse(d);
  CHECK(dp(0, 0) == doctest::Approx(0.5));
  CHECK(std::abs(dp(1, 1)) < 1e-15);
  CHECK(std::abs(dp(0, 1)) < 1e-15);

  std::mt19937_64 rng(21);
  const Matrix spd = lfda::test::random_spd(3, rng);
  CHECK((spd * pseudo_inverse(spd) - Matrix::Identity(3, 3)).norm() < 1e-6);
}

TEST_CASE("pseudo_inverse of a unit rank-one projector is itself") {
  Vector u(3);
  u << 1.0, 2.0, -2.0;
  u.normalize();
  const Matrix p = u * u.transpose();
  CHECK((pseudo_inverse(p) - p).norm() < 1e-9);
}

TEST_CASE("pseudo_inverse satisfies the Penrose conditions for every rank") {
  std::mt19937_64 rng(22);
  const Eigen::Index d = 6;
  for (Eigen::Index rank = 1; rank <= d; ++rank) {
    for (int trial = 0; trial < 5; ++trial) {
      const Matrix b = random_matrix(d, rank, rng);
      Vector signs = Vector::Ones(rank);
      if (trial % 2 == 1) signs(0) = -1.0;  // indefinite case
      const Matrix m = b * signs.asDiagonal() * b.transpose();
      const Matrix mp = pseudo_inverse(m);
      const double scale = std::max(1.0, m.norm());
      CHECK((m * mp * m - m).norm() / scale < 1e-6);
      CHECK((mp * m * mp - mp).norm() / std::max(1.0, mp.norm()) < 1e-6);
      CHECK(((m * mp).transpose() - m * mp).norm() < 1e-6);
      CHECK(((mp * m).transpose() - mp * m).norm() < 1e-6);
    }
  }
}

TEST_CASE("pseudo_inverse honours an explicit rank tolerance") {
  Matrix d = Matrix::Zero(2, 2);
  d(0, 0) = 1.0;
  d(1, 1) = 1e-3;
  CHECK(pseudo_inverse(d)(1, 1) == doctest::Approx(1e3));
  CHECK(pseudo_inverse(d, 1e-2)(1, 1) == 0.0);
}

TEST_CASE("pca on data along a line keeps all variance in one component") {
  Matrix data(6, 2);
  for (int i = 0; i < 6; ++i) data.row(i) << 1.0 + i, 2.0 - 3.0 * i;
  const PcaResult r = pca_fit_transform(data, 1);
  const Matrix centered = data.rowwise() - data.colwise().mean();
  const double total = centered.squaredNorm() / 5.0;
  const Vector proj = r.projected.col(0);
  const double projected_var = (proj.array() - proj.mean()).square().sum() / 5.0;
  CHECK(std::abs(projected_var - total) < 1e-9);
  CHECK(r.model.variances(0) == doctest::Approx(total));
}

TEST_CASE("pca basis is orthonormal, ordered and reconstructs at full rank") {
  std::mt19937_64 rng(31);
  Matrix data = random_matrix(20, 5, rng);
  data.col(0) *= 4.0;
  data.col(3) *= 2.0;
  const PcaResult r = pca_fit_transform(data, 5);
  CHECK((r.model.basis.transpose() * r.model.basis - Matrix::Identity(5, 5)).norm() < 1e-9);
  for (Eigen::Index k = 1; k < 5; ++k) CHECK(r.model.variances(k - 1) >= r.model.variances(k));
  const Matrix centered = data.rowwise() - r.model.mean.transpose();
  CHECK((r.projected - centered * r.model.basis).norm() < 1e-9);
  const Matrix recon = (r.projected * r.model.basis.transpose()).rowwise() + r.model.mean.transpose();
  CHECK((recon - data).norm() < 1e-9);
  CHECK((pca_transform(r.model, data) - r.projected).norm() < 1e-12);
}

TEST_CASE("pca rejects impossible target dimensions") {
  std::mt19937_64 rng(32);
  const Matrix data = random_matrix(4, 6, rng);
  CHECK_THROWS_AS(pca_fit(data, 4), DimensionError);
  CHECK_THROWS_AS(pca_fit(data, 0), DimensionError);
  CHECK_THROWS_AS(pca_fit(random_matrix(1, 3, rng), 1), DimensionError);
  CHECK_NOTHROW(pca_fit(data, 3));
}

TEST_CASE("pairwise_sq_dist small hand case") {
  Matrix a(2, 1);
  a << 0.0, 3.0;
  const Matrix d = pairwise_sq_dist(a, a);
  CHECK(d(0, 0) == 0.0);
  CHECK(d(1, 1) == 0.0);
  CHECK(d(0, 1) == doctest::Approx(9.0));
  CHECK(d(1, 0) == doctest::Approx(9.0));
}

TEST_CASE("pairwise_sq_dist matches a double loop and behaves like a metric") {
  std::mt19937_64 rng(41);
  const Matrix a = random_matrix(4, 3, rng);
  const Matrix b = random_matrix(5, 3, rng);
  const Matrix d = pairwise_sq_dist(a, b);
  for (Eigen::Index i = 0; i < 4; ++i) {
    for (Eigen::Index j = 0; j < 5; ++j) {
      double s = 0.0;
      for (Eigen::Index k = 0; k < 3; ++k) s += (a(i, k) - b(j, k)) * (a(i, k) - b(j, k));
      CHECK(std::abs(d(i, j) - s) < 1e-9);
      CHECK(d(i, j) >= 0.0);
    }
  }
  const Matrix c = random_matrix(7, 3, rng);
  const Matrix self = pairwise_sq_dist(c, c);
  CHECK((self - self.transpose()).norm() == 0.0);
  for (Eigen::Index i = 0; i < 7; ++i) CHECK(self(i, i) == 0.0);
  for (Eigen::Index i = 0; i < 7; ++i) {
    for (Eigen::Index j = 0; j < 7; ++j) {
      for (Eigen::Index k = 0; k < 7; ++k) {
        CHECK(std::sqrt(self(i, k)) <= std::sqrt(self(i, j)) + std::sqrt(self(j, k)) + 1e-12);
      }
    }
  }
  CHECK_THROWS_AS(pairwise_sq_dist(a, random_matrix(2, 4, rng)), DimensionError);
}

TEST_CASE("knn_indices agrees with a brute-force sort and breaks ties by index") {
  std::mt19937_64 rng(42);
  const Matrix q = random_matrix(6, 2, rng);
  const Matrix ref = random_matrix(15, 2, rng);
  const IndexMatrix nn = knn_indices(q, ref, 4);
  for (Eigen::Index i = 0; i < q.rows(); ++i) {
    std::vector<std::pair<double, Eigen::Index>> all;
    for (Eigen::Index j = 0; j < ref.rows(); ++j) all.emplace_back((q.row(i) - ref.row(j)).squaredNorm(), j);
    std::sort(all.begin(), all.end());
    for (Eigen::Index k = 0; k < 4; ++k) CHECK(nn(i, k) == all[static_cast<std::size_t>(k)].second);
  }

  Matrix tied(4, 1);
  tied << 1.0, -1.0, 1.0, -1.0;
  Matrix origin = Matrix::Zero(1, 1);
  const IndexMatrix t = knn_indices(origin, tied, 3);
  CHECK(t(0, 0) == 0);
  CHECK(t(0, 1) == 1);
  CHECK(t(0, 2) == 2);
}

TEST_CASE("max_asymmetry") {
  Matrix m = Matrix::Identity(2, 2);
  m(0, 1) = 0.25;
  CHECK(max_asymmetry(m) == doctest::Approx(0.25));
}
