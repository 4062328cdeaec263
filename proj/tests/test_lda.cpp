#include "lfda/error.hpp"
#include "lfda/lda.hpp"
#include "support.hpp"

#include <doctest.h>

#include <Eigen/Eigenvalues>

#include <random>
#include <vector>

using namespace lfda;
using namespace lfda::lda;
using lfda::test::abs_cosine;
using lfda::test::random_matrix;

namespace {

struct Labeled {
  Matrix points;
  std::vector<ClassId> labels;
};

Labeled gaussian_classes(std::mt19937_64& rng, int C, Eigen::Index per_class, Eigen::Index d, double spread) {
  Labeled out;
  out.points = random_matrix(C * per_class, d, rng);
  const Matrix centres = spread * random_matrix(C, d, rng);
  for (int c = 0; c < C; ++c) {
    for (Eigen::Index i = 0; i < per_class; ++i) {
      out.points.row(c * per_class + i) += centres.row(c);
      out.labels.push_back(c);
    }
  }
  return out;
}

// Generalized eigenvectors of (S_w + beta I)^-1 S_b by explicit inversion,
// sorted by eigenvalue, real parts only.
std::vector<std::pair<double, Vector>> brute_force(const ScatterPair& sc, double beta) {
  const Eigen::Index d = sc.within.rows();
  const Matrix a = (sc.within + beta * Matrix::Identity(d, d)).inverse() * sc.between;
  Eigen::EigenSolver<Matrix> es(a);
  std::vector<std::pair<double, Vector>> pairs;
  for (Eigen::Index j = 0; j < d; ++j) pairs.emplace_back(es.eigenvalues()(j).real(), es.eigenvectors().col(j).real());
  std::sort(pairs.begin(), pairs.end(), [](const auto& x, const auto& y) { return x.first > y.first; });
  return pairs;
}

}  // namespace

TEST_CASE("scatter pieces add up to the total scatter") {
  std::mt19937_64 rng(1);
  for (int rep = 0; rep < 20; ++rep) {
    const int C = 2 + rep % 4;
    const Labeled data = gaussian_classes(rng, C, 7 + rep, 5, 2.0);
    const ScatterPair sc = scatter(data.points, data.labels, C);
    const Matrix centered = data.points.rowwise() - data.points.colwise().mean();
    const Matrix total = centered.transpose() * centered;
    CHECK((sc.within + sc.between - total).norm() < 1e-9 * total.norm());
    CHECK(linalg::max_asymmetry(sc.within) == 0.0);
    CHECK(linalg::max_asymmetry(sc.between) == 0.0);
  }
}

TEST_CASE("scatter is a sum over points") {
  Matrix x(4, 1);
  x << 0, 2, 10, 14;
  const std::vector<ClassId> z{0, 0, 1, 1};
  const ScatterPair sc = scatter(x, z, 2);
  // Class means 1 and 12, global mean 6.5.
  CHECK(sc.within(0, 0) == doctest::Approx(1 + 1 + 4 + 4));
  CHECK(sc.between(0, 0) == doctest::Approx(2 * 5.5 * 5.5 + 2 * 5.5 * 5.5));
  CHECK(sc.class_counts == std::vector<Eigen::Index>{2, 2});
}

TEST_CASE("fit_projection matches explicit-inverse brute force for small d") {
  std::mt19937_64 rng(2);
  for (int rep = 0; rep < 60; ++rep) {
    const Eigen::Index d = 2 + rep % 5;
    const int C = 2 + rep % 3;
    const double beta = (rep % 3 == 0) ? 0.0 : 0.5 * (rep % 7);
    const Labeled data = gaussian_classes(rng, C, 12, d, 1.5);
    const ScatterPair sc = scatter(data.points, data.labels, C);
    const Eigen::Index target = std::min<Eigen::Index>(C - 1, d);
    const Projection p = fit_projection(sc, beta, target);
    const auto oracle = brute_force(sc, beta);
    REQUIRE(p.output_dim() == target);
    for (Eigen::Index j = 0; j < p.output_dim(); ++j) {
      CHECK(abs_cosine(p.basis.col(j), oracle[static_cast<std::size_t>(j)].second) > 1.0 - 1e-6);
      CHECK(p.eigenvalues(j) == doctest::Approx(oracle[static_cast<std::size_t>(j)].first).epsilon(1e-8));
      CHECK(p.basis.col(j).norm() == doctest::Approx(1.0));
    }
  }
}

TEST_CASE("two classes give the Fisher direction") {
  std::mt19937_64 rng(3);
  const Labeled data = gaussian_classes(rng, 2, 40, 4, 3.0);
  const ScatterPair sc = scatter(data.points, data.labels, 2);
  const double beta = 1.5;
  const Vector diff = (sc.class_means.row(1) - sc.class_means.row(0)).transpose();
  const Vector fisher = (sc.within + beta * Matrix::Identity(4, 4)).inverse() * diff;
  const Projection p = fit_projection(sc, beta, 1);
  CHECK(abs_cosine(p.basis.col(0), fisher) > 1.0 - 1e-9);
}

TEST_CASE("a large ridge turns the direction towards the mean difference") {
  std::mt19937_64 rng(4);
  const Labeled data = gaussian_classes(rng, 2, 30, 5, 1.0);
  const ScatterPair sc = scatter(data.points, data.labels, 2);
  const Vector diff = (sc.class_means.row(1) - sc.class_means.row(0)).transpose();
  CHECK(abs_cosine(fit_projection(sc, 1e9, 1).basis.col(0), diff) > 1.0 - 1e-6);
}

TEST_CASE("projection is invariant to scaling the data when beta is zero") {
  std::mt19937_64 rng(5);
  const Labeled data = gaussian_classes(rng, 3, 25, 4, 2.0);
  const Projection a = fit_lda(data.points, data.labels, 3, 0.0);
  const Projection b = fit_lda(7.5 * data.points, data.labels, 3, 0.0);
  for (Eigen::Index j = 0; j < 2; ++j) CHECK(abs_cosine(a.basis.col(j), b.basis.col(j)) > 1.0 - 1e-9);
}

TEST_CASE("rank-deficient within scatter still works with a ridge") {
  std::mt19937_64 rng(6);
  // More dimensions than points.
  const Labeled data = gaussian_classes(rng, 2, 3, 10, 2.0);
  const Projection p = fit_lda(data.points, data.labels, 2, 1.0);
  CHECK(p.output_dim() == 1);
  CHECK(p.basis.allFinite());
}

TEST_CASE("coincident class means are rejected") {
  Matrix x(4, 2);
  x << -1, 0, 1, 0, 0, -1, 0, 1;
  const std::vector<ClassId> z{0, 0, 1, 1};
  CHECK_THROWS_AS(fit_lda(x, z, 2, 1.0), NoDiscriminationError);
}

TEST_CASE("collinear class means reduce the output dimension") {
  Matrix x(6, 2);
  x << 0, 0.1, 0, -0.1, 1, 0.1, 1, -0.1, 2, 0.1, 2, -0.1;
  const std::vector<ClassId> z{0, 0, 1, 1, 2, 2};
  const Projection p = fit_lda(x, z, 3, 0.01);
  CHECK(p.output_dim() == 1);
  CHECK(p.requested_dim == 2);
  CHECK(p.rank_reduced());
  CHECK(abs_cosine(p.basis.col(0), Vector::Unit(2, 0)) > 1.0 - 1e-9);
}

TEST_CASE("argument errors") {
  std::mt19937_64 rng(7);
  const Labeled data = gaussian_classes(rng, 2, 5, 3, 2.0);
  CHECK_THROWS_AS(scatter(data.points, std::vector<ClassId>{0, 1}, 2), DimensionError);
  std::vector<ClassId> bad = data.labels;
  bad[0] = 2;
  CHECK_THROWS_AS(scatter(data.points, bad, 2), LabelError);
  CHECK_THROWS_AS(scatter(data.points, data.labels, 3), LabelError);
  CHECK_THROWS_AS(fit_lda(data.points, data.labels, 1, 1.0), LabelError);
  const ScatterPair sc = scatter(data.points, data.labels, 2);
  CHECK_THROWS_AS(fit_projection(sc, -1.0, 1), InputError);
  CHECK_THROWS_AS(fit_projection(sc, 1.0, 2), DimensionError);
  CHECK_THROWS_AS(project(fit_projection(sc, 1.0, 1), Matrix::Zero(2, 4)), DimensionError);
}

TEST_CASE("objective is the trace ratio plus the ridge term") {
  std::mt19937_64 rng(8);
  const Labeled data = gaussian_classes(rng, 3, 20, 4, 2.0);
  const ScatterPair sc = scatter(data.points, data.labels, 3);
  const Projection p = fit_projection(sc, 2.0, 2);
  const Matrix num = p.basis.transpose() * sc.within * p.basis;
  const Matrix den = p.basis.transpose() * sc.between * p.basis;
  const double ratio = (num * den.inverse()).trace();
  CHECK(trace_ratio(sc, p.basis) == doctest::Approx(ratio).epsilon(1e-9));
  CHECK(objective(sc, p, 2.0) == doctest::Approx(ratio + 2.0 * 2.0).epsilon(1e-9));
}
