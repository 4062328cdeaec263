#pragma once

#include "lfda/linalg.hpp"
#include "lfda/mildata.hpp"

#include <cmath>
#include <random>

namespace lfda::test {

using linalg::Matrix;
using linalg::Vector;

inline Matrix random_matrix(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = g(rng);
  }
  return m;
}

inline Matrix random_symmetric(Eigen::Index n, std::mt19937_64& rng) {
  const Matrix a = random_matrix(n, n, rng);
  return 0.5 * (a + a.transpose());
}

inline Matrix random_spd(Eigen::Index n, std::mt19937_64& rng) {
  const Matrix a = random_matrix(n, n, rng);
  return a * a.transpose() + static_cast<double>(n) * Matrix::Identity(n, n);
}

/// |cos| of the angle between two vectors.
inline double abs_cosine(const Vector& a, const Vector& b) {
  return std::abs(a.dot(b)) / (a.norm() * b.norm());
}

/// A dataset where every bag holds exactly one instance.
inline BagDataset singleton_bags(const Matrix& points, const std::vector<ClassId>& labels, int num_classes) {
  BagDataset ds;
  for (int c = 0; c < num_classes; ++c) ds.class_names.push_back("c" + std::to_string(c));
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    ds.bags.push_back(Bag{"b" + std::to_string(i), labels[static_cast<std::size_t>(i)], points.row(i)});
  }
  ds.dim = points.cols();
  return ds;
}

}  // namespace lfda::test
