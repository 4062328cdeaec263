#pragma once

#include "lfda/linalg.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace lfda {

/// Class indices are 0-based internally; the original label strings are kept
/// in BagDataset::class_names for reporting.
using ClassId = int;

struct Bag {
  std::string id;
  ClassId label = 0;
  linalg::Matrix instances;  ///< n_i x d, one instance per row

  Eigen::Index size() const { return instances.rows(); }
};

/// A multiple-instance dataset. Labels exist only at bag level.
struct BagDataset {
  std::vector<Bag> bags;
  std::vector<std::string> class_names;
  Eigen::Index dim = 0;

  int num_classes() const { return static_cast<int>(class_names.size()); }
  Eigen::Index num_instances() const;
  std::vector<std::size_t> bags_per_class() const;

  /// Throws InputError if any invariant is broken: consistent dimension,
  /// non-empty bags, labels in range, every class represented, finite values.
  void validate() const;

  /// Subset of bags by index, keeping the class table.
  BagDataset subset(const std::vector<std::size_t>& bag_indices) const;
};

/// All instances stacked in bag order, with bag-propagated labels.
struct InstanceView {
  linalg::Matrix points;              ///< N x d
  std::vector<ClassId> labels;        ///< bag label of each instance
  std::vector<std::size_t> bag_of;    ///< owning bag index of each instance
};

InstanceView flatten(const BagDataset& ds);

/// Generic bag-CSV: `bag_id,label,f1,...,fd`, one instance per line. A header
/// is recognized when the first feature field of the first line is not a
/// number. Classes are numbered by sorted label string (numeric order when all
/// labels are numbers).
BagDataset read_bag_csv(std::istream& in);
BagDataset load_bag_csv(const std::filesystem::path& path);

/// MUSK in bag-CSV layout: d = 166 and labels drawn from {0, 1}.
BagDataset load_musk(const std::filesystem::path& path);

/// Writes with full round-trip precision, no header.
void write_bag_csv(const BagDataset& ds, std::ostream& out);
void save_bag_csv(const BagDataset& ds, const std::filesystem::path& path);

struct PlantedOptions {
  std::uint64_t seed = 0;
  int num_classes = 2;
  int bags_per_class = 10;
  int instances_per_bag = 10;
  int dim = 2;
  double separation = 10.0;
  double signal_fraction = 0.3;
  double background_scale = 1.0;  ///< standard deviation of the shared background
};

/// Instance-level truth for synthetic data: the class whose signal Gaussian
/// produced the instance, or kNoise for the shared background.
struct PlantedData {
  static constexpr ClassId kNoise = -1;
  BagDataset dataset;
  std::vector<ClassId> truth;  ///< parallel to flatten(dataset).points
};

/// Bags whose instances mix a class-specific signal Gaussian with a shared
/// background Gaussian (unit covariances). Class means are pairwise at least
/// `separation` apart and at distance >= separation / 2 from the background.
PlantedData synth_planted(const PlantedOptions& options);

/// Stratified bag-level fold assignment.
struct FoldPlan {
  int num_folds = 0;
  std::uint64_t seed = 0;
  std::vector<int> fold_of_bag;  ///< 0-based fold index per bag

  std::vector<std::size_t> test_bags(int fold) const;
  std::vector<std::size_t> train_bags(int fold) const;
};

/// Each class's bags are shuffled and dealt round-robin into k folds; the deal
/// continues across classes so fold sizes stay balanced. Throws
/// StratificationError when a class has fewer than k bags.
FoldPlan make_folds(const BagDataset& ds, int k, std::uint64_t seed);

/// Per-dimension zero-mean unit-variance scaling. Dimensions with zero spread
/// keep scale 1.
struct Standardizer {
  linalg::Vector mean;
  linalg::Vector scale;

  static Standardizer fit(const linalg::Matrix& points);
  linalg::Matrix apply(const linalg::Matrix& points) const;
};

/// Applies `transform` to every bag's instance matrix, returning a new dataset.
template <typename Fn>
BagDataset map_instances(const BagDataset& ds, Fn&& transform) {
  BagDataset out;
  out.class_names = ds.class_names;
  out.bags.reserve(ds.bags.size());
  for (const Bag& bag : ds.bags) {
    out.bags.push_back(Bag{bag.id, bag.label, transform(bag.instances)});
  }
  out.dim = out.bags.empty() ? 0 : out.bags.front().instances.cols();
  return out;
}

}  // namespace lfda
