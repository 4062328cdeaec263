#pragma once

#include "lfda/gmm.hpp"
#include "lfda/lda.hpp"
#include "lfda/linalg.hpp"
#include "lfda/mildata.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace lfda {

using linalg::Matrix;
using linalg::Vector;

enum class Variant {
  kLfda,   ///< pick the cluster with the largest vote weight
  kJlfda,  ///< pick the cluster with the largest mixing weight x vote weight
};

/// How a bag label is read off per-instance kNN scores.
enum class BagRule {
  kMaxInstance,   ///< argmax_c max_instances score(c)
  kMeanInstance,  ///< argmax_c mean_instances score(c)
};

/// How kNN votes become cluster weights; see compute_cluster_weights.
enum class WeightRule {
  kVoteShare,   ///< votes landing on the cluster over all votes cast
  kLocalShare,  ///< votes landing on the cluster over votes for the nearest rival clusters
  kCellPurity,  ///< share of the cluster's Voronoi cell voting for its class
};

/// Cluster weights used for the first selection.
enum class WeightInit {
  kUniform,  ///< 1/K everywhere, so the first pick is by mixing weight
  kBagVote,  ///< vote against every training instance with its bag label
};

std::string to_string(Variant v);
std::string to_string(BagRule r);
std::string to_string(WeightRule r);
std::string to_string(WeightInit w);
Variant parse_variant(const std::string& s);
BagRule parse_bag_rule(const std::string& s);
WeightRule parse_weight_rule(const std::string& s);
WeightInit parse_weight_init(const std::string& s);

struct HyperParams {
  int components = 3;         ///< K, mixture components per class
  int neighbors = 4;          ///< N, kNN neighbourhood size
  int max_iterations = 20;    ///< T
  double beta = 40.0;         ///< ridge on the within-class scatter
  double epsilon = 1e-4;      ///< stop when ||P_t - P_{t-1}||_F < epsilon
  Variant variant = Variant::kJlfda;
  std::uint64_t seed = 0;
  BagRule bag_rule = BagRule::kMaxInstance;
  WeightRule weight_rule = WeightRule::kCellPurity;
  WeightInit weight_init = WeightInit::kUniform;
  int em_max_iter = 200;
  double em_ll_tol = 1e-6;

  /// Throws InputError unless K, N, T >= 1, beta >= 0 and epsilon > 0.
  void validate() const;
};

struct PreprocessOptions {
  bool standardize = true;
  std::optional<int> pca_dim;
};

/// Feature preprocessing fitted on training instances only.
struct Preprocessor {
  Eigen::Index input_dim = 0;
  std::optional<Standardizer> standardizer;
  std::optional<linalg::PcaModel> pca;

  static Preprocessor fit(const Matrix& raw, const PreprocessOptions& options);
  Matrix apply(const Matrix& raw) const;
  Eigen::Index output_dim() const;
};

/// Per-class, per-cluster vote weights (C x K), all in [0, 1].
struct ClusterWeights {
  Matrix w;
  Matrix spread;  ///< mean distance from each cell's voters to their neighbours of that class; inf without votes
  std::vector<bool> no_votes;  ///< class received no votes at all
};

/// kNN vote weights for every class's clusters.
///
/// Each instance y in `points` looks up its N nearest neighbours in the
/// reference set and votes for the majority label c among them (ties split the
/// vote evenly). The vote lands on the class-c cluster whose centre is nearest
/// to y. With prior(i) the share of instances whose bag carries label i:
///
///   kVoteShare:  w(i, j) = prior(i) * votes(i, j) / |Y|
///   kLocalShare: w(i, j) = prior(i) * votes(i, j) / sum_c votes(c, n_c), where
///                n_c is the class-c cluster nearest to centre (i, j) and
///                n_i = j.
///   kCellPurity: w(i, j) = prior(i) * votes(i, j) / |cell(i, j)|, where
///                cell(i, j) holds the y whose nearest class-i centre is j.
///
/// `centers[i]` holds class i's K cluster centres (rows); rows may be NaN for
/// empty clusters, which then never receive votes. Throws
/// MissingReferenceError when a class has no reference points or the
/// reference set is empty, and DimensionError on shape mismatches.
ClusterWeights compute_cluster_weights(const Matrix& points, std::span<const ClassId> point_labels,
                                       const Matrix& reference, std::span<const ClassId> reference_labels,
                                       const std::vector<Matrix>& centers, int neighbors,
                                       WeightRule rule = WeightRule::kCellPurity);

struct Selection {
  int cluster = 0;
  bool fallback = false;  ///< every score was zero; picked by mixing weight
};

/// LFDA: argmax_j w_j. JLFDA: argmax_j pi_j * w_j. Ties go to the smaller
/// `spread[j]` when given (see ClusterWeights), then the larger pi_j, then the
/// lower index. Clusters with `eligible[j] == false` are never chosen (an
/// empty span means all are eligible).
Selection select_cluster(const Vector& mixing_weights, const Vector& w, Variant variant,
                         std::span<const bool> eligible = {}, std::span<const double> spread = {});

/// One outer iteration of the training loop.
struct IterationRecord {
  int iteration = 0;
  double delta_p = 0.0;    ///< ||P_t - P_{t-1}||_F after sign alignment
  double objective = 0.0;  ///< trace-ratio objective on the relabeled subset
  std::vector<int> selected;
  std::vector<bool> fallback;
  Eigen::Index relabeled_size = 0;
  Eigen::Index subspace_dim = 0;
};

/// The relabeled subset after an iteration.
struct LatentState {
  int iteration = 0;
  std::vector<int> selected;                    ///< j* per class
  std::vector<Eigen::Index> members;            ///< training-instance indices in X+
  std::vector<ClassId> labels;                  ///< latent label per member
};

struct TrainedModel {
  HyperParams params;
  std::vector<std::string> class_names;
  Preprocessor preprocessing;
  lda::Projection projection;
  std::vector<gmm::ClassMixture> mixtures;  ///< in projected coordinates
  std::vector<int> selected;
  ClusterWeights weights;
  Matrix reference_points;                  ///< Y+, projected
  std::vector<ClassId> reference_labels;
  LatentState latent;
  std::vector<IterationRecord> trace;
  bool converged = false;

  int num_classes() const { return static_cast<int>(class_names.size()); }
  Eigen::Index subspace_dim() const { return projection.output_dim(); }
};

/// Alternating latent-label / projection training.
///
/// Starts from plain LDA on bag-propagated labels, then repeats: project,
/// fit a mixture per class, pick one cluster per class, refit LDA on the
/// union of picked clusters, until the projection moves less than epsilon or
/// T iterations pass. Throws InsufficientDataError when a class has fewer than
/// K instances and NoDiscriminationError when the initial LDA is degenerate.
TrainedModel train(const BagDataset& ds, const HyperParams& hp,
                   const PreprocessOptions& preprocess = {});

/// Plain LDA on bag-propagated labels; the reference set is every training
/// instance. Shares the prediction path with `train`.
TrainedModel train_lda_baseline(const BagDataset& ds, const HyperParams& hp,
                                const PreprocessOptions& preprocess = {});

/// Reference set drawn uniformly at random: ceil(n_c / K) instances per class.
TrainedModel train_random_baseline(const BagDataset& ds, const HyperParams& hp,
                                   const PreprocessOptions& preprocess = {});

struct BagPrediction {
  ClassId label = 0;
  Matrix instance_scores;  ///< n_i x C, fraction of the N neighbours with each label
  Vector bag_scores;       ///< C, aggregated per the bag rule
};

/// Classes tied on the aggregated score are separated by the mean distance
/// from the deciding instance(s) to their neighbours of that class (closer
/// wins), then by class index. Throws DimensionError when the bag's width
/// differs from the training data.
BagPrediction predict_bag(const TrainedModel& model, const Bag& bag);
BagPrediction predict_bag(const TrainedModel& model, const Bag& bag, BagRule rule);

struct Ranking {
  std::vector<Eigen::Index> order;  ///< instance indices, best first
  std::vector<double> scores;       ///< parallel to order
  bool truncated = false;           ///< top_m exceeded the bag size
};

/// Scores each instance against class c's selected cluster: negative distance
/// to its centre (LFDA) or log pi + log density under it (JLFDA). Ties go to
/// the lower instance index.
Ranking rank_instances(const TrainedModel& model, const Bag& bag, ClassId c, std::size_t top_m,
                       Variant variant);
Ranking rank_instances(const TrainedModel& model, const Bag& bag, ClassId c, std::size_t top_m);

/// Uniform sample of `top_m` instance indices without replacement.
std::vector<Eigen::Index> rand_rank_baseline(const Bag& bag, std::size_t top_m, std::uint64_t seed);

/// Objective on (P, z): lda::objective over the relabeled subset's scatter.
double evaluate_objective(const Matrix& relabeled_points, std::span<const ClassId> labels,
                          int num_classes, const lda::Projection& p, double beta);

/// ||next - previous||_F after flipping each column of `next` to agree in sign
/// with `previous`; infinite when the shapes differ.
double aligned_distance(const Matrix& previous, const Matrix& next);

}  // namespace lfda
