#include "lfda/lfda.hpp"

#include "lfda/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <numeric>
#include <random>
#include <string>

namespace lfda {

namespace {

std::size_t idx(Eigen::Index i) { return static_cast<std::size_t>(i); }

Matrix gather_rows(const Matrix& m, const std::vector<Eigen::Index>& rows) {
  Matrix out(static_cast<Eigen::Index>(rows.size()), m.cols());
  for (std::size_t r = 0; r < rows.size(); ++r) out.row(static_cast<Eigen::Index>(r)) = m.row(rows[r]);
  return out;
}

std::vector<std::vector<Eigen::Index>> indices_by_class(std::span<const ClassId> labels, int num_classes) {
  std::vector<std::vector<Eigen::Index>> out(static_cast<std::size_t>(num_classes));
  for (std::size_t i = 0; i < labels.size(); ++i) {
    out[static_cast<std::size_t>(labels[i])].push_back(static_cast<Eigen::Index>(i));
  }
  return out;
}

// Index of the nearest finite row of `centers`, or -1 when every row is NaN.
int nearest_center(const Matrix& centers, const Eigen::Ref<const Vector>& y) {
  int best = -1;
  double best_d = std::numeric_limits<double>::infinity();
  for (Eigen::Index j = 0; j < centers.rows(); ++j) {
    if (!centers.row(j).allFinite()) continue;
    const double dd = (centers.row(j).transpose() - y).squaredNorm();
    if (dd < best_d) {
      best_d = dd;
      best = static_cast<int>(j);
    }
  }
  return best;
}

// Fraction of each point's N nearest reference points carrying each label.
// When `spread` is given it receives each point's mean distance to its
// neighbours of each label (infinity for labels absent from the neighbourhood).
Matrix neighbour_label_fractions(const Matrix& points, const Matrix& reference,
                                 std::span<const ClassId> reference_labels, int num_classes,
                                 Eigen::Index neighbors, Matrix* spread = nullptr) {
  const linalg::IndexMatrix nn = linalg::knn_indices(points, reference, neighbors);
  Matrix out = Matrix::Zero(points.rows(), num_classes);
  if (spread) spread->setZero(points.rows(), num_classes);
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    for (Eigen::Index k = 0; k < nn.cols(); ++k) {
      const ClassId c = reference_labels[idx(nn(i, k))];
      out(i, c) += 1.0;
      if (spread) (*spread)(i, c) += (points.row(i) - reference.row(nn(i, k))).norm();
    }
  }
  if (spread) {
    for (Eigen::Index i = 0; i < points.rows(); ++i) {
      for (int c = 0; c < num_classes; ++c) {
        (*spread)(i, c) = out(i, c) > 0.0 ? (*spread)(i, c) / out(i, c) : std::numeric_limits<double>::infinity();
      }
    }
  }
  return out / static_cast<double>(neighbors);
}

struct Prepared {
  Preprocessor pre;
  Matrix points;
  std::vector<ClassId> labels;
  std::vector<std::vector<Eigen::Index>> by_class;
};

Prepared prepare(const BagDataset& ds, const HyperParams& hp, const PreprocessOptions& preprocess) {
  hp.validate();
  ds.validate();
  const int C = ds.num_classes();
  if (C < 2) throw LabelError("train: need at least two classes");
  InstanceView view = flatten(ds);
  Prepared out;
  out.pre = Preprocessor::fit(view.points, preprocess);
  out.points = out.pre.apply(view.points);
  out.labels = std::move(view.labels);
  out.by_class = indices_by_class(out.labels, C);
  for (int c = 0; c < C; ++c) {
    if (out.by_class[static_cast<std::size_t>(c)].empty()) {
      throw LabelError("train: class '" + ds.class_names[static_cast<std::size_t>(c)] + "' has no instances");
    }
  }
  return out;
}

TrainedModel reference_model(const BagDataset& ds, const HyperParams& hp, Prepared&& prep,
                             const std::vector<Eigen::Index>& members) {
  const int C = ds.num_classes();
  std::vector<ClassId> z;
  z.reserve(members.size());
  for (Eigen::Index i : members) z.push_back(prep.labels[idx(i)]);
  const Matrix xs = gather_rows(prep.points, members);

  TrainedModel model;
  model.params = hp;
  model.class_names = ds.class_names;
  model.projection = lda::fit_lda(xs, z, C, hp.beta);
  model.preprocessing = std::move(prep.pre);
  model.reference_points = lda::project(model.projection, xs);
  model.reference_labels = z;
  model.latent.members = members;
  model.latent.labels = std::move(z);
  model.converged = true;
  return model;
}

}  // namespace

std::string to_string(Variant v) { return v == Variant::kLfda ? "lfda" : "jlfda"; }
std::string to_string(BagRule r) { return r == BagRule::kMaxInstance ? "max" : "mean"; }
std::string to_string(WeightRule r) {
  switch (r) {
    case WeightRule::kVoteShare:
      return "vote-share";
    case WeightRule::kLocalShare:
      return "local-share";
    case WeightRule::kCellPurity:
      return "cell-purity";
  }
  return "?";
}
std::string to_string(WeightInit w) { return w == WeightInit::kUniform ? "uniform" : "bag-vote"; }

Variant parse_variant(const std::string& s) {
  if (s == "lfda" || s == "LFDA") return Variant::kLfda;
  if (s == "jlfda" || s == "JLFDA") return Variant::kJlfda;
  throw InputError("unknown variant '" + s + "' (expected lfda or jlfda)");
}

BagRule parse_bag_rule(const std::string& s) {
  if (s == "max") return BagRule::kMaxInstance;
  if (s == "mean") return BagRule::kMeanInstance;
  throw InputError("unknown bag rule '" + s + "' (expected max or mean)");
}

WeightRule parse_weight_rule(const std::string& s) {
  if (s == "vote-share") return WeightRule::kVoteShare;
  if (s == "local-share") return WeightRule::kLocalShare;
  if (s == "cell-purity") return WeightRule::kCellPurity;
  throw InputError("unknown weight rule '" + s + "' (expected vote-share, local-share or cell-purity)");
}

WeightInit parse_weight_init(const std::string& s) {
  if (s == "uniform") return WeightInit::kUniform;
  if (s == "bag-vote") return WeightInit::kBagVote;
  throw InputError("unknown weight init '" + s + "' (expected uniform or bag-vote)");
}

void HyperParams::validate() const {
  if (components < 1) throw InputError("K must be at least 1");
  if (neighbors < 1) throw InputError("N must be at least 1");
  if (max_iterations < 1) throw InputError("T must be at least 1");
  if (!(beta >= 0.0) || !std::isfinite(beta)) throw InputError("beta must be finite and non-negative");
  if (!(epsilon > 0.0)) throw InputError("epsilon must be positive");
  if (em_max_iter < 1) throw InputError("EM iteration cap must be at least 1");
  if (!(em_ll_tol > 0.0)) throw InputError("EM tolerance must be positive");
}

Preprocessor Preprocessor::fit(const Matrix& raw, const PreprocessOptions& options) {
  if (raw.rows() == 0) throw EmptyInputError("preprocess: no instances");
  Preprocessor p;
  p.input_dim = raw.cols();
  Matrix x = raw;
  if (options.standardize) {
    p.standardizer = Standardizer::fit(raw);
    x = p.standardizer->apply(raw);
  }
  if (options.pca_dim) {
    const int k = *options.pca_dim;
    if (k < 1 || k > raw.cols() || k > raw.rows() - 1) {
      throw DimensionError("preprocess: PCA dimension " + std::to_string(k) + " outside [1, min(n - 1, d)]");
    }
    p.pca = linalg::pca_fit(x, k);
  }
  return p;
}

Matrix Preprocessor::apply(const Matrix& raw) const {
  if (raw.cols() != input_dim) {
    throw DimensionError("preprocess: expected " + std::to_string(input_dim) + " features, got " +
                         std::to_string(raw.cols()));
  }
  Matrix x = standardizer ? standardizer->apply(raw) : raw;
  if (pca) x = linalg::pca_transform(*pca, x);
  return x;
}

Eigen::Index Preprocessor::output_dim() const { return pca ? pca->basis.cols() : input_dim; }

ClusterWeights compute_cluster_weights(const Matrix& points, std::span<const ClassId> point_labels,
                                       const Matrix& reference, std::span<const ClassId> reference_labels,
                                       const std::vector<Matrix>& centers, int neighbors, WeightRule rule) {
  const int C = static_cast<int>(centers.size());
  if (C < 1) throw LabelError("cluster weights: no classes");
  if (static_cast<std::size_t>(points.rows()) != point_labels.size() ||
      static_cast<std::size_t>(reference.rows()) != reference_labels.size()) {
    throw DimensionError("cluster weights: label count does not match point count");
  }
  if (reference.rows() == 0) throw MissingReferenceError("cluster weights: empty reference set");
  if (reference.cols() != points.cols()) throw DimensionError("cluster weights: reference width mismatch");
  if (neighbors < 1 || neighbors > reference.rows()) {
    throw InputError("cluster weights: N = " + std::to_string(neighbors) + " outside [1, " +
                     std::to_string(reference.rows()) + "]");
  }
  const Eigen::Index K = centers.front().rows();
  for (const Matrix& m : centers) {
    if (m.rows() != K || m.cols() != points.cols()) throw DimensionError("cluster weights: centre shape mismatch");
  }
  std::vector<bool> present(static_cast<std::size_t>(C), false);
  for (ClassId c : reference_labels) {
    if (c < 0 || c >= C) throw LabelError("cluster weights: reference label out of range");
    present[static_cast<std::size_t>(c)] = true;
  }
  for (int c = 0; c < C; ++c) {
    if (!present[static_cast<std::size_t>(c)]) {
      throw MissingReferenceError("cluster weights: class " + std::to_string(c) + " has no reference points");
    }
  }

  Vector prior = Vector::Zero(C);
  for (ClassId c : point_labels) {
    if (c < 0 || c >= C) throw LabelError("cluster weights: point label out of range");
    prior(c) += 1.0;
  }
  const double n = static_cast<double>(points.rows());
  if (n > 0) prior /= n;

  Matrix dist;
  const Matrix fractions = neighbour_label_fractions(points, reference, reference_labels, C, neighbors, &dist);
  Matrix votes = Matrix::Zero(C, K);
  Matrix cell = Matrix::Zero(C, K);
  Matrix spread = Matrix::Zero(C, K);
  for (Eigen::Index y = 0; y < points.rows(); ++y) {
    const Vector row = fractions.row(y).transpose();
    const double top = row.maxCoeff();
    std::vector<int> tied;
    for (int c = 0; c < C; ++c) {
      if (row(c) == top) tied.push_back(c);
    }
    const double share = 1.0 / static_cast<double>(tied.size());
    for (int c : tied) {
      const int j = nearest_center(centers[static_cast<std::size_t>(c)], points.row(y).transpose());
      if (j >= 0) {
        votes(c, j) += share;
        spread(c, j) += share * dist(y, c);
      }
    }
    if (rule == WeightRule::kCellPurity) {
      for (int c = 0; c < C; ++c) {
        const int j = nearest_center(centers[static_cast<std::size_t>(c)], points.row(y).transpose());
        if (j >= 0) cell(c, j) += 1.0;
      }
    }
  }

  ClusterWeights out;
  out.w = Matrix::Zero(C, K);
  out.spread = Matrix::Constant(C, K, std::numeric_limits<double>::infinity());
  out.no_votes.assign(static_cast<std::size_t>(C), false);
  for (int c = 0; c < C; ++c) {
    for (Eigen::Index j = 0; j < K; ++j) {
      if (votes(c, j) > 0.0) out.spread(c, j) = spread(c, j) / votes(c, j);
      if (rule == WeightRule::kVoteShare) {
        if (n > 0) out.w(c, j) = prior(c) * votes(c, j) / n;
      } else if (rule == WeightRule::kLocalShare) {
        const Vector mu = centers[static_cast<std::size_t>(c)].row(j).transpose();
        if (!mu.allFinite()) continue;
        double denom = 0.0;
        for (int o = 0; o < C; ++o) {
          const int k = o == c ? static_cast<int>(j) : nearest_center(centers[static_cast<std::size_t>(o)], mu);
          if (k >= 0) denom += votes(o, k);
        }
        if (denom > 0.0) out.w(c, j) = prior(c) * votes(c, j) / denom;
      } else if (cell(c, j) > 0.0) {
        out.w(c, j) = prior(c) * votes(c, j) / cell(c, j);
      }
    }
    out.no_votes[static_cast<std::size_t>(c)] = votes.row(c).sum() == 0.0;
  }
  return out;
}

Selection select_cluster(const Vector& mixing_weights, const Vector& w, Variant variant,
                         std::span<const bool> eligible, std::span<const double> spread) {
  const Eigen::Index K = mixing_weights.size();
  if (K < 1 || w.size() != K) throw DimensionError("select_cluster: need K mixing weights and K cluster weights");
  if (!eligible.empty() && static_cast<Eigen::Index>(eligible.size()) != K) {
    throw DimensionError("select_cluster: eligibility mask has the wrong length");
  }
  if (!spread.empty() && static_cast<Eigen::Index>(spread.size()) != K) {
    throw DimensionError("select_cluster: spread vector has the wrong length");
  }
  auto ok = [&](Eigen::Index j) { return eligible.empty() || eligible[idx(j)]; };

  Vector score = variant == Variant::kLfda ? Vector(w) : Vector(mixing_weights.cwiseProduct(w));
  bool any_positive = false;
  for (Eigen::Index j = 0; j < K; ++j) {
    if (ok(j) && score(j) > 0.0) any_positive = true;
  }
  Selection sel;
  if (!any_positive) {
    sel.fallback = true;
    score = mixing_weights;
  }
  auto closer = [&](Eigen::Index a, Eigen::Index b) {
    return !sel.fallback && !spread.empty() && spread[idx(a)] < spread[idx(b)];
  };
  auto same_spread = [&](Eigen::Index a, Eigen::Index b) {
    return sel.fallback || spread.empty() || spread[idx(a)] == spread[idx(b)];
  };
  Eigen::Index best = -1;
  for (Eigen::Index j = 0; j < K; ++j) {
    if (!ok(j)) continue;
    if (best < 0 || score(j) > score(best) || (score(j) == score(best) && closer(j, best)) ||
        (score(j) == score(best) && same_spread(j, best) && mixing_weights(j) > mixing_weights(best))) {
      best = j;
    }
  }
  if (best < 0) throw InputError("select_cluster: no eligible cluster");
  sel.cluster = static_cast<int>(best);
  return sel;
}

double aligned_distance(const Matrix& previous, const Matrix& next) {
  if (previous.rows() != next.rows() || previous.cols() != next.cols()) {
    return std::numeric_limits<double>::infinity();
  }
  double sq = 0.0;
  for (Eigen::Index k = 0; k < next.cols(); ++k) {
    const double sign = previous.col(k).dot(next.col(k)) < 0.0 ? -1.0 : 1.0;
    sq += (sign * next.col(k) - previous.col(k)).squaredNorm();
  }
  return std::sqrt(sq);
}

double evaluate_objective(const Matrix& relabeled_points, std::span<const ClassId> labels, int num_classes,
                          const lda::Projection& p, double beta) {
  return lda::objective(lda::scatter(relabeled_points, labels, num_classes), p, beta);
}

TrainedModel train(const BagDataset& ds, const HyperParams& hp, const PreprocessOptions& preprocess) {
  Prepared prep = prepare(ds, hp, preprocess);
  const int C = ds.num_classes();
  const int K = hp.components;
  for (int c = 0; c < C; ++c) {
    const auto n = prep.by_class[static_cast<std::size_t>(c)].size();
    if (n < static_cast<std::size_t>(K)) {
      throw InsufficientDataError("train: class '" + ds.class_names[static_cast<std::size_t>(c)] + "' has " +
                                  std::to_string(n) + " instance(s), fewer than K = " + std::to_string(K));
    }
  }
  const Matrix& x = prep.points;

  TrainedModel model;
  model.params = hp;
  model.class_names = ds.class_names;
  lda::Projection p = lda::fit_lda(x, prep.labels, C, hp.beta);

  gmm::EmOptions em;
  em.components = K;
  em.max_iter = hp.em_max_iter;
  em.ll_tol = hp.em_ll_tol;

  std::vector<gmm::ClassMixture> mixtures(static_cast<std::size_t>(C));
  std::vector<Matrix> resp(static_cast<std::size_t>(C));
  std::vector<gmm::HardPartition> parts(static_cast<std::size_t>(C));
  std::vector<Eigen::Index> members;
  std::vector<ClassId> z;
  std::vector<int> selected(static_cast<std::size_t>(C), 0);
  ClusterWeights weights;

  for (int t = 1; t <= hp.max_iterations; ++t) {
    const Matrix y = lda::project(p, x);

    std::vector<Matrix> centers(static_cast<std::size_t>(C));
    std::vector<std::vector<bool>> eligible(static_cast<std::size_t>(C));
    for (int c = 0; c < C; ++c) {
      const auto cs = static_cast<std::size_t>(c);
      const Matrix yc = gather_rows(y, prep.by_class[cs]);
      em.seed = hp.seed + static_cast<std::uint64_t>(t);
      mixtures[cs] = gmm::fit_em(yc, em);
      resp[cs] = gmm::responsibilities(mixtures[cs], yc);
      parts[cs] = gmm::hard_partition(mixtures[cs], yc);
      centers[cs] = mixtures[cs].means;
      eligible[cs].assign(static_cast<std::size_t>(K), true);
      for (int j = 0; j < K; ++j) {
        if (parts[cs].clusters[static_cast<std::size_t>(j)].empty()) {
          eligible[cs][static_cast<std::size_t>(j)] = false;
          centers[cs].row(j).setConstant(std::numeric_limits<double>::quiet_NaN());
        }
      }
    }

    // Votes are cast against this iteration's clusters: refitting renumbers
    // components, so weights from an earlier fit would point at the wrong ones.
    if (!members.empty()) {
      const Matrix ref = gather_rows(y, members);
      const int n_eff = static_cast<int>(std::min<Eigen::Index>(hp.neighbors, ref.rows()));
      weights = compute_cluster_weights(y, prep.labels, ref, z, centers, n_eff, hp.weight_rule);
    } else if (hp.weight_init == WeightInit::kBagVote) {
      const int n_eff = static_cast<int>(std::min<Eigen::Index>(hp.neighbors, y.rows()));
      weights = compute_cluster_weights(y, prep.labels, y, prep.labels, centers, n_eff, hp.weight_rule);
    } else {
      weights.w = Matrix::Constant(C, K, 1.0 / K);
      weights.spread.resize(0, 0);
      weights.no_votes.assign(static_cast<std::size_t>(C), false);
    }

    IterationRecord rec;
    rec.iteration = t;
    std::vector<std::pair<Eigen::Index, ClassId>> chosen;
    for (int c = 0; c < C; ++c) {
      const auto cs = static_cast<std::size_t>(c);
      const std::unique_ptr<bool[]> mask(new bool[static_cast<std::size_t>(K)]);
      std::copy(eligible[cs].begin(), eligible[cs].end(), mask.get());
      std::vector<double> spread;
      if (weights.spread.rows() == C) {
        for (int j = 0; j < K; ++j) spread.push_back(weights.spread(c, j));
      }
      const Selection sel = select_cluster(mixtures[cs].weights, weights.w.row(c).transpose(), hp.variant,
                                           std::span<const bool>(mask.get(), static_cast<std::size_t>(K)), spread);
      selected[cs] = sel.cluster;
      rec.selected.push_back(sel.cluster);
      rec.fallback.push_back(sel.fallback);
      for (Eigen::Index local : parts[cs].clusters[static_cast<std::size_t>(sel.cluster)]) {
        chosen.emplace_back(prep.by_class[cs][idx(local)], c);
      }
    }
    std::sort(chosen.begin(), chosen.end());
    members.clear();
    z.clear();
    for (const auto& [i, c] : chosen) {
      members.push_back(i);
      z.push_back(c);
    }

    const Matrix xs = gather_rows(x, members);
    lda::Projection next = lda::fit_lda(xs, z, C, hp.beta);
    rec.delta_p = aligned_distance(p.basis, next.basis);
    rec.objective = evaluate_objective(xs, z, C, next, hp.beta);
    rec.relabeled_size = static_cast<Eigen::Index>(members.size());
    rec.subspace_dim = next.output_dim();
    model.trace.push_back(rec);
    p = std::move(next);
    if (rec.delta_p < hp.epsilon) {
      model.converged = true;
      break;
    }
  }

  // Re-express the last mixtures in the final subspace from their soft assignments.
  const Matrix y = lda::project(p, x);
  model.mixtures.resize(static_cast<std::size_t>(C));
  for (int c = 0; c < C; ++c) {
    const auto cs = static_cast<std::size_t>(c);
    gmm::ClassMixture final_mix = gmm::mixture_from_responsibilities(gather_rows(y, prep.by_class[cs]), resp[cs]);
    final_mix.log_likelihood_trace = mixtures[cs].log_likelihood_trace;
    final_mix.reinit_iterations = mixtures[cs].reinit_iterations;
    final_mix.iterations = mixtures[cs].iterations;
    final_mix.converged = mixtures[cs].converged;
    model.mixtures[cs] = std::move(final_mix);
  }
  model.projection = std::move(p);
  model.preprocessing = std::move(prep.pre);
  model.selected = selected;
  model.weights = weights;
  model.reference_points = gather_rows(y, members);
  model.reference_labels = z;
  model.latent.iteration = static_cast<int>(model.trace.size());
  model.latent.selected = selected;
  model.latent.members = members;
  model.latent.labels = z;
  return model;
}

TrainedModel train_lda_baseline(const BagDataset& ds, const HyperParams& hp, const PreprocessOptions& preprocess) {
  Prepared prep = prepare(ds, hp, preprocess);
  std::vector<Eigen::Index> all(idx(prep.points.rows()));
  std::iota(all.begin(), all.end(), Eigen::Index{0});
  return reference_model(ds, hp, std::move(prep), all);
}

TrainedModel train_random_baseline(const BagDataset& ds, const HyperParams& hp,
                                   const PreprocessOptions& preprocess) {
  Prepared prep = prepare(ds, hp, preprocess);
  std::mt19937_64 rng(hp.seed);
  std::vector<Eigen::Index> picked;
  for (auto pool : prep.by_class) {
    const std::size_t take = (pool.size() + static_cast<std::size_t>(hp.components) - 1) /
                             static_cast<std::size_t>(hp.components);
    std::shuffle(pool.begin(), pool.end(), rng);
    picked.insert(picked.end(), pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(take));
  }
  std::sort(picked.begin(), picked.end());
  return reference_model(ds, hp, std::move(prep), picked);
}

BagPrediction predict_bag(const TrainedModel& model, const Bag& bag) {
  return predict_bag(model, bag, model.params.bag_rule);
}

BagPrediction predict_bag(const TrainedModel& model, const Bag& bag, BagRule rule) {
  if (bag.size() == 0) throw EmptyInputError("predict: bag '" + bag.id + "' has no instances");
  if (model.reference_points.rows() == 0) throw MissingReferenceError("predict: model has no reference set");
  const int C = model.num_classes();
  const Matrix y = lda::project(model.projection, model.preprocessing.apply(bag.instances));
  const Eigen::Index n_eff = std::min<Eigen::Index>(model.params.neighbors, model.reference_points.rows());

  BagPrediction out;
  Matrix spread;
  out.instance_scores =
      neighbour_label_fractions(y, model.reference_points, model.reference_labels, C, n_eff, &spread);
  if (rule == BagRule::kMaxInstance) {
    out.bag_scores = out.instance_scores.colwise().maxCoeff().transpose();
  } else {
    out.bag_scores = out.instance_scores.colwise().mean().transpose();
  }
  // Tied classes are separated by how close their supporting neighbours are:
  // for the max rule, the tightest instance reaching the max; for the mean
  // rule, the mean over instances that vote for the class at all.
  Vector closeness = Vector::Constant(C, std::numeric_limits<double>::infinity());
  for (int c = 0; c < C; ++c) {
    double sum = 0.0;
    int count = 0;
    for (Eigen::Index i = 0; i < y.rows(); ++i) {
      if (out.instance_scores(i, c) <= 0.0) continue;
      if (rule == BagRule::kMaxInstance) {
        if (out.instance_scores(i, c) == out.bag_scores(c)) closeness(c) = std::min(closeness(c), spread(i, c));
      } else {
        sum += spread(i, c);
        ++count;
      }
    }
    if (rule == BagRule::kMeanInstance && count > 0) closeness(c) = sum / count;
  }
  int best = 0;
  for (int c = 1; c < C; ++c) {
    if (out.bag_scores(c) > out.bag_scores(best) ||
        (out.bag_scores(c) == out.bag_scores(best) && closeness(c) < closeness(best))) {
      best = c;
    }
  }
  out.label = static_cast<ClassId>(best);
  return out;
}

Ranking rank_instances(const TrainedModel& model, const Bag& bag, ClassId c, std::size_t top_m) {
  return rank_instances(model, bag, c, top_m, model.params.variant);
}

Ranking rank_instances(const TrainedModel& model, const Bag& bag, ClassId c, std::size_t top_m,
                       Variant variant) {
  if (c < 0 || c >= model.num_classes()) throw LabelError("rank: class " + std::to_string(c) + " out of range");
  if (model.mixtures.size() != static_cast<std::size_t>(model.num_classes()) ||
      model.selected.size() != model.mixtures.size()) {
    throw InputError("rank: model carries no per-class mixtures");
  }
  const gmm::ClassMixture& mix = model.mixtures[static_cast<std::size_t>(c)];
  const int j = model.selected[static_cast<std::size_t>(c)];
  const Matrix y = lda::project(model.projection, model.preprocessing.apply(bag.instances));

  std::vector<double> score(idx(y.rows()));
  for (Eigen::Index i = 0; i < y.rows(); ++i) {
    if (variant == Variant::kLfda) {
      score[idx(i)] = -(y.row(i) - mix.means.row(j)).norm();
    } else {
      score[idx(i)] = std::log(mix.weights(j)) + gmm::component_log_density(mix, j, y.row(i).transpose());
    }
  }
  std::vector<Eigen::Index> order(score.size());
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index a, Eigen::Index b) { return score[idx(a)] > score[idx(b)]; });

  Ranking out;
  out.truncated = top_m > order.size();
  order.resize(std::min(top_m, order.size()));
  out.order = order;
  for (Eigen::Index i : order) out.scores.push_back(score[idx(i)]);
  return out;
}

std::vector<Eigen::Index> rand_rank_baseline(const Bag& bag, std::size_t top_m, std::uint64_t seed) {
  std::vector<Eigen::Index> order(idx(bag.size()));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::mt19937_64 rng(seed);
  const std::size_t take = std::min(top_m, order.size());
  // Partial Fisher-Yates: only the first `take` slots are needed.
  for (std::size_t i = 0; i < take; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, order.size() - 1);
    std::swap(order[i], order[pick(rng)]);
  }
  order.resize(take);
  return order;
}

}  // namespace lfda
