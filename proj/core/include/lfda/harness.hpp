#pragma once

#include "lfda/lfda.hpp"
#include "lfda/mildata.hpp"

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace lfda::harness {

enum class Method { kLda, kLfda, kJlfda, kRand };

std::string to_string(Method m);
/// Accepts lda, lfda, jlfda and rand (any case).
Method parse_method(const std::string& s);

/// Values to sweep; an empty list keeps the base value.
struct ParamGrid {
  std::vector<int> components;
  std::vector<int> neighbors;
  std::vector<int> max_iterations;
  std::vector<double> beta;

  bool empty() const;
};

struct ExperimentSpec {
  std::string name = "experiment";
  std::string dataset;            ///< path, or "synth" for planted data
  std::string format = "bag-csv";  ///< bag-csv | musk | synth
  PlantedOptions synth;
  PreprocessOptions preprocess;
  HyperParams params;
  ParamGrid grid;
  int folds = 10;
  int repeats = 10;
  std::uint64_t seed = 0;
  std::vector<Method> methods{Method::kLda, Method::kLfda, Method::kJlfda, Method::kRand};
  int jobs = 1;
  double max_failure_rate = 0.2;

  /// Throws InputError unless folds >= 2, repeats >= 1, jobs >= 1 and the
  /// base and grid hyperparameters are valid.
  void validate() const;

  /// Cartesian product of the grid over the base parameters, in a fixed order.
  std::vector<HyperParams> expand_grid() const;
};

/// JSON layout:
///   {"name", "dataset", "format", "synth": {...}, "preprocess": {"standardize", "pca_dim"},
///    "params": {"K", "N", "T", "beta", "epsilon", "bag_rule", "weight_rule",
///               "weight_init", "em_max_iter", "em_ll_tol"},
///    "grid": {"K": [...], "N": [...], "T": [...], "beta": [...]},
///    "folds", "repeats", "seed", "methods": [...], "jobs", "max_failure_rate"}
/// Every key is optional. Relative dataset paths resolve against `base_dir`.
ExperimentSpec spec_from_json(const std::string& text, const std::filesystem::path& base_dir = {});
ExperimentSpec load_spec(const std::filesystem::path& path);
std::string spec_to_json(const ExperimentSpec& spec);

/// Loads the dataset the spec points at (or generates the planted one).
BagDataset load_dataset(const ExperimentSpec& spec);

struct FoldResult {
  int repeat = 0;
  int fold = 0;
  Method method = Method::kLda;
  std::size_t grid_index = 0;
  double accuracy = 0.0;  ///< percent of test bags labeled correctly
  double seconds = 0.0;
  int iterations = 0;
  bool converged = false;
  std::optional<std::string> error;
};

struct MethodSummary {
  Method method = Method::kLda;
  std::size_t grid_index = 0;
  HyperParams params;
  double mean = 0.0;    ///< over successful folds
  double stddev = 0.0;  ///< sample standard deviation over successful folds
  std::vector<double> raw;
  std::vector<double> seconds;
  std::size_t failed_folds = 0;
  bool failed = false;  ///< failure rate above the spec's limit
};

struct ResultTable {
  ExperimentSpec spec;
  std::string dataset_summary;
  std::vector<MethodSummary> rows;
  std::vector<FoldResult> folds;  ///< ordered by (repeat, fold, grid, method)

  bool ok() const;
};

/// How well the relabeled subset matches planted signal instances, per class.
struct Recovery {
  std::vector<double> recall;     ///< planted class-c instances that ended up in X+ as class c
  std::vector<double> precision;  ///< X+ class-c members that are planted class-c instances
};

/// `truth` is parallel to flatten(ds).points, as produced by synth_planted.
Recovery planted_recovery(const LatentState& latent, std::span<const ClassId> truth, int num_classes);

/// Bag-level accuracy in percent.
double bag_accuracy(const TrainedModel& model, const BagDataset& test);

/// Plain LDA classifier on bag-propagated labels.
TrainedModel lda_baseline_train(const BagDataset& ds, double beta, const PreprocessOptions& preprocess = {});

/// Trains one method on the training bags and scores the test bags.
FoldResult run_fold(const BagDataset& train, const BagDataset& test, Method method, const HyperParams& hp,
                    const PreprocessOptions& preprocess);

/// The preprocessing run_cv would fit for one fold; depends on training bags only.
Preprocessor fold_preprocessor(const BagDataset& ds, const FoldPlan& plan, int fold,
                               const PreprocessOptions& preprocess);

using FoldCallback = std::function<void(const FoldResult&)>;

/// repeats x folds cross-validation. Repeat r shuffles folds and seeds every
/// method with spec.seed + r. Fold failures are recorded, not thrown.
ResultTable run_cv(const ExperimentSpec& spec, const BagDataset& ds, const FoldCallback& on_fold = {});
ResultTable run_cv(const ExperimentSpec& spec, const FoldCallback& on_fold = {});

/// Groups fold results into per-(grid, method) summaries.
std::vector<MethodSummary> summarize(const ExperimentSpec& spec, const std::vector<FoldResult>& folds);

enum class ReportFormat { kText, kCsv, kJson };
ReportFormat parse_report_format(const std::string& s);

/// Deterministic rendering. The CSV holds one row per (grid, method) summary.
std::string emit_report(const ResultTable& table, ReportFormat format);

}  // namespace lfda::harness
