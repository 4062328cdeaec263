#include "lfda/harness.hpp"

#include "lfda/error.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

namespace lfda::harness {

namespace {

using nlohmann::json;

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

template <typename T>
std::vector<T> or_base(const std::vector<T>& values, T base) {
  return values.empty() ? std::vector<T>{base} : values;
}

std::size_t method_rank(const ExperimentSpec& spec, Method m) {
  return static_cast<std::size_t>(std::find(spec.methods.begin(), spec.methods.end(), m) - spec.methods.begin());
}

}  // namespace

std::string to_string(Method m) {
  switch (m) {
    case Method::kLda: return "LDA";
    case Method::kLfda: return "LFDA";
    case Method::kJlfda: return "JLFDA";
    case Method::kRand: return "RAND";
  }
  return "?";
}

Method parse_method(const std::string& s) {
  const std::string l = lower(s);
  if (l == "lda") return Method::kLda;
  if (l == "lfda") return Method::kLfda;
  if (l == "jlfda") return Method::kJlfda;
  if (l == "rand") return Method::kRand;
  throw InputError("unknown method '" + s + "' (expected lda, lfda, jlfda or rand)");
}

bool ParamGrid::empty() const {
  return components.empty() && neighbors.empty() && max_iterations.empty() && beta.empty();
}

void ExperimentSpec::validate() const {
  if (folds < 2) throw InputError("experiment: need at least 2 folds");
  if (repeats < 1) throw InputError("experiment: need at least 1 repeat");
  if (jobs < 1) throw InputError("experiment: jobs must be at least 1");
  if (!(max_failure_rate >= 0.0 && max_failure_rate <= 1.0)) {
    throw InputError("experiment: failure-rate limit must lie in [0, 1]");
  }
  if (format != "bag-csv" && format != "musk" && format != "synth") {
    throw InputError("experiment: unknown dataset format '" + format + "'");
  }
  if (format != "synth" && dataset.empty()) throw InputError("experiment: no dataset given");
  for (const HyperParams& hp : expand_grid()) hp.validate();
}

std::vector<HyperParams> ExperimentSpec::expand_grid() const {
  std::vector<HyperParams> out;
  for (int k : or_base(grid.components, params.components)) {
    for (int n : or_base(grid.neighbors, params.neighbors)) {
      for (int t : or_base(grid.max_iterations, params.max_iterations)) {
        for (double b : or_base(grid.beta, params.beta)) {
          HyperParams hp = params;
          hp.components = k;
          hp.neighbors = n;
          hp.max_iterations = t;
          hp.beta = b;
          out.push_back(hp);
        }
      }
    }
  }
  return out;
}

ExperimentSpec spec_from_json(const std::string& text, const std::filesystem::path& base_dir) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw FormatError(std::string("experiment spec: not valid JSON: ") + e.what());
  }
  ExperimentSpec spec;
  try {
    spec.name = doc.value("name", spec.name);
    spec.format = doc.value("format", spec.format);
    if (doc.contains("dataset")) {
      spec.dataset = doc["dataset"].get<std::string>();
      if (spec.dataset == "synth") spec.format = "synth";
      const std::filesystem::path p(spec.dataset);
      if (spec.format != "synth" && p.is_relative() && !base_dir.empty()) spec.dataset = (base_dir / p).string();
    }
    if (doc.contains("synth")) {
      const json& s = doc["synth"];
      spec.synth.seed = s.value("seed", spec.synth.seed);
      spec.synth.num_classes = s.value("classes", spec.synth.num_classes);
      spec.synth.bags_per_class = s.value("bags_per_class", spec.synth.bags_per_class);
      spec.synth.instances_per_bag = s.value("instances_per_bag", spec.synth.instances_per_bag);
      spec.synth.dim = s.value("dim", spec.synth.dim);
      spec.synth.separation = s.value("separation", spec.synth.separation);
      spec.synth.signal_fraction = s.value("signal_fraction", spec.synth.signal_fraction);
      spec.synth.background_scale = s.value("background_scale", spec.synth.background_scale);
    }
    if (doc.contains("preprocess")) {
      const json& p = doc["preprocess"];
      spec.preprocess.standardize = p.value("standardize", spec.preprocess.standardize);
      if (p.contains("pca_dim") && !p["pca_dim"].is_null()) spec.preprocess.pca_dim = p["pca_dim"].get<int>();
    }
    if (doc.contains("params")) {
      const json& p = doc["params"];
      HyperParams& hp = spec.params;
      hp.components = p.value("K", hp.components);
      hp.neighbors = p.value("N", hp.neighbors);
      hp.max_iterations = p.value("T", hp.max_iterations);
      hp.beta = p.value("beta", hp.beta);
      hp.epsilon = p.value("epsilon", hp.epsilon);
      if (p.contains("bag_rule")) hp.bag_rule = parse_bag_rule(p["bag_rule"].get<std::string>());
      if (p.contains("weight_rule")) hp.weight_rule = parse_weight_rule(p["weight_rule"].get<std::string>());
      if (p.contains("weight_init")) hp.weight_init = parse_weight_init(p["weight_init"].get<std::string>());
      hp.em_max_iter = p.value("em_max_iter", hp.em_max_iter);
      hp.em_ll_tol = p.value("em_ll_tol", hp.em_ll_tol);
    }
    if (doc.contains("grid")) {
      const json& g = doc["grid"];
      spec.grid.components = g.value("K", std::vector<int>{});
      spec.grid.neighbors = g.value("N", std::vector<int>{});
      spec.grid.max_iterations = g.value("T", std::vector<int>{});
      spec.grid.beta = g.value("beta", std::vector<double>{});
    }
    spec.folds = doc.value("folds", spec.folds);
    spec.repeats = doc.value("repeats", spec.repeats);
    spec.seed = doc.value("seed", spec.seed);
    if (doc.contains("methods")) {
      spec.methods.clear();
      for (const json& m : doc["methods"]) spec.methods.push_back(parse_method(m.get<std::string>()));
    }
    spec.jobs = doc.value("jobs", spec.jobs);
    spec.max_failure_rate = doc.value("max_failure_rate", spec.max_failure_rate);
  } catch (const json::exception& e) {
    throw FormatError(std::string("experiment spec: ") + e.what());
  }
  return spec;
}

ExperimentSpec load_spec(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open experiment spec '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return spec_from_json(buf.str(), path.parent_path());
}

std::string spec_to_json(const ExperimentSpec& spec) {
  json methods = json::array();
  for (Method m : spec.methods) methods.push_back(lower(to_string(m)));
  const HyperParams& hp = spec.params;
  json doc = {
      {"name", spec.name},
      {"dataset", spec.dataset},
      {"format", spec.format},
      {"preprocess",
       {{"standardize", spec.preprocess.standardize},
        {"pca_dim", spec.preprocess.pca_dim ? json(*spec.preprocess.pca_dim) : json(nullptr)}}},
      {"params",
       {{"K", hp.components},
        {"N", hp.neighbors},
        {"T", hp.max_iterations},
        {"beta", hp.beta},
        {"epsilon", hp.epsilon},
        {"bag_rule", to_string(hp.bag_rule)},
        {"weight_rule", to_string(hp.weight_rule)},
        {"weight_init", to_string(hp.weight_init)},
        {"em_max_iter", hp.em_max_iter},
        {"em_ll_tol", hp.em_ll_tol}}},
      {"grid",
       {{"K", spec.grid.components},
        {"N", spec.grid.neighbors},
        {"T", spec.grid.max_iterations},
        {"beta", spec.grid.beta}}},
      {"folds", spec.folds},
      {"repeats", spec.repeats},
      {"seed", spec.seed},
      {"methods", methods},
      {"jobs", spec.jobs},
      {"max_failure_rate", spec.max_failure_rate},
  };
  if (spec.format == "synth") {
    doc["synth"] = {{"seed", spec.synth.seed},
                    {"classes", spec.synth.num_classes},
                    {"bags_per_class", spec.synth.bags_per_class},
                    {"instances_per_bag", spec.synth.instances_per_bag},
                    {"dim", spec.synth.dim},
                    {"separation", spec.synth.separation},
                    {"signal_fraction", spec.synth.signal_fraction},
                    {"background_scale", spec.synth.background_scale}};
  }
  return doc.dump(2);
}

BagDataset load_dataset(const ExperimentSpec& spec) {
  if (spec.format == "synth") return synth_planted(spec.synth).dataset;
  if (spec.format == "musk") return load_musk(spec.dataset);
  return load_bag_csv(spec.dataset);
}

bool ResultTable::ok() const {
  return std::none_of(rows.begin(), rows.end(), [](const MethodSummary& r) { return r.failed; });
}

Recovery planted_recovery(const LatentState& latent, std::span<const ClassId> truth, int num_classes) {
  const auto C = static_cast<std::size_t>(num_classes);
  std::vector<double> planted(C, 0.0), hits(C, 0.0), picked(C, 0.0);
  for (ClassId t : truth) {
    if (t >= 0 && t < num_classes) planted[static_cast<std::size_t>(t)] += 1.0;
  }
  for (std::size_t k = 0; k < latent.members.size(); ++k) {
    const auto i = static_cast<std::size_t>(latent.members[k]);
    if (i >= truth.size()) throw DimensionError("recovery: member index beyond the truth vector");
    const auto c = static_cast<std::size_t>(latent.labels[k]);
    picked[c] += 1.0;
    if (truth[i] == latent.labels[k]) hits[c] += 1.0;
  }
  Recovery out;
  for (std::size_t c = 0; c < C; ++c) {
    out.recall.push_back(planted[c] > 0.0 ? hits[c] / planted[c] : 0.0);
    out.precision.push_back(picked[c] > 0.0 ? hits[c] / picked[c] : 0.0);
  }
  return out;
}

double bag_accuracy(const TrainedModel& model, const BagDataset& test) {
  if (test.bags.empty()) throw EmptyInputError("accuracy: no test bags");
  std::size_t correct = 0;
  for (const Bag& bag : test.bags) {
    if (predict_bag(model, bag).label == bag.label) ++correct;
  }
  return 100.0 * static_cast<double>(correct) / static_cast<double>(test.bags.size());
}

TrainedModel lda_baseline_train(const BagDataset& ds, double beta, const PreprocessOptions& preprocess) {
  HyperParams hp;
  hp.beta = beta;
  return train_lda_baseline(ds, hp, preprocess);
}

FoldResult run_fold(const BagDataset& train_set, const BagDataset& test, Method method, const HyperParams& hp,
                    const PreprocessOptions& preprocess) {
  FoldResult out;
  out.method = method;
  const auto start = std::chrono::steady_clock::now();
  try {
    TrainedModel model;
    HyperParams p = hp;
    switch (method) {
      case Method::kLda: model = train_lda_baseline(train_set, p, preprocess); break;
      case Method::kRand: model = train_random_baseline(train_set, p, preprocess); break;
      case Method::kLfda:
        p.variant = Variant::kLfda;
        model = train(train_set, p, preprocess);
        break;
      case Method::kJlfda:
        p.variant = Variant::kJlfda;
        model = train(train_set, p, preprocess);
        break;
    }
    out.iterations = static_cast<int>(model.trace.size());
    out.converged = model.converged;
    out.accuracy = bag_accuracy(model, test);
  } catch (const Error& e) {
    out.error = e.what();
  }
  out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

Preprocessor fold_preprocessor(const BagDataset& ds, const FoldPlan& plan, int fold,
                               const PreprocessOptions& preprocess) {
  return Preprocessor::fit(flatten(ds.subset(plan.train_bags(fold))).points, preprocess);
}

std::vector<MethodSummary> summarize(const ExperimentSpec& spec, const std::vector<FoldResult>& folds) {
  const std::vector<HyperParams> grid = spec.expand_grid();
  std::vector<MethodSummary> rows;
  for (std::size_t g = 0; g < grid.size(); ++g) {
    for (Method m : spec.methods) {
      MethodSummary s;
      s.method = m;
      s.grid_index = g;
      s.params = grid[g];
      std::size_t total = 0;
      for (const FoldResult& f : folds) {
        if (f.method != m || f.grid_index != g) continue;
        ++total;
        if (f.error) {
          ++s.failed_folds;
          continue;
        }
        s.raw.push_back(f.accuracy);
        s.seconds.push_back(f.seconds);
      }
      if (!s.raw.empty()) {
        double sum = 0.0;
        for (double v : s.raw) sum += v;
        s.mean = sum / static_cast<double>(s.raw.size());
        if (s.raw.size() > 1) {
          double ss = 0.0;
          for (double v : s.raw) ss += (v - s.mean) * (v - s.mean);
          s.stddev = std::sqrt(ss / static_cast<double>(s.raw.size() - 1));
        }
      }
      s.failed = total > 0 && (s.raw.empty() || static_cast<double>(s.failed_folds) >
                                                    spec.max_failure_rate * static_cast<double>(total));
      rows.push_back(std::move(s));
    }
  }
  return rows;
}

ResultTable run_cv(const ExperimentSpec& spec, const FoldCallback& on_fold) {
  spec.validate();
  return run_cv(spec, load_dataset(spec), on_fold);
}

ResultTable run_cv(const ExperimentSpec& spec, const BagDataset& ds, const FoldCallback& on_fold) {
  spec.validate();
  ds.validate();
  const std::vector<HyperParams> grid = spec.expand_grid();

  std::vector<FoldPlan> plans;
  for (int r = 0; r < spec.repeats; ++r) plans.push_back(make_folds(ds, spec.folds, spec.seed + static_cast<std::uint64_t>(r)));

  struct Task {
    int repeat;
    int fold;
  };
  std::vector<Task> tasks;
  for (int r = 0; r < spec.repeats; ++r) {
    for (int f = 0; f < spec.folds; ++f) tasks.push_back({r, f});
  }

  std::vector<FoldResult> results;
  std::mutex mu;
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t t = next++; t < tasks.size(); t = next++) {
      const Task task = tasks[t];
      const FoldPlan& plan = plans[static_cast<std::size_t>(task.repeat)];
      const BagDataset train_set = ds.subset(plan.train_bags(task.fold));
      const BagDataset test = ds.subset(plan.test_bags(task.fold));
      for (std::size_t g = 0; g < grid.size(); ++g) {
        HyperParams hp = grid[g];
        hp.seed = spec.seed + static_cast<std::uint64_t>(task.repeat);
        for (Method m : spec.methods) {
          FoldResult res = run_fold(train_set, test, m, hp, spec.preprocess);
          res.repeat = task.repeat;
          res.fold = task.fold;
          res.grid_index = g;
          std::lock_guard<std::mutex> lock(mu);
          if (on_fold) on_fold(res);
          results.push_back(std::move(res));
        }
      }
    }
  };
  const int n_threads = std::min<int>(spec.jobs, static_cast<int>(tasks.size()));
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int i = 0; i < n_threads; ++i) pool.emplace_back(worker);
    for (std::thread& th : pool) th.join();
  }

  std::sort(results.begin(), results.end(), [&](const FoldResult& a, const FoldResult& b) {
    return std::make_tuple(a.repeat, a.fold, a.grid_index, method_rank(spec, a.method)) <
           std::make_tuple(b.repeat, b.fold, b.grid_index, method_rank(spec, b.method));
  });

  ResultTable table;
  table.spec = spec;
  std::ostringstream summary;
  summary << ds.bags.size() << " bags, " << ds.num_instances() << " instances, d = " << ds.dim << ", "
          << ds.num_classes() << " classes";
  table.dataset_summary = summary.str();
  table.folds = std::move(results);
  table.rows = summarize(spec, table.folds);
  return table;
}

}  // namespace lfda::harness
