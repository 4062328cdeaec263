#include "cli.hpp"

#include "lfda/error.hpp"
#include "lfda/harness.hpp"
#include "lfda/lfda.hpp"
#include "lfda/mildata.hpp"
#include "lfda/model_io.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <limits>
#include <optional>
#include <ostream>
#include <sstream>

namespace lfda::cli {

namespace {

using nlohmann::json;

struct DataArgs {
  std::string path;
  std::string format = "bag-csv";
  PlantedOptions synth;
  bool synth_seed_set = false;
};

struct LoadedData {
  BagDataset dataset;
  std::optional<PlantedData> planted;
};

struct ModelArgs {
  HyperParams hp;
  std::string variant = "jlfda";
  std::string bag_rule = "max";
  std::string weight_rule = "cell-purity";
  std::string weight_init = "uniform";
  bool no_standardize = false;
  int pca = 0;
};

std::uint64_t resolve_seed(const std::optional<std::uint64_t>& flag) {
  if (flag) return *flag;
  if (const char* env = std::getenv("LFDA_SEED"); env != nullptr && *env != '\0') {
    char* end = nullptr;
    const unsigned long long v = std::strtoull(env, &end, 10);
    if (end == nullptr || *end != '\0') throw InputError(std::string("LFDA_SEED is not an integer: '") + env + "'");
    return static_cast<std::uint64_t>(v);
  }
  return 0;
}

void add_data_options(CLI::App* cmd, DataArgs& d, bool required) {
  auto* opt = cmd->add_option("--data", d.path, "bag-CSV file, or 'synth' for planted synthetic data");
  if (required) opt->required();
  cmd->add_option("--data-format", d.format, "bag-csv or musk")->check(CLI::IsMember({"bag-csv", "musk"}));
  cmd->add_option("--synth-sep", d.synth.separation, "planted data: distance between class signal means");
  cmd->add_option("--synth-classes", d.synth.num_classes, "planted data: number of classes");
  cmd->add_option("--synth-bags", d.synth.bags_per_class, "planted data: bags per class");
  cmd->add_option("--synth-instances", d.synth.instances_per_bag, "planted data: instances per bag");
  cmd->add_option("--synth-dim", d.synth.dim, "planted data: feature dimension");
  cmd->add_option("--synth-signal", d.synth.signal_fraction, "planted data: signal share per bag");
  cmd->add_option("--synth-background", d.synth.background_scale,
                  "planted data: standard deviation of the shared background");
  cmd->add_option("--synth-seed", d.synth.seed, "planted data: generator seed (default: --seed)")
      ->each([&d](const std::string&) { d.synth_seed_set = true; });
}

void add_model_options(CLI::App* cmd, ModelArgs& m) {
  cmd->add_option("--variant", m.variant, "lfda or jlfda")->check(CLI::IsMember({"lfda", "jlfda"}));
  cmd->add_option("--K", m.hp.components, "mixture components per class");
  cmd->add_option("--N", m.hp.neighbors, "kNN neighbours");
  cmd->add_option("--T", m.hp.max_iterations, "maximum outer iterations");
  cmd->add_option("--beta", m.hp.beta, "ridge on the within-class scatter");
  cmd->add_option("--epsilon", m.hp.epsilon, "projection change that counts as converged");
  cmd->add_option("--bag-rule", m.bag_rule, "max or mean")->check(CLI::IsMember({"max", "mean"}));
  cmd->add_option("--weight-rule", m.weight_rule, "vote-share, local-share or cell-purity")
      ->check(CLI::IsMember({"vote-share", "local-share", "cell-purity"}));
  cmd->add_option("--weight-init", m.weight_init, "uniform or bag-vote")
      ->check(CLI::IsMember({"uniform", "bag-vote"}));
  cmd->add_flag("--no-standardize", m.no_standardize, "skip per-feature standardization");
  cmd->add_option("--pca", m.pca, "reduce features to this many principal components first");
}

HyperParams finish_params(const ModelArgs& m, std::uint64_t seed) {
  HyperParams hp = m.hp;
  hp.variant = parse_variant(m.variant);
  hp.bag_rule = parse_bag_rule(m.bag_rule);
  hp.weight_rule = parse_weight_rule(m.weight_rule);
  hp.weight_init = parse_weight_init(m.weight_init);
  hp.seed = seed;
  hp.validate();
  return hp;
}

PreprocessOptions finish_preprocess(const ModelArgs& m) {
  PreprocessOptions p;
  p.standardize = !m.no_standardize;
  if (m.pca > 0) p.pca_dim = m.pca;
  return p;
}

LoadedData load_data(DataArgs d, std::uint64_t seed) {
  LoadedData out;
  if (d.path == "synth") {
    if (!d.synth_seed_set) d.synth.seed = seed;
    out.planted = synth_planted(d.synth);
    out.dataset = out.planted->dataset;
  } else if (d.format == "musk") {
    out.dataset = load_musk(d.path);
  } else {
    out.dataset = load_bag_csv(d.path);
  }
  return out;
}

// Writes to --out when given, else to `out`.
void emit(const std::string& text, const std::string& path, std::ostream& out) {
  if (path.empty() || path == "-") {
    out << text;
    return;
  }
  std::ofstream f(path);
  if (!f) throw InputError("cannot write '" + path + "'");
  f << text;
  if (!f) throw InputError("failed writing '" + path + "'");
}

std::string describe(const BagDataset& ds) {
  std::ostringstream s;
  s << ds.bags.size() << " bags, " << ds.num_instances() << " instances, d = " << ds.dim << ", classes:";
  const auto counts = ds.bags_per_class();
  for (std::size_t c = 0; c < ds.class_names.size(); ++c) s << ' ' << ds.class_names[c] << " (" << counts[c] << ')';
  return s.str();
}

// Model class index for each dataset class, or -1 when the model does not know it.
std::vector<int> class_map(const BagDataset& ds, const TrainedModel& model) {
  std::vector<int> out;
  for (const std::string& name : ds.class_names) {
    const auto it = std::find(model.class_names.begin(), model.class_names.end(), name);
    out.push_back(it == model.class_names.end() ? -1 : static_cast<int>(it - model.class_names.begin()));
  }
  return out;
}

int cmd_train(const DataArgs& data, const ModelArgs& margs, const std::optional<std::uint64_t>& seed_flag,
              const std::string& out_path, bool quiet, std::ostream& out) {
  const std::uint64_t seed = resolve_seed(seed_flag);
  const HyperParams hp = finish_params(margs, seed);
  const LoadedData loaded = load_data(data, seed);
  const TrainedModel model = train(loaded.dataset, hp, finish_preprocess(margs));
  if (!out_path.empty()) save_model(model, out_path);
  if (quiet) return kOk;

  out << "trained " << harness::to_string(hp.variant == Variant::kLfda ? harness::Method::kLfda
                                                                       : harness::Method::kJlfda)
      << " on " << describe(loaded.dataset) << '\n';
  out << "iter    delta_P        objective      |X+|  selected\n";
  for (const IterationRecord& r : model.trace) {
    out << std::setw(4) << r.iteration << "  " << std::scientific << std::setprecision(6) << std::setw(13) << r.delta_p
        << "  " << std::setw(13) << r.objective << std::defaultfloat << "  " << std::setw(6) << r.relabeled_size << " ";
    for (std::size_t c = 0; c < r.selected.size(); ++c) {
      out << ' ' << r.selected[c] << (r.fallback[c] ? "*" : "");
    }
    out << '\n';
  }
  out << (model.converged ? "converged" : "stopped at the iteration cap") << " after " << model.trace.size()
      << " iteration(s); subspace dimension " << model.subspace_dim() << '\n';
  out << "training bag accuracy " << std::fixed << std::setprecision(2)
      << harness::bag_accuracy(model, loaded.dataset) << "%\n" << std::defaultfloat;
  if (loaded.planted) {
    const harness::Recovery rec =
        harness::planted_recovery(model.latent, loaded.planted->truth, loaded.dataset.num_classes());
    for (std::size_t c = 0; c < rec.recall.size(); ++c) {
      out << "planted class " << loaded.dataset.class_names[c] << ": recall " << std::fixed << std::setprecision(3)
          << rec.recall[c] << ", precision " << rec.precision[c] << '\n' << std::defaultfloat;
    }
  }
  if (!out_path.empty()) out << "model written to " << out_path << '\n';
  return kOk;
}

int cmd_predict(const DataArgs& data, const std::string& model_path, const std::string& format,
                const std::string& bag_rule, const std::optional<std::uint64_t>& seed_flag, const std::string& out_path,
                std::ostream& out) {
  const TrainedModel model = load_model(model_path);
  const LoadedData loaded = load_data(data, resolve_seed(seed_flag));
  const BagRule rule = bag_rule.empty() ? model.params.bag_rule : parse_bag_rule(bag_rule);
  const std::vector<int> cmap = class_map(loaded.dataset, model);

  json records = json::array();
  std::size_t known = 0, correct = 0;
  std::ostringstream csv;
  csv << std::setprecision(std::numeric_limits<double>::max_digits10);
  csv << "bag,predicted,truth";
  for (const std::string& n : model.class_names) csv << ",score_" << n;
  csv << '\n';
  std::ostringstream text;
  for (const Bag& bag : loaded.dataset.bags) {
    const BagPrediction p = predict_bag(model, bag, rule);
    const int truth = cmap[static_cast<std::size_t>(bag.label)];
    if (truth >= 0) {
      ++known;
      if (truth == p.label) ++correct;
    }
    const std::string& predicted = model.class_names[static_cast<std::size_t>(p.label)];
    const std::string& truth_name = loaded.dataset.class_names[static_cast<std::size_t>(bag.label)];
    json scores = json::object();
    for (std::size_t c = 0; c < model.class_names.size(); ++c) {
      scores[model.class_names[c]] = p.bag_scores(static_cast<Eigen::Index>(c));
    }
    records.push_back({{"bag", bag.id}, {"predicted", predicted}, {"truth", truth_name}, {"scores", scores},
                       {"instances", bag.size()}});
    csv << bag.id << ',' << predicted << ',' << truth_name;
    for (Eigen::Index c = 0; c < p.bag_scores.size(); ++c) csv << ',' << p.bag_scores(c);
    csv << '\n';
    text << bag.id << '\t' << predicted << '\t' << truth_name << '\n';
  }
  const double accuracy = known > 0 ? 100.0 * static_cast<double>(correct) / static_cast<double>(known) : 0.0;

  if (format == "json") {
    json doc = {{"model", model_path},
                {"bag_rule", to_string(rule)},
                {"predictions", records},
                {"accuracy", known > 0 ? json(accuracy) : json(nullptr)}};
    emit(doc.dump(2) + "\n", out_path, out);
  } else if (format == "csv") {
    emit(csv.str(), out_path, out);
  } else {
    std::ostringstream doc;
    doc << "bag\tpredicted\ttruth\n" << text.str();
    if (known > 0) doc << "accuracy " << std::fixed << std::setprecision(2) << accuracy << "% (" << correct << '/' << known << ")\n";
    emit(doc.str(), out_path, out);
  }
  return kOk;
}

struct BenchArgs {
  std::string spec_path;
  DataArgs data;
  ModelArgs model;
  std::string name;
  int folds = 10;
  int repeats = 10;
  int jobs = 1;
  std::string methods;
  std::vector<int> grid_k, grid_n, grid_t;
  std::vector<double> grid_beta;
  std::string format = "text";
  std::string out_path;
  bool progress = false;
};

int cmd_benchmark(CLI::App* cmd, const BenchArgs& b, const std::optional<std::uint64_t>& seed_flag, std::ostream& out,
                  std::ostream& err) {
  auto set = [cmd](const char* flag) { return cmd->count(flag) > 0; };
  harness::ExperimentSpec spec;
  if (!b.spec_path.empty()) spec = harness::load_spec(b.spec_path);
  if (set("--name")) spec.name = b.name;
  if (set("--data")) {
    spec.dataset = b.data.path;
    spec.format = b.data.path == "synth" ? "synth" : b.data.format;
  } else if (set("--data-format")) {
    spec.format = b.data.format;
  }
  if (spec.format == "synth") {
    if (set("--synth-sep")) spec.synth.separation = b.data.synth.separation;
    if (set("--synth-classes")) spec.synth.num_classes = b.data.synth.num_classes;
    if (set("--synth-bags")) spec.synth.bags_per_class = b.data.synth.bags_per_class;
    if (set("--synth-instances")) spec.synth.instances_per_bag = b.data.synth.instances_per_bag;
    if (set("--synth-dim")) spec.synth.dim = b.data.synth.dim;
    if (set("--synth-signal")) spec.synth.signal_fraction = b.data.synth.signal_fraction;
    if (set("--synth-background")) spec.synth.background_scale = b.data.synth.background_scale;
    if (set("--synth-seed")) spec.synth.seed = b.data.synth.seed;
  }
  if (seed_flag || b.spec_path.empty()) spec.seed = resolve_seed(seed_flag);
  if (set("--K")) spec.params.components = b.model.hp.components;
  if (set("--N")) spec.params.neighbors = b.model.hp.neighbors;
  if (set("--T")) spec.params.max_iterations = b.model.hp.max_iterations;
  if (set("--beta")) spec.params.beta = b.model.hp.beta;
  if (set("--epsilon")) spec.params.epsilon = b.model.hp.epsilon;
  if (set("--bag-rule")) spec.params.bag_rule = parse_bag_rule(b.model.bag_rule);
  if (set("--weight-rule")) spec.params.weight_rule = parse_weight_rule(b.model.weight_rule);
  if (set("--weight-init")) spec.params.weight_init = parse_weight_init(b.model.weight_init);
  if (set("--no-standardize")) spec.preprocess.standardize = false;
  if (set("--pca")) {
    spec.preprocess.pca_dim = b.model.pca > 0 ? std::optional<int>(b.model.pca) : std::nullopt;
  }
  if (set("--folds")) spec.folds = b.folds;
  if (set("--repeats")) spec.repeats = b.repeats;
  if (set("--jobs")) spec.jobs = b.jobs;
  if (set("--grid-K")) spec.grid.components = b.grid_k;
  if (set("--grid-N")) spec.grid.neighbors = b.grid_n;
  if (set("--grid-T")) spec.grid.max_iterations = b.grid_t;
  if (set("--grid-beta")) spec.grid.beta = b.grid_beta;
  if (set("--methods")) {
    spec.methods.clear();
    std::stringstream ss(b.methods);
    for (std::string m; std::getline(ss, m, ',');) {
      if (!m.empty()) spec.methods.push_back(harness::parse_method(m));
    }
  }
  spec.validate();
  const harness::ReportFormat format = harness::parse_report_format(b.format);

  harness::FoldCallback progress;
  if (b.progress) {
    progress = [&err](const harness::FoldResult& f) {
      err << "repeat " << f.repeat << " fold " << f.fold << ' ' << harness::to_string(f.method) << ": ";
      if (f.error) {
        err << "error: " << *f.error;
      } else {
        err << std::fixed << std::setprecision(1) << f.accuracy << "% in " << std::setprecision(2) << f.seconds << " s"
            << std::defaultfloat;
      }
      err << '\n';
    };
  }
  const harness::ResultTable table = harness::run_cv(spec, progress);
  emit(harness::emit_report(table, format), b.out_path, out);
  if (!table.ok()) {
    err << "error: fold failure rate above " << spec.max_failure_rate * 100.0 << "% for at least one method\n";
    return kNumericalError;
  }
  return kOk;
}

int cmd_rank(const DataArgs& data, const std::string& model_path, std::size_t top, const std::string& class_name,
             const std::string& variant, bool random, const std::optional<std::uint64_t>& seed_flag,
             const std::string& format, const std::string& out_path, std::ostream& out) {
  const TrainedModel model = load_model(model_path);
  const std::uint64_t seed = resolve_seed(seed_flag);
  const LoadedData loaded = load_data(data, seed);
  std::optional<ClassId> forced;
  if (!class_name.empty()) {
    const auto it = std::find(model.class_names.begin(), model.class_names.end(), class_name);
    if (it == model.class_names.end()) throw LabelError("unknown class '" + class_name + "'");
    forced = static_cast<ClassId>(it - model.class_names.begin());
  }
  const Variant v = variant.empty() ? model.params.variant : parse_variant(variant);

  json bags = json::array();
  std::ostringstream text;
  text << std::setprecision(std::numeric_limits<double>::max_digits10);
  text << "bag\trank\tinstance\tclass\tscore\n";
  for (std::size_t b = 0; b < loaded.dataset.bags.size(); ++b) {
    const Bag& bag = loaded.dataset.bags[b];
    const ClassId c = forced ? *forced : predict_bag(model, bag).label;
    Ranking r;
    if (random) {
      r.order = rand_rank_baseline(bag, top, seed + b);
      r.scores.assign(r.order.size(), 0.0);
      r.truncated = top > static_cast<std::size_t>(bag.size());
    } else {
      r = rank_instances(model, bag, c, top, v);
    }
    json items = json::array();
    for (std::size_t k = 0; k < r.order.size(); ++k) {
      text << bag.id << '\t' << k + 1 << '\t' << r.order[k] << '\t' << model.class_names[static_cast<std::size_t>(c)]
           << '\t' << r.scores[k] << '\n';
      items.push_back({{"instance", r.order[k]}, {"score", r.scores[k]}});
    }
    bags.push_back({{"bag", bag.id},
                    {"class", model.class_names[static_cast<std::size_t>(c)]},
                    {"truncated", r.truncated},
                    {"ranking", items}});
  }
  if (format == "json") {
    json doc = {{"model", model_path}, {"method", random ? "rand" : to_string(v)}, {"top", top}, {"bags", bags}};
    emit(doc.dump(2) + "\n", out_path, out);
  } else {
    emit(text.str(), out_path, out);
  }
  return kOk;
}

int cmd_synth(const DataArgs& data, const std::optional<std::uint64_t>& seed_flag, const std::string& out_path,
              const std::string& truth_path, std::ostream& out) {
  DataArgs d = data;
  d.path = "synth";
  const LoadedData loaded = load_data(d, resolve_seed(seed_flag));
  std::ostringstream csv;
  write_bag_csv(loaded.dataset, csv);
  emit(csv.str(), out_path, out);
  if (!truth_path.empty()) {
    std::ostringstream t;
    for (ClassId c : loaded.planted->truth) {
      t << (c == PlantedData::kNoise ? std::string("noise") : loaded.dataset.class_names[static_cast<std::size_t>(c)])
        << '\n';
    }
    emit(t.str(), truth_path, out);
  }
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Latent Fisher discriminant analysis for multiple-instance data", "lfda"};
  app.require_subcommand(1);
  std::optional<std::uint64_t> seed;
  app.add_option("--seed", seed, "random seed (falls back to LFDA_SEED, then 0)");

  DataArgs train_data;
  ModelArgs train_model;
  std::string train_out;
  bool train_quiet = false;
  auto* train_cmd = app.add_subcommand("train", "fit a model on a bag dataset");
  add_data_options(train_cmd, train_data, true);
  add_model_options(train_cmd, train_model);
  train_cmd->add_option("--out", train_out, "write the model here (JSON)");
  train_cmd->add_option("--seed", seed, "random seed");
  train_cmd->add_flag("--quiet", train_quiet, "no summary");

  DataArgs predict_data;
  std::string predict_model, predict_format = "text", predict_rule, predict_out;
  auto* predict_cmd = app.add_subcommand("predict", "label every bag in a dataset");
  add_data_options(predict_cmd, predict_data, true);
  predict_cmd->add_option("--model", predict_model, "model file")->required();
  predict_cmd->add_option("--format", predict_format, "text, csv or json")
      ->check(CLI::IsMember({"text", "csv", "json"}));
  predict_cmd->add_option("--bag-rule", predict_rule, "override the model's bag rule (max or mean)");
  predict_cmd->add_option("--out", predict_out, "output file (default stdout)");
  predict_cmd->add_option("--seed", seed, "random seed");

  BenchArgs bench;
  auto* bench_cmd = app.add_subcommand("benchmark", "repeated k-fold cross-validation");
  bench_cmd->add_option("--spec", bench.spec_path, "experiment spec (JSON); flags override it");
  add_data_options(bench_cmd, bench.data, false);
  add_model_options(bench_cmd, bench.model);
  bench_cmd->add_option("--name", bench.name, "experiment name");
  bench_cmd->add_option("--folds", bench.folds, "folds per repeat");
  bench_cmd->add_option("--repeats", bench.repeats, "repeats");
  bench_cmd->add_option("--jobs", bench.jobs, "worker threads");
  bench_cmd->add_option("--methods", bench.methods, "comma list from lda, lfda, jlfda, rand");
  bench_cmd->add_option("--grid-K", bench.grid_k, "sweep K")->delimiter(',');
  bench_cmd->add_option("--grid-N", bench.grid_n, "sweep N")->delimiter(',');
  bench_cmd->add_option("--grid-T", bench.grid_t, "sweep T")->delimiter(',');
  bench_cmd->add_option("--grid-beta", bench.grid_beta, "sweep beta")->delimiter(',');
  bench_cmd->add_option("--format", bench.format, "text, csv or json")->check(CLI::IsMember({"text", "csv", "json"}));
  bench_cmd->add_option("--out", bench.out_path, "output file (default stdout)");
  bench_cmd->add_flag("--progress", bench.progress, "report each fold on stderr");
  bench_cmd->add_option("--seed", seed, "random seed");

  DataArgs rank_data;
  std::string rank_model, rank_class, rank_variant, rank_format = "text", rank_out;
  std::size_t rank_top = 10;
  bool rank_random = false;
  auto* rank_cmd = app.add_subcommand("rank", "list each bag's most representative instances");
  add_data_options(rank_cmd, rank_data, true);
  rank_cmd->add_option("--model", rank_model, "model file")->required();
  rank_cmd->add_option("--top", rank_top, "instances per bag");
  rank_cmd->add_option("--class", rank_class, "rank against this class (default: the bag's predicted class)");
  rank_cmd->add_option("--variant", rank_variant, "lfda or jlfda scoring (default: the model's)")
      ->check(CLI::IsMember({"lfda", "jlfda"}));
  rank_cmd->add_flag("--random", rank_random, "uniform random selection instead (RAND baseline)");
  rank_cmd->add_option("--format", rank_format, "text or json")->check(CLI::IsMember({"text", "json"}));
  rank_cmd->add_option("--out", rank_out, "output file (default stdout)");
  rank_cmd->add_option("--seed", seed, "random seed");

  DataArgs synth_data;
  std::string synth_out, synth_truth;
  auto* synth_cmd = app.add_subcommand("synth", "write a planted-cluster dataset as bag-CSV");
  add_data_options(synth_cmd, synth_data, false);
  synth_cmd->add_option("--out", synth_out, "output file (default stdout)");
  synth_cmd->add_option("--truth", synth_truth, "also write per-instance planted labels here");
  synth_cmd->add_option("--seed", seed, "random seed");

  DataArgs info_data;
  auto* info_cmd = app.add_subcommand("info", "summarize a bag dataset");
  add_data_options(info_cmd, info_data, true);
  info_cmd->add_option("--seed", seed, "random seed");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUserError;
  }

  try {
    if (*train_cmd) return cmd_train(train_data, train_model, seed, train_out, train_quiet, out);
    if (*predict_cmd) {
      return cmd_predict(predict_data, predict_model, predict_format, predict_rule, seed, predict_out, out);
    }
    if (*bench_cmd) return cmd_benchmark(bench_cmd, bench, seed, out, err);
    if (*rank_cmd) {
      return cmd_rank(rank_data, rank_model, rank_top, rank_class, rank_variant, rank_random, seed, rank_format,
                      rank_out, out);
    }
    if (*synth_cmd) return cmd_synth(synth_data, seed, synth_out, synth_truth, out);
    if (*info_cmd) {
      const LoadedData loaded = load_data(info_data, resolve_seed(seed));
      out << describe(loaded.dataset) << '\n';
      return kOk;
    }
  } catch (const InputError& e) {
    err << "error: " << e.what() << '\n';
    return kUserError;
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << '\n';
    return kNumericalError;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << '\n';
    return kNumericalError;
  }
  return kUserError;
}

}  // namespace lfda::cli
