#include "lfda/error.hpp"
#include "lfda/harness.hpp"

#include <nlohmann/json.hpp>

#include <iomanip>
#include <limits>
#include <numeric>
#include <sstream>

namespace lfda::harness {

namespace {

using nlohmann::json;

double mean_of(const std::vector<double>& v) {
  return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

std::string text_report(const ResultTable& t) {
  const ExperimentSpec& s = t.spec;
  std::ostringstream out;
  out << "experiment: " << s.name << '\n';
  out << "dataset:    " << (s.format == "synth" ? std::string("planted synthetic") : s.dataset);
  if (!t.dataset_summary.empty()) out << " (" << t.dataset_summary << ')';
  out << '\n';
  out << "protocol:   " << s.repeats << " x " << s.folds << "-fold CV, seed " << s.seed << '\n';
  out << "accuracy:   bag-level, percent of test bags labeled correctly; bag rule '"
      << to_string(s.params.bag_rule) << "'\n";
  out << "preprocess: standardize " << (s.preprocess.standardize ? "on" : "off") << ", PCA "
      << (s.preprocess.pca_dim ? std::to_string(*s.preprocess.pca_dim) + " dims" : std::string("off")) << '\n';
  out << '\n';
  out << std::left << std::setw(7) << "method" << std::right << std::setw(4) << "K" << std::setw(4) << "N"
      << std::setw(5) << "T" << std::setw(10) << "beta" << std::setw(9) << "mean" << std::setw(8) << "std"
      << std::setw(7) << "folds" << std::setw(8) << "failed" << std::setw(10) << "sec/fold" << '\n';
  out << std::fixed;
  for (const MethodSummary& r : t.rows) {
    out << std::left << std::setw(7) << to_string(r.method) << std::right << std::setw(4) << r.params.components
        << std::setw(4) << r.params.neighbors << std::setw(5) << r.params.max_iterations << std::setw(10)
        << std::setprecision(2) << r.params.beta << std::setw(9) << r.mean << std::setw(8) << r.stddev
        << std::setw(7) << r.raw.size() << std::setw(8) << r.failed_folds << std::setw(10)
        << std::setprecision(3) << mean_of(r.seconds);
    if (r.failed) out << "  FAILED";
    out << '\n';
  }
  std::size_t errors = 0;
  for (const FoldResult& f : t.folds) errors += f.error ? 1 : 0;
  if (errors > 0) {
    out << '\n' << errors << " fold error(s):\n";
    for (const FoldResult& f : t.folds) {
      if (f.error) {
        out << "  repeat " << f.repeat << " fold " << f.fold << ' ' << to_string(f.method) << ": " << *f.error
            << '\n';
      }
    }
  }
  return out.str();
}

std::string csv_report(const ResultTable& t) {
  std::ostringstream out;
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  out << "method,grid,K,N,T,beta,mean,std,folds,failed_folds,mean_seconds\n";
  for (const MethodSummary& r : t.rows) {
    out << to_string(r.method) << ',' << r.grid_index << ',' << r.params.components << ',' << r.params.neighbors
        << ',' << r.params.max_iterations << ',' << r.params.beta << ',' << r.mean << ',' << r.stddev << ','
        << r.raw.size() << ',' << r.failed_folds << ',' << mean_of(r.seconds) << '\n';
  }
  return out.str();
}

std::string json_report(const ResultTable& t) {
  json rows = json::array();
  for (const MethodSummary& r : t.rows) {
    rows.push_back({{"method", to_string(r.method)},
                    {"grid", r.grid_index},
                    {"K", r.params.components},
                    {"N", r.params.neighbors},
                    {"T", r.params.max_iterations},
                    {"beta", r.params.beta},
                    {"mean", r.mean},
                    {"std", r.stddev},
                    {"raw", r.raw},
                    {"seconds", r.seconds},
                    {"failed_folds", r.failed_folds},
                    {"failed", r.failed}});
  }
  json folds = json::array();
  for (const FoldResult& f : t.folds) {
    json j = {{"repeat", f.repeat},         {"fold", f.fold},          {"method", to_string(f.method)},
              {"grid", f.grid_index},       {"accuracy", f.accuracy},  {"seconds", f.seconds},
              {"iterations", f.iterations}, {"converged", f.converged}};
    if (f.error) j["error"] = *f.error;
    folds.push_back(std::move(j));
  }
  json doc = {{"spec", json::parse(spec_to_json(t.spec))},
              {"dataset", t.dataset_summary},
              {"accuracy", "bag-level percent"},
              {"results", std::move(rows)},
              {"folds", std::move(folds)},
              {"ok", t.ok()}};
  return doc.dump(2) + "\n";
}

}  // namespace

ReportFormat parse_report_format(const std::string& s) {
  if (s == "text" || s == "table" || s == "table-text") return ReportFormat::kText;
  if (s == "csv") return ReportFormat::kCsv;
  if (s == "json") return ReportFormat::kJson;
  throw InputError("unknown report format '" + s + "' (expected text, csv or json)");
}

std::string emit_report(const ResultTable& table, ReportFormat format) {
  switch (format) {
    case ReportFormat::kText: return text_report(table);
    case ReportFormat::kCsv: return csv_report(table);
    case ReportFormat::kJson: return json_report(table);
  }
  throw InputError("unknown report format");
}

}  // namespace lfda::harness
