#include "lfda/mildata.hpp"

#include "lfda/error.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <numbers>
#include <numeric>
#include <random>
#include <sstream>
#include <string_view>
#include <unordered_map>

namespace lfda {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

bool parse_double(std::string_view s, double& out) {
  s = trim(s);
  if (s.empty()) return false;
  if (s.front() == '+') s.remove_prefix(1);
  const auto* end = s.data() + s.size();
  const auto [ptr, ec] = std::from_chars(s.data(), end, out);
  return ec == std::errc{} && ptr == end;
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      fields.push_back(trim(line.substr(start)));
      break;
    }
    fields.push_back(trim(line.substr(start, comma - start)));
    start = comma + 1;
  }
  return fields;
}

// Numeric order when every label is a number, lexicographic otherwise.
std::vector<std::string> ordered_labels(const std::vector<std::string>& seen) {
  std::vector<std::string> labels = seen;
  bool numeric = true;
  for (const auto& l : labels) {
    double v = 0.0;
    if (!parse_double(l, v)) numeric = false;
  }
  std::sort(labels.begin(), labels.end(), [numeric](const std::string& a, const std::string& b) {
    if (numeric) {
      double x = 0.0;
      double y = 0.0;
      parse_double(a, x);
      parse_double(b, y);
      if (x != y) return x < y;
    }
    return a < b;
  });
  return labels;
}

}  // namespace

Eigen::Index BagDataset::num_instances() const {
  Eigen::Index total = 0;
  for (const Bag& bag : bags) total += bag.size();
  return total;
}

std::vector<std::size_t> BagDataset::bags_per_class() const {
  std::vector<std::size_t> counts(class_names.size(), 0);
  for (const Bag& bag : bags) {
    if (bag.label >= 0 && bag.label < num_classes()) ++counts[static_cast<std::size_t>(bag.label)];
  }
  return counts;
}

void BagDataset::validate() const {
  if (bags.empty()) throw EmptyInputError("dataset has no bags");
  if (dim < 1) throw DimensionError("dataset dimension must be positive");
  for (const Bag& bag : bags) {
    if (bag.size() < 1) throw InputError("bag '" + bag.id + "' is empty");
    if (bag.instances.cols() != dim) {
      throw DimensionError("bag '" + bag.id + "' has dimension " +
                           std::to_string(bag.instances.cols()) + ", expected " +
                           std::to_string(dim));
    }
    if (bag.label < 0 || bag.label >= num_classes()) {
      throw LabelError("bag '" + bag.id + "' has label index " + std::to_string(bag.label) +
                       " outside [0, " + std::to_string(num_classes()) + ")");
    }
    if (!bag.instances.allFinite()) throw InputError("bag '" + bag.id + "' has non-finite values");
  }
  const auto counts = bags_per_class();
  for (std::size_t c = 0; c < counts.size(); ++c) {
    if (counts[c] == 0) throw LabelError("class '" + class_names[c] + "' has no bags");
  }
}

BagDataset BagDataset::subset(const std::vector<std::size_t>& bag_indices) const {
  BagDataset out;
  out.class_names = class_names;
  out.dim = dim;
  out.bags.reserve(bag_indices.size());
  for (std::size_t i : bag_indices) out.bags.push_back(bags.at(i));
  return out;
}

InstanceView flatten(const BagDataset& ds) {
  InstanceView view;
  const Eigen::Index total = ds.num_instances();
  view.points.resize(total, ds.dim);
  view.labels.reserve(static_cast<std::size_t>(total));
  view.bag_of.reserve(static_cast<std::size_t>(total));
  Eigen::Index row = 0;
  for (std::size_t b = 0; b < ds.bags.size(); ++b) {
    const Bag& bag = ds.bags[b];
    view.points.middleRows(row, bag.size()) = bag.instances;
    row += bag.size();
    for (Eigen::Index k = 0; k < bag.size(); ++k) {
      view.labels.push_back(bag.label);
      view.bag_of.push_back(b);
    }
  }
  return view;
}

BagDataset read_bag_csv(std::istream& in) {
  struct PendingBag {
    std::string label;
    std::vector<std::vector<double>> rows;
  };
  std::vector<std::string> bag_order;
  std::unordered_map<std::string, PendingBag> pending;
  std::vector<std::string> labels_seen;
  std::size_t dim = 0;
  bool dim_known = false;

  std::string line;
  std::size_t line_no = 0;
  bool first_content_line = true;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view view = line;
    if (line_no == 1 && view.size() >= 3 && view.substr(0, 3) == "\xEF\xBB\xBF") view.remove_prefix(3);
    if (trim(view).empty()) continue;
    const auto fields = split_fields(view);
    if (fields.size() < 3) {
      throw ParseError("expected bag_id,label,f1[,...], got " + std::to_string(fields.size()) +
                       " field(s)", line_no);
    }
    if (first_content_line) {
      first_content_line = false;
      double probe = 0.0;
      if (!parse_double(fields[2], probe)) continue;  // header
    }
    const std::size_t d = fields.size() - 2;
    if (!dim_known) {
      dim = d;
      dim_known = true;
    } else if (d != dim) {
      throw ParseError("row has " + std::to_string(d) + " features, expected " +
                       std::to_string(dim), line_no);
    }
    std::vector<double> row(d);
    for (std::size_t k = 0; k < d; ++k) {
      if (!parse_double(fields[k + 2], row[k]) || !std::isfinite(row[k])) {
        throw ParseError("feature " + std::to_string(k + 1) + " is not a finite number: '" +
                         std::string(fields[k + 2]) + "'", line_no);
      }
    }
    const std::string id(fields[0]);
    const std::string label(fields[1]);
    if (id.empty()) throw ParseError("empty bag id", line_no);
    if (label.empty()) throw ParseError("empty label", line_no);
    auto [it, inserted] = pending.try_emplace(id);
    if (inserted) {
      bag_order.push_back(id);
      it->second.label = label;
      if (std::find(labels_seen.begin(), labels_seen.end(), label) == labels_seen.end()) {
        labels_seen.push_back(label);
      }
    } else if (it->second.label != label) {
      throw ParseError("bag '" + id + "' has label '" + label + "' but earlier rows say '" +
                       it->second.label + "'", line_no);
    }
    it->second.rows.push_back(std::move(row));
  }
  if (bag_order.empty()) throw EmptyInputError("empty input: no instances in bag-CSV data");

  BagDataset ds;
  ds.class_names = ordered_labels(labels_seen);
  ds.dim = static_cast<Eigen::Index>(dim);
  std::map<std::string, ClassId> class_index;
  for (std::size_t c = 0; c < ds.class_names.size(); ++c) {
    class_index[ds.class_names[c]] = static_cast<ClassId>(c);
  }
  ds.bags.reserve(bag_order.size());
  for (const std::string& id : bag_order) {
    const PendingBag& p = pending.at(id);
    Bag bag;
    bag.id = id;
    bag.label = class_index.at(p.label);
    bag.instances.resize(static_cast<Eigen::Index>(p.rows.size()), ds.dim);
    for (std::size_t r = 0; r < p.rows.size(); ++r) {
      for (std::size_t k = 0; k < dim; ++k) {
        bag.instances(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(k)) = p.rows[r][k];
      }
    }
    ds.bags.push_back(std::move(bag));
  }
  ds.validate();
  return ds;
}

BagDataset load_bag_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open '" + path.string() + "'");
  return read_bag_csv(in);
}

BagDataset load_musk(const std::filesystem::path& path) {
  BagDataset ds = load_bag_csv(path);
  if (ds.dim != 166) {
    throw DimensionError("MUSK data must have 166 features, found " + std::to_string(ds.dim));
  }
  for (const std::string& name : ds.class_names) {
    double v = -1.0;
    if (!parse_double(name, v) || (v != 0.0 && v != 1.0)) {
      throw LabelError("MUSK labels must be 0 or 1, found '" + name + "'");
    }
  }
  if (ds.num_classes() != 2) throw LabelError("MUSK data must contain both classes 0 and 1");
  return ds;
}

void write_bag_csv(const BagDataset& ds, std::ostream& out) {
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (const Bag& bag : ds.bags) {
    const std::string& label = ds.class_names.at(static_cast<std::size_t>(bag.label));
    for (Eigen::Index r = 0; r < bag.size(); ++r) {
      out << bag.id << ',' << label;
      for (Eigen::Index k = 0; k < bag.instances.cols(); ++k) out << ',' << bag.instances(r, k);
      out << '\n';
    }
  }
}

void save_bag_csv(const BagDataset& ds, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write '" + path.string() + "'");
  write_bag_csv(ds, out);
}

PlantedData synth_planted(const PlantedOptions& opt) {
  if (opt.num_classes < 2) throw InputError("synth_planted: need at least two classes");
  if (opt.separation < 0.0) throw InputError("synth_planted: separation must be non-negative");
  if (!(opt.background_scale > 0.0)) throw InputError("synth_planted: background scale must be positive");
  if (opt.dim < 1 || opt.bags_per_class < 1 || opt.instances_per_bag < 1) {
    throw InputError("synth_planted: dim, bags_per_class and instances_per_bag must be positive");
  }
  const int C = opt.num_classes;
  const int d = opt.dim;

  // Class means on a circle in the first two coordinates (a line when d = 1),
  // background at the origin.
  std::vector<linalg::Vector> means(static_cast<std::size_t>(C), linalg::Vector::Zero(d));
  if (d == 1) {
    // +s/2, -s/2, +3s/2, -3s/2, ...
    for (int c = 0; c < C; ++c) {
      const double magnitude = opt.separation * (0.5 + c / 2);
      means[static_cast<std::size_t>(c)](0) = c % 2 == 0 ? magnitude : -magnitude;
    }
  } else {
    const double radius =
        std::max(0.5 * opt.separation, opt.separation / (2.0 * std::sin(std::numbers::pi / C)));
    for (int c = 0; c < C; ++c) {
      const double angle = 2.0 * std::numbers::pi * c / C;
      means[static_cast<std::size_t>(c)](0) = radius * std::cos(angle);
      means[static_cast<std::size_t>(c)](1) = radius * std::sin(angle);
    }
  }

  std::mt19937_64 rng(opt.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const int n_signal = std::clamp(
      static_cast<int>(std::lround(opt.signal_fraction * opt.instances_per_bag)), 1,
      opt.instances_per_bag);

  PlantedData out;
  out.dataset.dim = d;
  for (int c = 0; c < C; ++c) out.dataset.class_names.push_back("class" + std::to_string(c + 1));
  for (int c = 0; c < C; ++c) {
    for (int b = 0; b < opt.bags_per_class; ++b) {
      std::vector<ClassId> kinds(static_cast<std::size_t>(opt.instances_per_bag),
                                 PlantedData::kNoise);
      std::fill_n(kinds.begin(), n_signal, c);
      std::shuffle(kinds.begin(), kinds.end(), rng);
      Bag bag;
      bag.id = "c" + std::to_string(c + 1) + "_b" + std::to_string(b + 1);
      bag.label = c;
      bag.instances.resize(opt.instances_per_bag, d);
      for (int r = 0; r < opt.instances_per_bag; ++r) {
        const ClassId kind = kinds[static_cast<std::size_t>(r)];
        for (int k = 0; k < d; ++k) {
          bag.instances(r, k) = kind == PlantedData::kNoise
                                    ? opt.background_scale * normal(rng)
                                    : means[static_cast<std::size_t>(kind)](k) + normal(rng);
        }
        out.truth.push_back(kind);
      }
      out.dataset.bags.push_back(std::move(bag));
    }
  }
  return out;
}

std::vector<std::size_t> FoldPlan::test_bags(int fold) const {
  std::vector<std::size_t> out;
  for (std::size_t b = 0; b < fold_of_bag.size(); ++b) {
    if (fold_of_bag[b] == fold) out.push_back(b);
  }
  return out;
}

std::vector<std::size_t> FoldPlan::train_bags(int fold) const {
  std::vector<std::size_t> out;
  for (std::size_t b = 0; b < fold_of_bag.size(); ++b) {
    if (fold_of_bag[b] != fold) out.push_back(b);
  }
  return out;
}

FoldPlan make_folds(const BagDataset& ds, int k, std::uint64_t seed) {
  if (k < 2) throw StratificationError("need at least two folds");
  const auto counts = ds.bags_per_class();
  for (std::size_t c = 0; c < counts.size(); ++c) {
    if (counts[c] < static_cast<std::size_t>(k)) {
      throw StratificationError("class '" + ds.class_names[c] + "' has " +
                                std::to_string(counts[c]) + " bag(s), fewer than " +
                                std::to_string(k) + " folds");
    }
  }
  FoldPlan plan;
  plan.num_folds = k;
  plan.seed = seed;
  plan.fold_of_bag.assign(ds.bags.size(), -1);
  std::mt19937_64 rng(seed);
  int next = 0;
  for (int c = 0; c < ds.num_classes(); ++c) {
    std::vector<std::size_t> members;
    for (std::size_t b = 0; b < ds.bags.size(); ++b) {
      if (ds.bags[b].label == c) members.push_back(b);
    }
    std::shuffle(members.begin(), members.end(), rng);
    for (std::size_t b : members) {
      plan.fold_of_bag[b] = next;
      next = (next + 1) % k;
    }
  }
  return plan;
}

Standardizer Standardizer::fit(const linalg::Matrix& points) {
  if (points.rows() < 1) throw EmptyInputError("standardizer: no points");
  Standardizer s;
  s.mean = points.colwise().mean().transpose();
  const linalg::Matrix centered = points.rowwise() - s.mean.transpose();
  s.scale = (centered.colwise().squaredNorm() / static_cast<double>(points.rows()))
                .transpose()
                .cwiseSqrt();
  for (Eigen::Index k = 0; k < s.scale.size(); ++k) {
    if (!(s.scale(k) > 0.0)) s.scale(k) = 1.0;
  }
  return s;
}

linalg::Matrix Standardizer::apply(const linalg::Matrix& points) const {
  if (points.cols() != mean.size()) {
    throw DimensionError("standardizer: expected " + std::to_string(mean.size()) +
                         " columns, got " + std::to_string(points.cols()));
  }
  return (points.rowwise() - mean.transpose()).array().rowwise() / scale.transpose().array();
}

}  // namespace lfda
