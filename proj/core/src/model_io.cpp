#include "lfda/model_io.hpp"

#include "lfda/error.hpp"

#include <nlohmann/json.hpp>

#include <fstream>
#include <limits>
#include <sstream>

namespace lfda {

namespace {

using nlohmann::json;

constexpr const char* kFormatTag = "lfda-model";

json matrix_json(const Matrix& m) {
  json data = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) data.push_back(m(i, j));
  }
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", std::move(data)}};
}

Matrix matrix_from(const json& j) {
  const auto rows = j.at("rows").get<Eigen::Index>();
  const auto cols = j.at("cols").get<Eigen::Index>();
  const json& data = j.at("data");
  if (rows < 0 || cols < 0 || data.size() != static_cast<std::size_t>(rows * cols)) {
    throw FormatError("model: matrix data does not match its dimensions");
  }
  Matrix m(rows, cols);
  std::size_t k = 0;
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = data[k++].get<double>();
  }
  return m;
}

json vector_json(const Vector& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

Vector vector_from(const json& j) {
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
  return v;
}

json params_json(const HyperParams& hp) {
  return {{"K", hp.components},
          {"N", hp.neighbors},
          {"T", hp.max_iterations},
          {"beta", hp.beta},
          {"epsilon", hp.epsilon},
          {"variant", to_string(hp.variant)},
          {"seed", hp.seed},
          {"bag_rule", to_string(hp.bag_rule)},
          {"weight_rule", to_string(hp.weight_rule)},
          {"weight_init", to_string(hp.weight_init)},
          {"em_max_iter", hp.em_max_iter},
          {"em_ll_tol", hp.em_ll_tol}};
}

HyperParams params_from(const json& j) {
  HyperParams hp;
  hp.components = j.at("K").get<int>();
  hp.neighbors = j.at("N").get<int>();
  hp.max_iterations = j.at("T").get<int>();
  hp.beta = j.at("beta").get<double>();
  hp.epsilon = j.at("epsilon").get<double>();
  hp.variant = parse_variant(j.at("variant").get<std::string>());
  hp.seed = j.at("seed").get<std::uint64_t>();
  hp.bag_rule = parse_bag_rule(j.at("bag_rule").get<std::string>());
  hp.weight_rule = parse_weight_rule(j.at("weight_rule").get<std::string>());
  hp.weight_init = parse_weight_init(j.at("weight_init").get<std::string>());
  hp.em_max_iter = j.at("em_max_iter").get<int>();
  hp.em_ll_tol = j.at("em_ll_tol").get<double>();
  return hp;
}

json mixture_json(const gmm::ClassMixture& mix) {
  json covs = json::array();
  for (const Matrix& c : mix.covariances) covs.push_back(matrix_json(c));
  return {{"weights", vector_json(mix.weights)},
          {"means", matrix_json(mix.means)},
          {"covariances", std::move(covs)},
          {"covariance_floor", mix.covariance_floor},
          {"em_iterations", mix.iterations},
          {"em_converged", mix.converged}};
}

gmm::ClassMixture mixture_from(const json& j) {
  gmm::ClassMixture mix;
  mix.weights = vector_from(j.at("weights"));
  mix.means = matrix_from(j.at("means"));
  for (const json& c : j.at("covariances")) mix.covariances.push_back(matrix_from(c));
  mix.covariance_floor = j.at("covariance_floor").get<double>();
  mix.iterations = j.value("em_iterations", 0);
  mix.converged = j.value("em_converged", false);
  if (mix.means.rows() != mix.weights.size() ||
      mix.covariances.size() != static_cast<std::size_t>(mix.weights.size())) {
    throw FormatError("model: mixture component counts disagree");
  }
  return mix;
}

json trace_json(const std::vector<IterationRecord>& trace) {
  json out = json::array();
  for (const IterationRecord& r : trace) {
    out.push_back({{"iteration", r.iteration},
                   {"delta_p", r.delta_p},
                   {"objective", r.objective},
                   {"selected", r.selected},
                   {"fallback", r.fallback},
                   {"relabeled_size", r.relabeled_size},
                   {"subspace_dim", r.subspace_dim}});
  }
  return out;
}

std::vector<IterationRecord> trace_from(const json& j) {
  std::vector<IterationRecord> out;
  for (const json& r : j) {
    IterationRecord rec;
    rec.iteration = r.at("iteration").get<int>();
    rec.delta_p = r.at("delta_p").is_null() ? std::numeric_limits<double>::infinity()
                                            : r.at("delta_p").get<double>();
    rec.objective = r.at("objective").is_null() ? std::numeric_limits<double>::infinity()
                                                : r.at("objective").get<double>();
    rec.selected = r.at("selected").get<std::vector<int>>();
    rec.fallback = r.at("fallback").get<std::vector<bool>>();
    rec.relabeled_size = r.at("relabeled_size").get<Eigen::Index>();
    rec.subspace_dim = r.at("subspace_dim").get<Eigen::Index>();
    out.push_back(std::move(rec));
  }
  return out;
}

}  // namespace

std::string model_to_json(const TrainedModel& model) {
  json pre = {{"input_dim", model.preprocessing.input_dim}};
  if (model.preprocessing.standardizer) {
    pre["standardize"] = {{"mean", vector_json(model.preprocessing.standardizer->mean)},
                          {"scale", vector_json(model.preprocessing.standardizer->scale)}};
  }
  if (model.preprocessing.pca) {
    pre["pca"] = {{"mean", vector_json(model.preprocessing.pca->mean)},
                  {"basis", matrix_json(model.preprocessing.pca->basis)},
                  {"variances", vector_json(model.preprocessing.pca->variances)}};
  }

  json mixtures = json::array();
  for (const auto& m : model.mixtures) mixtures.push_back(mixture_json(m));

  json doc = {
      {"format", kFormatTag},
      {"version", kModelFormatVersion},
      {"class_names", model.class_names},
      {"params", params_json(model.params)},
      {"preprocessing", std::move(pre)},
      {"projection",
       {{"basis", matrix_json(model.projection.basis)},
        {"eigenvalues", vector_json(model.projection.eigenvalues)},
        {"requested_dim", model.projection.requested_dim}}},
      {"mixtures", std::move(mixtures)},
      {"selected", model.selected},
      {"cluster_weights", {{"w", matrix_json(model.weights.w)}, {"no_votes", model.weights.no_votes}}},
      {"reference", {{"points", matrix_json(model.reference_points)}, {"labels", model.reference_labels}}},
      {"latent",
       {{"iteration", model.latent.iteration},
        {"selected", model.latent.selected},
        {"members", model.latent.members},
        {"labels", model.latent.labels}}},
      {"trace", trace_json(model.trace)},
      {"converged", model.converged},
  };
  return doc.dump(1);
}

TrainedModel model_from_json(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw FormatError(std::string("model: not valid JSON: ") + e.what());
  }
  try {
    if (doc.value("format", std::string()) != kFormatTag) throw FormatError("model: not an lfda model document");
    const int version = doc.at("version").get<int>();
    if (version != kModelFormatVersion) {
      throw FormatError("model: unsupported format version " + std::to_string(version));
    }

    TrainedModel model;
    model.class_names = doc.at("class_names").get<std::vector<std::string>>();
    model.params = params_from(doc.at("params"));

    const json& pre = doc.at("preprocessing");
    model.preprocessing.input_dim = pre.at("input_dim").get<Eigen::Index>();
    if (pre.contains("standardize")) {
      Standardizer s;
      s.mean = vector_from(pre["standardize"].at("mean"));
      s.scale = vector_from(pre["standardize"].at("scale"));
      model.preprocessing.standardizer = std::move(s);
    }
    if (pre.contains("pca")) {
      linalg::PcaModel p;
      p.mean = vector_from(pre["pca"].at("mean"));
      p.basis = matrix_from(pre["pca"].at("basis"));
      p.variances = vector_from(pre["pca"].at("variances"));
      model.preprocessing.pca = std::move(p);
    }

    const json& proj = doc.at("projection");
    model.projection.basis = matrix_from(proj.at("basis"));
    model.projection.eigenvalues = vector_from(proj.at("eigenvalues"));
    model.projection.requested_dim = proj.at("requested_dim").get<Eigen::Index>();

    for (const json& m : doc.at("mixtures")) model.mixtures.push_back(mixture_from(m));
    model.selected = doc.at("selected").get<std::vector<int>>();
    model.weights.w = matrix_from(doc.at("cluster_weights").at("w"));
    model.weights.no_votes = doc.at("cluster_weights").at("no_votes").get<std::vector<bool>>();
    model.reference_points = matrix_from(doc.at("reference").at("points"));
    model.reference_labels = doc.at("reference").at("labels").get<std::vector<ClassId>>();

    const json& latent = doc.at("latent");
    model.latent.iteration = latent.at("iteration").get<int>();
    model.latent.selected = latent.at("selected").get<std::vector<int>>();
    model.latent.members = latent.at("members").get<std::vector<Eigen::Index>>();
    model.latent.labels = latent.at("labels").get<std::vector<ClassId>>();
    model.trace = trace_from(doc.at("trace"));
    model.converged = doc.at("converged").get<bool>();

    const Eigen::Index expected_in = model.preprocessing.output_dim();
    if (model.projection.input_dim() != expected_in) {
      throw FormatError("model: projection input width disagrees with preprocessing");
    }
    if (model.reference_points.rows() != static_cast<Eigen::Index>(model.reference_labels.size()) ||
        model.reference_points.cols() != model.projection.output_dim()) {
      throw FormatError("model: reference set shape disagrees with the projection");
    }
    for (ClassId c : model.reference_labels) {
      if (c < 0 || c >= model.num_classes()) throw FormatError("model: reference label out of range");
    }
    for (const auto& m : model.mixtures) {
      if (m.dim() != model.projection.output_dim()) throw FormatError("model: mixture width disagrees with projection");
    }
    return model;
  } catch (const json::exception& e) {
    throw FormatError(std::string("model: ") + e.what());
  }
}

void save_model(const TrainedModel& model, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write model file '" + path.string() + "'");
  out << model_to_json(model) << '\n';
  if (!out) throw InputError("failed writing model file '" + path.string() + "'");
}

TrainedModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open model file '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return model_from_json(buf.str());
}

}  // namespace lfda
