#include "lfda/error.hpp"
#include "lfda/model_io.hpp"

#include <doctest.h>
#include <nlohmann/json.hpp>

#include <cmath>
#include <filesystem>
#include <limits>

using namespace lfda;

namespace {

TrainedModel trained(Variant v, std::optional<int> pca = std::nullopt) {
  PlantedOptions po;
  po.seed = 3;
  po.dim = 4;
  const PlantedData pd = synth_planted(po);
  HyperParams hp;
  hp.variant = v;
  hp.max_iterations = 5;
  PreprocessOptions pre;
  pre.pca_dim = pca;
  return train(pd.dataset, hp, pre);
}

double max_diff(const Matrix& a, const Matrix& b) {
  REQUIRE(a.rows() == b.rows());
  REQUIRE(a.cols() == b.cols());
  return a.size() == 0 ? 0.0 : (a - b).cwiseAbs().maxCoeff();
}

}  // namespace

TEST_CASE("round trip keeps every number") {
  for (Variant v : {Variant::kLfda, Variant::kJlfda}) {
    for (std::optional<int> pca : {std::optional<int>{}, std::optional<int>{3}}) {
      const TrainedModel m = trained(v, pca);
      const TrainedModel r = model_from_json(model_to_json(m));
      CHECK(r.class_names == m.class_names);
      CHECK(r.params.variant == m.params.variant);
      CHECK(r.params.beta == m.params.beta);
      CHECK(r.params.weight_rule == m.params.weight_rule);
      CHECK(max_diff(r.projection.basis, m.projection.basis) <= 1e-12);
      CHECK(max_diff(r.projection.eigenvalues, m.projection.eigenvalues) <= 1e-12);
      CHECK(max_diff(r.reference_points, m.reference_points) <= 1e-12);
      CHECK(r.reference_labels == m.reference_labels);
      CHECK(r.selected == m.selected);
      CHECK(r.preprocessing.pca.has_value() == pca.has_value());
      REQUIRE(r.mixtures.size() == m.mixtures.size());
      for (std::size_t c = 0; c < m.mixtures.size(); ++c) {
        CHECK(max_diff(r.mixtures[c].weights, m.mixtures[c].weights) <= 1e-12);
        CHECK(max_diff(r.mixtures[c].means, m.mixtures[c].means) <= 1e-12);
        for (std::size_t k = 0; k < m.mixtures[c].covariances.size(); ++k) {
          CHECK(max_diff(r.mixtures[c].covariances[k], m.mixtures[c].covariances[k]) <= 1e-12);
        }
      }
      CHECK(r.trace.size() == m.trace.size());
      CHECK(r.latent.members == m.latent.members);

      PlantedOptions po;
      po.seed = 77;
      po.dim = 4;
      const BagDataset test = synth_planted(po).dataset;
      for (const Bag& b : test.bags) {
        const BagPrediction a = predict_bag(m, b);
        const BagPrediction c = predict_bag(r, b);
        CHECK(a.label == c.label);
        CHECK(max_diff(a.bag_scores, c.bag_scores) <= 1e-12);
      }
    }
  }
}

TEST_CASE("infinite trace values survive") {
  TrainedModel m = trained(Variant::kLfda);
  REQUIRE_FALSE(m.trace.empty());
  m.trace[0].delta_p = std::numeric_limits<double>::infinity();
  m.trace[0].objective = std::numeric_limits<double>::infinity();
  const TrainedModel r = model_from_json(model_to_json(m));
  CHECK(std::isinf(r.trace[0].delta_p));
  CHECK(std::isinf(r.trace[0].objective));
}

TEST_CASE("save and load through a file") {
  const TrainedModel m = trained(Variant::kJlfda);
  const auto path = std::filesystem::temp_directory_path() / "lfda_model_io_test.json";
  save_model(m, path);
  const TrainedModel r = load_model(path);
  std::filesystem::remove(path);
  CHECK(max_diff(r.projection.basis, m.projection.basis) <= 1e-12);
  CHECK_THROWS_AS(load_model(path), InputError);
}

TEST_CASE("malformed documents are rejected") {
  const std::string good = model_to_json(trained(Variant::kLfda));
  CHECK_THROWS_AS(model_from_json("not json"), FormatError);
  CHECK_THROWS_AS(model_from_json("{}"), FormatError);
  CHECK_THROWS_AS(model_from_json("[1,2,3]"), FormatError);

  auto mutate = [&](auto&& f) {
    nlohmann::json doc = nlohmann::json::parse(good);
    f(doc);
    return doc.dump();
  };
  CHECK_THROWS_AS(model_from_json(mutate([](auto& d) { d["version"] = kModelFormatVersion + 1; })), FormatError);
  CHECK_THROWS_AS(model_from_json(mutate([](auto& d) { d["format"] = "other"; })), FormatError);
  CHECK_THROWS_AS(model_from_json(mutate([](auto& d) { d.erase("projection"); })), FormatError);
  CHECK_THROWS_AS(model_from_json(mutate([](auto& d) { d["projection"]["basis"]["rows"] = 99; })), FormatError);
  CHECK_THROWS_AS(model_from_json(mutate([](auto& d) { d["reference"]["labels"][0] = 7; })), FormatError);
  CHECK_THROWS_AS(model_from_json(mutate([](auto& d) { d["params"]["variant"] = "bogus"; })), InputError);
  CHECK_THROWS_AS(model_from_json(mutate([](auto& d) { d["mixtures"][0]["weights"].push_back(0.1); })),
                  FormatError);
  CHECK_NOTHROW(model_from_json(good));
}
