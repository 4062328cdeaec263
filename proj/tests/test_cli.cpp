#include "cli.hpp"

#include <doctest.h>
#include <nlohmann/json.hpp>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <unistd.h>

namespace fs = std::filesystem;

namespace {

struct Result {
  int code = -1;
  std::string out;
  std::string err;
};

Result run(std::vector<std::string> args) {
  std::ostringstream out, err;
  Result r;
  r.code = lfda::cli::run(args, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

std::size_t count_lines(const std::string& s) {
  std::size_t n = 0;
  for (char ch : s) n += ch == '\n' ? 1 : 0;
  return n;
}

class TempDir {
 public:
  TempDir() : path_(fs::temp_directory_path() / ("lfda_cli_test_" + std::to_string(::getpid()))) {
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  std::string file(const std::string& name) const { return (path_ / name).string(); }
  std::string write(const std::string& name, const std::string& text) const {
    std::ofstream(path_ / name) << text;
    return file(name);
  }

 private:
  fs::path path_;
};

}  // namespace

TEST_CASE("missing subcommand or --data is a usage error") {
  CHECK(run({}).code == 1);
  const Result r = run({"train"});
  CHECK(r.code == 1);
  CHECK(r.err.find("--data") != std::string::npos);
  CHECK(run({"train", "--data", "synth", "--K", "zero"}).code == 1);
  CHECK(run({"--help"}).code == 0);
}

TEST_CASE("train, predict and rank on planted data") {
  TempDir tmp;
  const std::string model = tmp.file("model.json");
  const Result t = run({"train", "--data", "synth", "--synth-sep", "10", "--variant", "lfda", "--weight-init",
                        "bag-vote", "--seed", "3", "--out", model});
  REQUIRE(t.code == 0);
  CHECK(t.out.find("recall") != std::string::npos);
  CHECK(fs::exists(model));

  // Training bags against fresh bags from another generator seed.
  const Result train_pred = run({"predict", "--data", "synth", "--seed", "3", "--model", model, "--format", "json"});
  const Result test_pred = run({"predict", "--data", "synth", "--seed", "1003", "--model", model, "--format", "json"});
  REQUIRE(train_pred.code == 0);
  REQUIRE(test_pred.code == 0);
  const auto train_doc = nlohmann::json::parse(train_pred.out);
  const auto test_doc = nlohmann::json::parse(test_pred.out);
  CHECK(train_doc["accuracy"].get<double>() >= test_doc["accuracy"].get<double>());
  REQUIRE(test_doc["predictions"].size() == 20);
  for (const auto& rec : test_doc["predictions"]) {
    CHECK(rec.contains("bag"));
    CHECK(rec.contains("predicted"));
    CHECK(rec["scores"].size() == 2);
  }
  CHECK(run({"predict", "--data", "synth", "--seed", "1003", "--model", model, "--format", "json"}).out ==
        test_pred.out);

  const Result rank = run({"rank", "--data", "synth", "--seed", "3", "--synth-bags", "1", "--model", model});
  REQUIRE(rank.code == 0);
  CHECK(count_lines(rank.out) == 1 + 2 * 10);  // header, then 10 per bag
  const Result top1 =
      run({"rank", "--data", "synth", "--seed", "3", "--synth-bags", "1", "--model", model, "--top", "1"});
  CHECK(count_lines(top1.out) == 1 + 2);
  const Result rand = run({"rank", "--data", "synth", "--seed", "3", "--synth-bags", "1", "--model", model,
                           "--random", "--top", "3"});
  CHECK(count_lines(rand.out) == 1 + 2 * 3);

  const Result bad_class = run({"rank", "--data", "synth", "--model", model, "--class", "nope"});
  CHECK(bad_class.code == 1);
  CHECK(bad_class.err.find("nope") != std::string::npos);

  const Result wide = run({"predict", "--data", "synth", "--synth-dim", "3", "--model", model});
  CHECK(wide.code == 1);
  CHECK(wide.err.find('2') != std::string::npos);
  CHECK(wide.err.find('3') != std::string::npos);
}

TEST_CASE("rank --top 1 on a single-instance bag returns that instance") {
  TempDir tmp;
  const std::string train = tmp.write("train.csv",
                                      "a1,a,0,0\na1,a,0.2,0.1\na2,a,0.1,-0.1\na2,a,-0.1,0.2\n"
                                      "b1,b,5,5\nb1,b,5.2,4.9\nb2,b,4.9,5.1\nb2,b,5.1,5.2\n");
  const std::string one = tmp.write("one.csv", "solo,a,0.05,0.05\n");
  const std::string model = tmp.file("m.json");
  REQUIRE(run({"train", "--data", train, "--K", "1", "--N", "1", "--out", model, "--quiet"}).code == 0);
  const Result r = run({"rank", "--data", one, "--model", model, "--top", "1"});
  REQUIRE(r.code == 0);
  std::istringstream lines(r.out);
  std::string header, row;
  std::getline(lines, header);
  std::getline(lines, row);
  CHECK(row.rfind("solo\t1\t0\t", 0) == 0);
}

TEST_CASE("data errors exit 1") {
  TempDir tmp;
  const std::string empty = tmp.write("empty.csv", "");
  const Result r = run({"train", "--data", empty});
  CHECK(r.code == 1);
  CHECK(r.err.find("empty") != std::string::npos);
  CHECK(run({"train", "--data", tmp.file("absent.csv")}).code == 1);
  CHECK(run({"predict", "--data", "synth", "--model", tmp.file("absent.json")}).code == 1);
  const std::string ragged = tmp.write("ragged.csv", "a1,a,1,2\na1,a,1\n");
  CHECK(run({"info", "--data", ragged}).code == 1);
}

TEST_CASE("degenerate classes exit 2") {
  TempDir tmp;
  // Both classes hold the same points, so their means coincide.
  const std::string same = tmp.write("same.csv",
                                     "a1,a,1,0\na1,a,-1,0\na2,a,0,1\na2,a,0,-1\n"
                                     "b1,b,1,0\nb1,b,-1,0\nb2,b,0,1\nb2,b,0,-1\n");
  const Result r = run({"train", "--data", same, "--K", "1", "--N", "1"});
  CHECK(r.code == 2);
}

TEST_CASE("benchmark on a k=2 toy run") {
  const auto start = std::chrono::steady_clock::now();
  const Result r = run({"benchmark", "--data", "synth", "--synth-bags", "6", "--folds", "2", "--repeats", "1",
                        "--T", "5", "--format", "csv"});
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  REQUIRE(r.code == 0);
  CHECK(seconds < 5.0);
  CHECK(count_lines(r.out) == 1 + 4);
  CHECK(r.out.rfind("method,", 0) == 0);
  for (const char* m : {"LDA,", "LFDA,", "JLFDA,", "RAND,"}) CHECK(r.out.find(std::string("\n") + m) != std::string::npos);

  const Result again = run({"benchmark", "--data", "synth", "--synth-bags", "6", "--folds", "2", "--repeats", "1",
                            "--T", "5", "--format", "json", "--jobs", "2"});
  REQUIRE(again.code == 0);
  CHECK(nlohmann::json::parse(again.out)["results"].size() == 4);

  CHECK(run({"benchmark", "--data", "synth", "--folds", "1"}).code == 1);
  CHECK(run({"benchmark", "--data", "synth", "--methods", "svm"}).code == 1);
}

TEST_CASE("benchmark reads a spec file") {
  TempDir tmp;
  const std::string spec = tmp.write(
      "spec.json",
      R"({"name": "toy", "dataset": "synth", "format": "synth", "synth": {"bags_per_class": 6},
          "folds": 2, "repeats": 1, "methods": ["lda", "rand"], "params": {"T": 3}})");
  const Result r = run({"benchmark", "--spec", spec, "--format", "json"});
  REQUIRE(r.code == 0);
  const auto doc = nlohmann::json::parse(r.out);
  CHECK(doc["results"].size() == 2);
  CHECK(doc["spec"]["name"] == "toy");
}

TEST_CASE("synth and info") {
  TempDir tmp;
  const std::string data = tmp.file("planted.csv");
  const std::string truth = tmp.file("truth.txt");
  REQUIRE(run({"synth", "--synth-bags", "3", "--out", data, "--truth", truth}).code == 0);
  const Result info = run({"info", "--data", data});
  REQUIRE(info.code == 0);
  CHECK(info.out.find('6') != std::string::npos);
  std::ifstream in(truth);
  std::size_t lines = 0;
  for (std::string s; std::getline(in, s);) ++lines;
  CHECK(lines == 60);
}
