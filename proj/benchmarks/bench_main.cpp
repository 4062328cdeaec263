#include "lfda/gmm.hpp"
#include "lfda/lda.hpp"
#include "lfda/lfda.hpp"
#include "lfda/linalg.hpp"
#include "lfda/mildata.hpp"

#include <benchmark/benchmark.h>

#include <random>

using namespace lfda;

namespace {

Matrix gaussian(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = g(rng);
  }
  return m;
}

void BM_SymEigen(benchmark::State& state) {
  const Eigen::Index d = state.range(0);
  const Matrix a = gaussian(d, d, 1);
  const Matrix s = a + a.transpose();
  for (auto _ : state) benchmark::DoNotOptimize(linalg::sym_eigen(s));
}
BENCHMARK(BM_SymEigen)->Arg(16)->Arg(64)->Arg(166);

void BM_Knn(benchmark::State& state) {
  const Matrix ref = gaussian(state.range(0), 8, 2);
  const Matrix q = gaussian(200, 8, 3);
  for (auto _ : state) benchmark::DoNotOptimize(linalg::knn_indices(q, ref, 4));
  state.SetItemsProcessed(state.iterations() * 200);
}
BENCHMARK(BM_Knn)->Arg(500)->Arg(5000);

void BM_FitEm(benchmark::State& state) {
  const Matrix pts = gaussian(state.range(0), 2, 4);
  gmm::EmOptions opt;
  for (auto _ : state) benchmark::DoNotOptimize(gmm::fit_em(pts, opt));
}
BENCHMARK(BM_FitEm)->Arg(200)->Arg(2000);

void BM_FitLda(benchmark::State& state) {
  const Eigen::Index d = state.range(0);
  const Matrix x = gaussian(400, d, 5);
  std::vector<ClassId> z(400);
  for (std::size_t i = 0; i < z.size(); ++i) z[i] = static_cast<ClassId>(i % 2);
  for (auto _ : state) benchmark::DoNotOptimize(lda::fit_lda(x, z, 2, 40.0));
}
BENCHMARK(BM_FitLda)->Arg(40)->Arg(166);

void BM_TrainPlanted(benchmark::State& state) {
  PlantedOptions po;
  po.dim = static_cast<int>(state.range(0));
  const BagDataset ds = synth_planted(po).dataset;
  HyperParams hp;
  hp.variant = Variant::kLfda;
  for (auto _ : state) benchmark::DoNotOptimize(train(ds, hp));
}
BENCHMARK(BM_TrainPlanted)->Arg(2)->Arg(20)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
