#include "biopro/calibration.hpp"
#include "biopro/io.hpp"
#include "biopro/rng.hpp"
#include "biopro/selection.hpp"
#include "biopro/skew_normal.hpp"
#include "biopro/subspace.hpp"

#include <benchmark/benchmark.h>

#include <filesystem>
#include <vector>

namespace {

using namespace biopro;

Matrix gaussian(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed) {
  RandomStream rng(seed, 0);
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.normal();
  return m;
}

void BM_FitSubspace(benchmark::State& state) {
  const auto d = state.range(0);
  const Matrix diff = gaussian(d, 500, 1);
  for (auto _ : state) benchmark::DoNotOptimize(fit_subspace(diff, 4));
}
BENCHMARK(BM_FitSubspace)->Arg(64)->Arg(256)->Arg(1024)->Unit(benchmark::kMillisecond);

void BM_ClosedFormCalibration(benchmark::State& state) {
  const auto d = state.range(0);
  const auto p_perp = orthogonal_projector(fit_subspace(gaussian(d, d + 8, 2), 2));
  const auto zs = EmbeddingMatrix::unlabeled(gaussian(d, 64, 3));
  const auto zt = EmbeddingMatrix::unlabeled(gaussian(d, 64, 4));
  const auto problem = make_problem(p_perp, zs, zt, 10.0);
  for (auto _ : state) benchmark::DoNotOptimize(solve_calibration(problem));
}
BENCHMARK(BM_ClosedFormCalibration)->Arg(64)->Arg(256)->Arg(768)->Unit(benchmark::kMillisecond);

void BM_SolveThreshold(benchmark::State& state) {
  const SkewNormalParams n{0.5, 0.6, 2.0}, e{7.0, 1.2, 1.0};
  for (auto _ : state) {
    benchmark::DoNotOptimize(solve_threshold(n, e, 3.0, LambdaSide::kWeightsExplicit));
  }
}
BENCHMARK(BM_SolveThreshold)->Unit(benchmark::kMicrosecond);

void BM_FitSkewNormal(benchmark::State& state) {
  RandomStream rng(5, 0);
  std::vector<double> xs(static_cast<std::size_t>(state.range(0)));
  for (auto& x : xs) x = sample_skew_normal({2.0, 1.5, 4.0}, rng);
  for (auto _ : state) benchmark::DoNotOptimize(fit_skew_normal(xs));
}
BENCHMARK(BM_FitSkewNormal)->Arg(1000)->Arg(10000)->Unit(benchmark::kMillisecond);

void BM_EmbeddingRoundTrip(benchmark::State& state) {
  const auto h = EmbeddingMatrix::unlabeled(gaussian(512, state.range(0), 6));
  const auto path = std::filesystem::temp_directory_path() / "biopro-bench.emb";
  for (auto _ : state) {
    io::write_embeddings(h, path);
    benchmark::DoNotOptimize(io::read_embeddings(path));
  }
  state.SetBytesProcessed(state.iterations() * h.values.size() * 8);
  std::filesystem::remove(path);
  std::filesystem::remove(io::manifest_path(path));
  std::filesystem::remove(io::labels_path(path));
}
BENCHMARK(BM_EmbeddingRoundTrip)->Arg(1000)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
