#include <benchmark/benchmark.h>

#include <random>

#include "cgak/alignment.hpp"
#include "cgak/geometry.hpp"
#include "cgak/gram.hpp"
#include "cgak/harness.hpp"
#include "cgak/svr.hpp"

namespace {

std::vector<cgak::FeatureVector> sequence(std::mt19937_64& rng, std::size_t len, std::size_t dim) {
  std::uniform_real_distribution<double> u(0, 1);
  std::vector<cgak::FeatureVector> s(len, cgak::FeatureVector(dim));
  for (auto& v : s)
    for (auto& x : v) x = u(rng);
  return s;
}

void BM_GakPair(benchmark::State& state) {
  std::mt19937_64 rng(1);
  const auto len = static_cast<std::size_t>(state.range(0));
  const auto x = sequence(rng, len, 16), y = sequence(rng, len, 16);
  const cgak::LocalKernelParams p{4.0, cgak::DivergenceKind::chi_square};
  for (auto _ : state) benchmark::DoNotOptimize(cgak::gak(x, y, p));
}
BENCHMARK(BM_GakPair)->Arg(2)->Arg(8)->Arg(30);

void BM_DtwPair(benchmark::State& state) {
  std::mt19937_64 rng(2);
  const auto len = static_cast<std::size_t>(state.range(0));
  const auto x = sequence(rng, len, 16), y = sequence(rng, len, 16);
  for (auto _ : state) benchmark::DoNotOptimize(cgak::dtw_distance(x, y, cgak::DivergenceKind::chi_square));
}
BENCHMARK(BM_DtwPair)->Arg(8)->Arg(30);

void BM_SortFaces(benchmark::State& state) {
  cgak::SynthSpec spec;
  spec.groups = 1;
  spec.min_faces = spec.max_faces = static_cast<std::size_t>(state.range(0));
  const auto group = cgak::synth_dataset(spec, 3).front();
  for (auto _ : state) benchmark::DoNotOptimize(cgak::sort_faces(group, "hist"));
}
BENCHMARK(BM_SortFaces)->Arg(8)->Arg(30);

void BM_Gram(benchmark::State& state) {
  cgak::SynthSpec spec;
  spec.groups = static_cast<std::size_t>(state.range(0));
  const auto data = cgak::synth_dataset(spec, 4);
  std::vector<cgak::SortedSequence> seqs;
  for (const auto& g : data) seqs.push_back(cgak::sort_faces(g, "hist"));
  const cgak::KernelSpec k{cgak::KernelKind::gak, cgak::DivergenceKind::chi_square, 4.0};
  for (auto _ : state) benchmark::DoNotOptimize(cgak::gram(seqs, k));
}
BENCHMARK(BM_Gram)->Arg(50)->Arg(150)->Unit(benchmark::kMillisecond);

void BM_SvrFit(benchmark::State& state) {
  cgak::SynthSpec spec;
  spec.groups = static_cast<std::size_t>(state.range(0));
  const auto data = cgak::synth_dataset(spec, 5);
  std::vector<cgak::SortedSequence> seqs;
  std::vector<double> labels;
  for (const auto& g : data) {
    seqs.push_back(cgak::sort_faces(g, "embed"));
    labels.push_back(g.label);
  }
  const auto g = cgak::gram(seqs, cgak::KernelSpec{cgak::KernelKind::gak, cgak::DivergenceKind::sq_euclidean, 8.0});
  const cgak::SvrConfig cfg{10.0, 0.02};
  for (auto _ : state) benchmark::DoNotOptimize(cgak::svr_fit(g, labels, cfg));
}
BENCHMARK(BM_SvrFit)->Arg(50)->Arg(150)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
