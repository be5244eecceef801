#include <benchmark/benchmark.h>

#include <random>

#include "ragbench/chunking.hpp"
#include "ragbench/corpus.hpp"
#include "ragbench/index.hpp"
#include "ragbench/providers.hpp"

namespace {

std::string words(std::size_t n) {
  std::string out;
  for (std::size_t i = 0; i < n; ++i) {
    if (i) out += ' ';
    out += "word" + std::to_string(i % 257);
  }
  return out;
}

ragbench::VectorIndex build_index(std::size_t rows, std::size_t dim) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> gauss(0, 1);
  std::vector<ragbench::EmbeddingVector> vectors;
  std::vector<std::string> doc_ids;
  for (std::size_t i = 0; i < rows; ++i) {
    ragbench::EmbeddingVector v;
    v.id = "r" + std::to_string(i);
    v.values.resize(dim);
    for (auto& x : v.values) x = static_cast<float>(gauss(rng));
    vectors.push_back(std::move(v));
    doc_ids.push_back("d" + std::to_string(i % 31));
  }
  return ragbench::VectorIndex::from_vectors(vectors, doc_ids);
}

void BM_IndexSearch(benchmark::State& state) {
  const auto rows = static_cast<std::size_t>(state.range(0));
  const auto index = build_index(rows, 64);
  const auto query = ragbench::deterministic_embed("benchmark query text", 64, 1);
  for (auto _ : state) {
    auto hits = index.search(query, 5);
    benchmark::DoNotOptimize(hits);
  }
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_IndexSearch)->RangeMultiplier(4)->Range(1 << 10, 1 << 16)->Complexity();

void BM_ChunkDocument(benchmark::State& state) {
  const ragbench::Document doc{"d", "", words(static_cast<std::size_t>(state.range(0))), {}};
  for (auto _ : state) {
    auto chunks = ragbench::chunk_document(doc, 1024, 256);
    benchmark::DoNotOptimize(chunks);
  }
}
BENCHMARK(BM_ChunkDocument)->Arg(4096)->Arg(32768);

void BM_NormalizeText(benchmark::State& state) {
  const std::string text = words(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) {
    auto out = ragbench::normalize_text(text);
    benchmark::DoNotOptimize(out);
  }
}
BENCHMARK(BM_NormalizeText)->Arg(1024)->Arg(16384);

void BM_DeterministicEmbed(benchmark::State& state) {
  const std::string text = words(256);
  for (auto _ : state) {
    auto v = ragbench::deterministic_embed(text, static_cast<std::size_t>(state.range(0)), 7);
    benchmark::DoNotOptimize(v);
  }
}
BENCHMARK(BM_DeterministicEmbed)->Arg(64)->Arg(1024);

}  // namespace

BENCHMARK_MAIN();
