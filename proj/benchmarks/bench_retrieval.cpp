#include <random>

#include <benchmark/benchmark.h>

#include "destrank/bm25.hpp"
#include "destrank/dense.hpp"
#include "destrank/metrics.hpp"
#include "destrank/scoring.hpp"

using namespace destrank;

namespace {

Corpus synthetic_corpus(int destinations, int paragraphs, int vocab) {
  std::mt19937 rng(42);
  std::vector<double> weights(vocab);
  for (int i = 0; i < vocab; ++i) weights[i] = 1.0 / (i + 1);
  std::discrete_distribution<int> draw(weights.begin(), weights.end());
  std::vector<Destination> dests;
  for (int d = 0; d < destinations; ++d) {
    Destination dest{"d" + std::to_string(d), "City " + std::to_string(d), {}};
    for (int p = 0; p < paragraphs; ++p) {
      std::string text;
      for (int w = 0; w < 80; ++w) text += "t" + std::to_string(draw(rng)) + " ";
      dest.paragraphs.push_back({dest.id, static_cast<std::size_t>(p), text});
    }
    dests.push_back(std::move(dest));
  }
  return Corpus(std::move(dests));
}

const Corpus& corpus() {
  static const Corpus c = synthetic_corpus(774, 50, 20000);
  return c;
}

void BM_Bm25Build(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(sparse::Bm25Index::build(corpus()));
}
BENCHMARK(BM_Bm25Build)->Unit(benchmark::kMillisecond);

void BM_Bm25ScoreAll(benchmark::State& state) {
  static const auto index = sparse::Bm25Index::build(corpus());
  std::vector<std::string> query;
  for (int i = 0; i < state.range(0); ++i) query.push_back("t" + std::to_string(i * 7));
  for (auto _ : state) benchmark::DoNotOptimize(index.score_all(query));
}
BENCHMARK(BM_Bm25ScoreAll)->Arg(4)->Arg(40)->Arg(200)->Unit(benchmark::kMicrosecond);

void BM_RankFromScores(benchmark::State& state) {
  std::mt19937 rng(1);
  std::uniform_real_distribution<double> u(0.0, 10.0);
  std::vector<double> scores(corpus().total_paragraphs());
  for (auto& s : scores) s = u(rng);
  for (auto _ : state) {
    benchmark::DoNotOptimize(rank_from_scores("q", corpus(), scores, static_cast<int>(state.range(0))));
  }
}
BENCHMARK(BM_RankFromScores)->Arg(1)->Arg(13)->Arg(50)->Unit(benchmark::kMicrosecond);

void BM_Cosine(benchmark::State& state) {
  std::mt19937 rng(2);
  std::normal_distribution<float> g;
  std::vector<float> a(state.range(0)), b(state.range(0));
  for (auto& x : a) x = g(rng);
  for (auto& x : b) x = g(rng);
  const dense::Vector va(a), vb(b);
  for (auto _ : state) benchmark::DoNotOptimize(dense::cosine(va, vb));
}
BENCHMARK(BM_Cosine)->Arg(384)->Arg(768);

void BM_AveragePrecision(benchmark::State& state) {
  std::vector<std::string> ranking;
  for (int i = 0; i < 774; ++i) ranking.push_back("d" + std::to_string(i));
  std::set<std::string> relevant;
  for (int i = 0; i < 774; i += 9) relevant.insert("d" + std::to_string(i));
  for (auto _ : state) benchmark::DoNotOptimize(eval::average_precision_at_k(ranking, relevant, 50));
}
BENCHMARK(BM_AveragePrecision);

}  // namespace
BENCHMARK_MAIN();
