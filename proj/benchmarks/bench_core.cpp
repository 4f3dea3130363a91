#include <map>

#include <benchmark/benchmark.h>

#include "charsoft/centroid.hpp"
#include "charsoft/embed.hpp"
#include "charsoft/loss.hpp"
#include "charsoft/pipeline.hpp"
#include "charsoft/recognizer.hpp"
#include "charsoft/rng.hpp"
#include "charsoft/softlabel.hpp"

using namespace charsoft;

namespace {

const EmbeddingSet& corpus_embeddings(std::size_t words) {
  static std::map<std::size_t, EmbeddingSet> cache;
  auto it = cache.find(words);
  if (it == cache.end()) {
    it = cache.emplace(words, synth_embed(demo_words(words, 1), default_vocab(), SynthParams{64, 1, 0.05, 2})).first;
  }
  return it->second;
}

Eigen::MatrixXd gaussian(Rng& rng, Eigen::Index rows, Eigen::Index cols) {
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.normal();
  return m;
}

}  // namespace

static void BM_SynthEmbed(benchmark::State& state) {
  const WordList words = demo_words(static_cast<std::size_t>(state.range(0)), 1);
  const CharVocab vocab = default_vocab();
  for (auto _ : state) benchmark::DoNotOptimize(synth_embed(words, vocab, SynthParams{64, 1, 0.05, 2}));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_SynthEmbed)->Arg(500)->Arg(5000);

static void BM_EstimateCentroids(benchmark::State& state) {
  const EmbeddingSet& set = corpus_embeddings(static_cast<std::size_t>(state.range(0)));
  const CharVocab vocab = default_vocab();
  for (auto _ : state) benchmark::DoNotOptimize(estimate_centroids(set, vocab));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(set.total_occurrences()));
}
BENCHMARK(BM_EstimateCentroids)->Arg(500)->Arg(5000);

static void BM_GenerateSoftLabels(benchmark::State& state) {
  const EmbeddingSet& set = corpus_embeddings(static_cast<std::size_t>(state.range(0)));
  const CentroidMatrix w = estimate_centroids(set, default_vocab());
  for (auto _ : state) benchmark::DoNotOptimize(generate_softlabels(set, w, {0.85, 0.1, true}));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(set.total_occurrences()));
}
BENCHMARK(BM_GenerateSoftLabels)->Arg(500)->Arg(5000);

static void BM_KlLossAndGrad(benchmark::State& state) {
  Rng rng(1);
  const Eigen::Index k = 39, n = state.range(0);
  const Eigen::MatrixXd logits = gaussian(rng, k, n);
  Eigen::MatrixXd targets = gaussian(rng, k, n).cwiseAbs();
  targets = targets.array().rowwise() / targets.colwise().sum().array();
  const std::vector<bool> mask(static_cast<std::size_t>(n), true);
  for (auto _ : state) {
    benchmark::DoNotOptimize(kl_loss(targets, logits, mask));
    benchmark::DoNotOptimize(kl_loss_grad(targets, logits, mask));
  }
  state.SetItemsProcessed(state.iterations() * n);
}
BENCHMARK(BM_KlLossAndGrad)->Arg(11)->Arg(256);

static void BM_RecognizerForwardBackward(benchmark::State& state) {
  const std::size_t hidden = static_cast<std::size_t>(state.range(0));
  const CharVocab vocab = default_vocab();
  const GlyphBank bank(vocab, GlyphBankParams{32, 0.1, 0.05, {{'o', '0'}}, 3});
  const Dataset data = make_dataset(WordList{"recognize"}, vocab, bank, 1, 4);
  const RecognizerParams params = RecognizerParams::random(32, hidden, vocab.k(), 5);
  for (auto _ : state) {
    RecognizerParams grad = RecognizerParams::zeros(32, hidden, vocab.k());
    benchmark::DoNotOptimize(sample_loss_and_grad(params, data.samples[0], {}, true, vocab.eos(), &grad));
  }
}
BENCHMARK(BM_RecognizerForwardBackward)->Arg(32)->Arg(64)->Arg(128);

static void BM_TrainEpoch(benchmark::State& state) {
  RunConfig cfg;
  cfg.train.epochs = 1;
  const Corpus corpus = build_corpus(cfg);
  const Dataset data = build_dataset(cfg, corpus);
  for (auto _ : state) benchmark::DoNotOptimize(train(cfg.train, data, cfg.vocab(), nullptr));
}
BENCHMARK(BM_TrainEpoch)->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();
