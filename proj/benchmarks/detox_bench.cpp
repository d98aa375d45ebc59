#include <benchmark/benchmark.h>

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "detox/corpus.hpp"
#include "detox/decoding.hpp"
#include "detox/lm.hpp"
#include "detox/scoring.hpp"
#include "detox/tokens.hpp"

namespace {

double u01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

detox::ProbDist random_dist(std::mt19937_64& rng, std::size_t n) {
  std::vector<double> weights(n);
  double sum = 0.0;
  for (double& w : weights) {
    w = u01(rng) + 1e-9;
    sum += w;
  }
  for (double& w : weights) w /= sum;
  return detox::ProbDist{std::move(weights)};
}

// Synthetic training corpus: `sequences` sentences of `length` tokens over a
// `vocab_words`-word vocabulary.
struct Corpus {
  detox::Vocabulary vocab;
  std::vector<detox::TokenSequence> sequences;
};

Corpus make_corpus(std::size_t sequences, std::size_t length,
                   std::size_t vocab_words) {
  std::mt19937_64 rng(12345);
  Corpus corpus;
  for (std::size_t w = 0; w < vocab_words; ++w) {
    corpus.vocab.add("w" + std::to_string(w));
  }
  corpus.sequences.resize(sequences);
  for (auto& sequence : corpus.sequences) {
    sequence.resize(length);
    for (auto& id : sequence) {
      id = static_cast<detox::TokenId>(2 + rng() % vocab_words);
    }
  }
  return corpus;
}

void BM_RescaleDist(benchmark::State& state) {
  std::mt19937_64 rng(42);
  const std::size_t n = static_cast<std::size_t>(state.range(0));
  const detox::ProbDist p_org = random_dist(rng, n);
  const detox::ProbDist p_dapt = random_dist(rng, n);
  for (auto _ : state) {
    benchmark::DoNotOptimize(detox::rescale_dist(p_org, p_dapt, 100.0));
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations()) *
                          static_cast<std::int64_t>(n));
}
BENCHMARK(BM_RescaleDist)->Arg(64)->Arg(1024)->Arg(16384);

// The fast path: nothing suppressed, the base distribution is returned as-is.
void BM_RescaleIdentity(benchmark::State& state) {
  std::mt19937_64 rng(42);
  const detox::ProbDist p_org = random_dist(rng, 1024);
  for (auto _ : state) {
    benchmark::DoNotOptimize(detox::rescale_dist(p_org, p_org, 100.0));
  }
}
BENCHMARK(BM_RescaleIdentity);

void BM_TrainTrigram(benchmark::State& state) {
  const Corpus corpus =
      make_corpus(static_cast<std::size_t>(state.range(0)), 16, 64);
  std::uint64_t tokens = 0;
  for (auto _ : state) {
    const detox::NGramModel model =
        detox::train_ngram(corpus.sequences, 3, 0.1, corpus.vocab);
    tokens += model.tokens_seen();
    benchmark::DoNotOptimize(tokens);
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(tokens));
}
BENCHMARK(BM_TrainTrigram)->Arg(100)->Arg(1000);

void BM_NextTokenDist(benchmark::State& state) {
  const Corpus corpus = make_corpus(500, 16, 64);
  const detox::NGramModel model =
      detox::train_ngram(corpus.sequences, 3, 0.1, corpus.vocab);
  const detox::TokenSequence context = {corpus.sequences[0][0],
                                        corpus.sequences[0][1]};
  for (auto _ : state) {
    benchmark::DoNotOptimize(model.next_token_dist(context));
  }
}
BENCHMARK(BM_NextTokenDist);

void BM_LexiconScore(benchmark::State& state) {
  detox::Lexicon lexicon;
  lexicon.add_term("grubnix", detox::Attribute::kToxicity, 0.6);
  lexicon.add_term("smordle", detox::Attribute::kToxicity, 0.5);
  lexicon.add_term("vexxar", detox::Attribute::kInsult, 0.7);
  lexicon.add_term("cold wind", detox::Attribute::kThreat, 0.4);

  std::string text;
  for (int i = 0; i < 40; ++i) {
    text += "the quiet meadow rests beside a grubnix and a cold wind ";
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(detox::score_lexicon(text, lexicon));
  }
  state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations()) *
                          static_cast<std::int64_t>(text.size()));
}
BENCHMARK(BM_LexiconScore);

void BM_NearestRankPercentile(benchmark::State& state) {
  std::mt19937_64 rng(7);
  std::vector<double> scores(static_cast<std::size_t>(state.range(0)));
  for (double& s : scores) s = u01(rng);
  for (auto _ : state) {
    benchmark::DoNotOptimize(detox::nearest_rank_percentile(scores, 98));
  }
}
BENCHMARK(BM_NearestRankPercentile)->Arg(10000)->Arg(100000);

void BM_PartitionByPercentile(benchmark::State& state) {
  std::mt19937_64 rng(7);
  std::vector<detox::ScoredDocument> scored(10000);
  for (std::size_t i = 0; i < scored.size(); ++i) {
    scored[i].document.id = "d" + std::to_string(i);
    scored[i].document.text = "text";
    scored[i].scores[detox::Attribute::kToxicity] = u01(rng);
  }
  const detox::PartitionSpec spec = detox::PartitionSpec::parse("ge:98");
  for (auto _ : state) {
    benchmark::DoNotOptimize(detox::partition_by_percentile(scored, spec));
  }
}
BENCHMARK(BM_PartitionByPercentile);

void BM_Generate(benchmark::State& state) {
  const Corpus corpus = make_corpus(500, 16, 64);
  const detox::NGramModel base =
      detox::train_ngram(corpus.sequences, 3, 0.1, corpus.vocab);

  // Adapted model: trained on a tenth of the corpus, so the two
  // distributions genuinely differ and the suppression path runs.
  std::vector<detox::TokenSequence> adapted_corpus(
      corpus.sequences.begin(), corpus.sequences.begin() + 50);
  const detox::NGramModel adapted =
      detox::train_ngram(adapted_corpus, 3, 0.1, corpus.vocab);

  detox::DecayConfig config;
  config.lambda = 100.0;
  config.max_new_tokens = 20;
  config.strategy = detox::Strategy::kSample;
  config.seed = 11;
  const detox::EnsembleDecoder decoder(base, adapted, config);
  const detox::TokenSequence prompt = {corpus.sequences[0][0],
                                       corpus.sequences[0][1]};

  std::uint64_t seed = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(decoder.generate(prompt, ++seed));
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations()) * 20);
}
BENCHMARK(BM_Generate);

void BM_Tokenize(benchmark::State& state) {
  std::string text;
  for (int i = 0; i < 50; ++i) {
    text += "The quick brown fox, startled, jumps over the lazy dog! ";
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(detox::tokenize(text));
  }
  state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations()) *
                          static_cast<std::int64_t>(text.size()));
}
BENCHMARK(BM_Tokenize);

}  // namespace

BENCHMARK_MAIN();
