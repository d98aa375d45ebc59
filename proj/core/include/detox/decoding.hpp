#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "detox/lm.hpp"

namespace detox {

// Entrywise p_org - p_dapt; the per-token preference of the adapted model.
std::vector<double> delta_p(const ProbDist& p_org, const ProbDist& p_dapt);

// Scaling function: 1 for x >= 0, e^(lambda*x) for x < 0.
double alpha(double x, double lambda);

// q[w] proportional to p_org[w] * alpha(delta_p[w], lambda), renormalized.
// Computed in log space so lambda = 100 cannot underflow the result; if the
// total unnormalized mass still degenerates (< 1e-300), falls back to a
// one-hot argmax distribution and warns.
ProbDist rescale_dist(const ProbDist& p_org, const ProbDist& p_dapt,
                      double lambda);

enum class Strategy { kGreedy, kSample };

Strategy strategy_from_name(std::string_view name);  // "greedy" | "sample"
std::string_view strategy_name(Strategy strategy);

struct DecayConfig {
  double lambda = 100.0;
  int max_new_tokens = 20;
  Strategy strategy = Strategy::kSample;
  int top_k = 40;
  std::uint64_t seed = 0;
  // Generation stops (without emitting it) when this token is drawn.
  std::optional<std::string> end_of_text;

  void validate() const;  // throws std::invalid_argument
};

// Decoding-time ensemble of a base model and a toxicity-adapted model over a
// shared vocabulary. Immutable after construction; generate() owns all its
// mutable state, so concurrent calls are race-free.
class EnsembleDecoder {
 public:
  EnsembleDecoder(NGramModel m_org, NGramModel m_dapt, DecayConfig config);

  // Appends up to max_new_tokens tokens autoregressively and returns only
  // the continuation. The seedless overload draws from config.seed.
  TokenSequence generate(std::span<const TokenId> prompt) const;
  TokenSequence generate(std::span<const TokenId> prompt,
                         std::uint64_t seed) const;

  // Rescaled next-token distribution for an arbitrary context.
  ProbDist next_token_dist(std::span<const TokenId> context) const;

  const NGramModel& m_org() const { return m_org_; }
  const NGramModel& m_dapt() const { return m_dapt_; }
  const DecayConfig& config() const { return config_; }
  const Vocabulary& vocab() const { return m_org_.vocab(); }

 private:
  TokenId select(const ProbDist& dist, std::mt19937_64& rng) const;

  NGramModel m_org_;
  NGramModel m_dapt_;
  DecayConfig config_;
  std::optional<TokenId> end_of_text_id_;
};

// Decoder config file (JSON): {m_org, m_dapt, lambda, max_new_tokens,
// strategy, top_k, seed, end_of_text}; model paths resolve relative to the
// config file's directory.
struct DecoderSpec {
  std::filesystem::path m_org;
  std::filesystem::path m_dapt;
  DecayConfig config;

  static DecoderSpec parse(const std::string& json_text,
                           const std::filesystem::path& base_dir);
  static DecoderSpec load_file(const std::filesystem::path& path);
};

EnsembleDecoder make_decoder(const std::filesystem::path& m_org_path,
                             const std::filesystem::path& m_dapt_path,
                             const DecayConfig& config);
EnsembleDecoder make_decoder(const DecoderSpec& spec);

// Stable per-prompt seed: FNV-1a over the run seed and the prompt id, so
// generations are independent of prompt order and worker scheduling.
std::uint64_t derive_seed(std::uint64_t config_seed, std::string_view prompt_id);

}  // namespace detox
