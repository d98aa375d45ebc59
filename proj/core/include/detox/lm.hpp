#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <span>
#include <vector>

#include "detox/tokens.hpp"

namespace detox {

// Normalized distribution over the token vocabulary: entries in [0,1],
// summing to 1 within 1e-9.
struct ProbDist {
  std::vector<double> probs;

  std::size_t size() const { return probs.size(); }
  double operator[](std::size_t i) const { return probs[i]; }

  void validate(double tolerance = 1e-9) const;  // throws on violation
};

// Count-based conditional model with add-k smoothing. Immutable once
// training is done; concurrent reads are safe.
class NGramModel {
 public:
  using ContextKey = std::vector<TokenId>;
  struct ContextCounts {
    std::map<TokenId, std::uint64_t> counts;
    std::uint64_t total = 0;
  };

  NGramModel(int order, double smoothing_k, Vocabulary vocab);

  // Counts every length-n window after left-padding with n-1 BOS tokens.
  void add_sequence(std::span<const TokenId> ids);

  //   p(w | c) = (counts[c][w] + k) / (total[c] + k * |V|)
  // Short contexts are BOS-padded, long ones truncated to the last n-1 ids;
  // unseen contexts yield the uniform smoothed distribution.
  ProbDist next_token_dist(std::span<const TokenId> context) const;

  int order() const { return order_; }
  double smoothing_k() const { return smoothing_k_; }
  const Vocabulary& vocab() const { return vocab_; }
  const std::map<ContextKey, ContextCounts>& contexts() const {
    return contexts_;
  }
  std::uint64_t count(std::span<const TokenId> context, TokenId target) const;
  std::uint64_t context_total(std::span<const TokenId> context) const;
  std::uint64_t tokens_seen() const { return tokens_seen_; }

  bool operator==(const NGramModel& other) const;

  // Versioned line-based format; round-trips counts exactly and the
  // smoothing constant bit-exactly (hex float), so reloaded models produce
  // bit-equal distributions.
  void save(std::ostream& out) const;
  void save_file(const std::filesystem::path& path) const;
  static NGramModel load(std::istream& in);
  static NGramModel load_file(const std::filesystem::path& path);

 private:
  ContextKey normalize_context(std::span<const TokenId> context) const;

  int order_;
  double smoothing_k_;
  Vocabulary vocab_;
  std::map<ContextKey, ContextCounts> contexts_;
  std::uint64_t tokens_seen_ = 0;
};

NGramModel train_ngram(const std::vector<TokenSequence>& corpus, int order,
                       double smoothing_k, Vocabulary vocab);

}  // namespace detox
