#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace detox {

using TokenId = std::uint32_t;
using TokenSequence = std::vector<TokenId>;

// Lowercasing whitespace tokenizer; punctuation characters split off as
// single-character tokens ("Hello, world!" -> ["hello", ",", "world", "!"]).
std::vector<std::string> tokenize(std::string_view text);

// Joins tokens with single spaces. Lossy with respect to the original
// spacing, which is fine for scorers built on tokenize().
std::string detokenize(std::span<const std::string> tokens);

// Dense token-id table. Ids are assigned in insertion order; id 0 is the
// begin-of-sequence token and id 1 the unknown token.
class Vocabulary {
 public:
  static constexpr TokenId kBosId = 0;
  static constexpr TokenId kUnkId = 1;
  static constexpr std::string_view kBosToken = "<s>";
  static constexpr std::string_view kUnkToken = "<unk>";

  Vocabulary();

  // Returns the existing id when the token is already present.
  TokenId add(std::string token);

  std::optional<TokenId> find(const std::string& token) const;
  TokenId id_or_unk(const std::string& token) const;
  const std::string& token(TokenId id) const;
  std::size_t size() const { return tokens_.size(); }
  const std::vector<std::string>& tokens() const { return tokens_; }

  TokenSequence encode(std::span<const std::string> words) const;
  std::string decode(std::span<const TokenId> ids) const;

  bool operator==(const Vocabulary& other) const {
    return tokens_ == other.tokens_;
  }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, TokenId> index_;
};

// Streaming frequency counter feeding Vocabulary construction: most frequent
// tokens win the slots after the reserved ones, ties break lexicographically.
class VocabBuilder {
 public:
  void add_sequence(std::span<const std::string> words);

  std::uint64_t sequences_seen() const { return sequences_; }
  std::uint64_t token_instances() const { return instances_; }
  std::uint64_t distinct_tokens() const { return freq_.size(); }

  // Throws std::runtime_error("empty corpus") when no sequence was added and
  // std::invalid_argument when max_size < 2.
  Vocabulary build(std::size_t max_size) const;

 private:
  std::unordered_map<std::string, std::uint64_t> freq_;
  std::uint64_t sequences_ = 0;
  std::uint64_t instances_ = 0;
};

Vocabulary build_vocab(const std::vector<std::vector<std::string>>& corpus,
                       std::size_t max_size);

}  // namespace detox
