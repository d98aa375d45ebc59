#include "detox/tokens.hpp"

#include <algorithm>
#include <cctype>
#include <stdexcept>

namespace detox {

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> out;
  std::string word;
  auto flush = [&] {
    if (!word.empty()) {
      out.push_back(std::move(word));
      word.clear();
    }
  };
  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (std::isspace(c)) {
      flush();
    } else if (c < 0x80 && std::ispunct(c)) {
      flush();
      out.emplace_back(1, ch);
    } else {
      word.push_back(c < 0x80 ? static_cast<char>(std::tolower(c)) : ch);
    }
  }
  flush();
  return out;
}

std::string detokenize(std::span<const std::string> tokens) {
  std::string out;
  for (const auto& tok : tokens) {
    if (!out.empty()) {
      out.push_back(' ');
    }
    out += tok;
  }
  return out;
}

Vocabulary::Vocabulary() {
  add(std::string(kBosToken));
  add(std::string(kUnkToken));
}

TokenId Vocabulary::add(std::string token) {
  auto it = index_.find(token);
  if (it != index_.end()) {
    return it->second;
  }
  const auto id = static_cast<TokenId>(tokens_.size());
  index_.emplace(token, id);
  tokens_.push_back(std::move(token));
  return id;
}

std::optional<TokenId> Vocabulary::find(const std::string& token) const {
  auto it = index_.find(token);
  if (it == index_.end()) {
    return std::nullopt;
  }
  return it->second;
}

TokenId Vocabulary::id_or_unk(const std::string& token) const {
  auto it = index_.find(token);
  return it == index_.end() ? kUnkId : it->second;
}

const std::string& Vocabulary::token(TokenId id) const {
  if (id >= tokens_.size()) {
    throw std::out_of_range("token id out of range");
  }
  return tokens_[id];
}

TokenSequence Vocabulary::encode(std::span<const std::string> words) const {
  TokenSequence ids;
  ids.reserve(words.size());
  for (const auto& w : words) {
    ids.push_back(id_or_unk(w));
  }
  return ids;
}

std::string Vocabulary::decode(std::span<const TokenId> ids) const {
  std::string out;
  for (TokenId id : ids) {
    if (!out.empty()) {
      out.push_back(' ');
    }
    out += token(id);
  }
  return out;
}

void VocabBuilder::add_sequence(std::span<const std::string> words) {
  ++sequences_;
  for (const auto& w : words) {
    ++freq_[w];
    ++instances_;
  }
}

Vocabulary VocabBuilder::build(std::size_t max_size) const {
  if (max_size < 2) {
    throw std::invalid_argument("max_size must be >= 2");
  }
  if (sequences_ == 0) {
    throw std::runtime_error("empty corpus");
  }
  Vocabulary vocab;

  std::vector<std::pair<std::string_view, std::uint64_t>> candidates;
  candidates.reserve(freq_.size());
  for (const auto& [token, count] : freq_) {
    if (token == Vocabulary::kBosToken || token == Vocabulary::kUnkToken) {
      continue;  // reserved, never consumes a slot
    }
    candidates.emplace_back(token, count);
  }
  std::sort(candidates.begin(), candidates.end(),
            [](const auto& a, const auto& b) {
              if (a.second != b.second) {
                return a.second > b.second;
              }
              return a.first < b.first;
            });

  for (const auto& [token, count] : candidates) {
    if (vocab.size() >= max_size) {
      break;
    }
    vocab.add(std::string(token));
  }
  return vocab;
}

Vocabulary build_vocab(const std::vector<std::vector<std::string>>& corpus,
                       std::size_t max_size) {
  VocabBuilder builder;
  for (const auto& seq : corpus) {
    builder.add_sequence(seq);
  }
  return builder.build(max_size);
}

}  // namespace detox
