#include "detox/lm.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

namespace detox {

namespace {

std::string format_hex_double(double value) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%a", value);
  return buf;
}

double parse_hex_double(const std::string& text) {
  char* end = nullptr;
  const double value = std::strtod(text.c_str(), &end);
  if (end == text.c_str() || *end != '\0') {
    throw std::runtime_error("model load: bad float '" + text + "'");
  }
  return value;
}

[[noreturn]] void load_error(const std::string& what) {
  throw std::runtime_error("model load: " + what);
}

}  // namespace

void ProbDist::validate(double tolerance) const {
  if (probs.empty()) {
    throw std::runtime_error("ProbDist: empty");
  }
  double sum = 0.0;
  for (double p : probs) {
    if (!(p >= 0.0 && p <= 1.0)) {
      throw std::runtime_error("ProbDist: entry out of [0,1]");
    }
    sum += p;
  }
  if (std::abs(sum - 1.0) > tolerance) {
    throw std::runtime_error("ProbDist: sum deviates from 1 by more than tolerance");
  }
}

NGramModel::NGramModel(int order, double smoothing_k, Vocabulary vocab)
    : order_(order), smoothing_k_(smoothing_k), vocab_(std::move(vocab)) {
  if (order_ < 1) {
    throw std::invalid_argument("order must be >= 1");
  }
  if (!(smoothing_k_ > 0.0)) {
    throw std::invalid_argument("smoothing_k must be > 0");
  }
}

void NGramModel::add_sequence(std::span<const TokenId> ids) {
  for (TokenId id : ids) {
    if (id >= vocab_.size()) {
      throw std::out_of_range("token id exceeds vocabulary");
    }
  }
  const std::size_t pad = static_cast<std::size_t>(order_) - 1;
  TokenSequence padded;
  padded.reserve(pad + ids.size());
  padded.assign(pad, Vocabulary::kBosId);
  padded.insert(padded.end(), ids.begin(), ids.end());

  // one window per original token
  for (std::size_t i = 0; i + pad < padded.size(); ++i) {
    ContextKey key(padded.begin() + static_cast<std::ptrdiff_t>(i),
                   padded.begin() + static_cast<std::ptrdiff_t>(i + pad));
    auto& entry = contexts_[key];
    ++entry.counts[padded[i + pad]];
    ++entry.total;
    ++tokens_seen_;
  }
}

NGramModel::ContextKey NGramModel::normalize_context(
    std::span<const TokenId> context) const {
  const std::size_t want = static_cast<std::size_t>(order_) - 1;
  ContextKey key;
  key.reserve(want);
  if (context.size() >= want) {
    key.assign(context.end() - static_cast<std::ptrdiff_t>(want),
               context.end());
  } else {
    key.assign(want - context.size(), Vocabulary::kBosId);
    key.insert(key.end(), context.begin(), context.end());
  }
  return key;
}

ProbDist NGramModel::next_token_dist(std::span<const TokenId> context) const {
  const auto key = normalize_context(context);
  const std::size_t v = vocab_.size();

  const ContextCounts* cc = nullptr;
  if (auto it = contexts_.find(key); it != contexts_.end()) {
    cc = &it->second;
  }
  const double total = cc ? static_cast<double>(cc->total) : 0.0;
  const double denom = total + smoothing_k_ * static_cast<double>(v);

  ProbDist dist;
  dist.probs.assign(v, smoothing_k_ / denom);
  if (cc) {
    for (const auto& [token, count] : cc->counts) {
      dist.probs[token] = (static_cast<double>(count) + smoothing_k_) / denom;
    }
  }
  return dist;
}

std::uint64_t NGramModel::count(std::span<const TokenId> context,
                                TokenId target) const {
  const auto key = normalize_context(context);
  auto it = contexts_.find(key);
  if (it == contexts_.end()) {
    return 0;
  }
  auto jt = it->second.counts.find(target);
  return jt == it->second.counts.end() ? 0 : jt->second;
}

std::uint64_t NGramModel::context_total(
    std::span<const TokenId> context) const {
  const auto key = normalize_context(context);
  auto it = contexts_.find(key);
  return it == contexts_.end() ? 0 : it->second.total;
}

bool NGramModel::operator==(const NGramModel& other) const {
  if (order_ != other.order_ || smoothing_k_ != other.smoothing_k_ ||
      !(vocab_ == other.vocab_) || tokens_seen_ != other.tokens_seen_) {
    return false;
  }
  if (contexts_.size() != other.contexts_.size()) {
    return false;
  }
  auto a = contexts_.begin();
  auto b = other.contexts_.begin();
  for (; a != contexts_.end(); ++a, ++b) {
    if (a->first != b->first || a->second.total != b->second.total ||
        a->second.counts != b->second.counts) {
      return false;
    }
  }
  return true;
}

void NGramModel::save(std::ostream& out) const {
  out << "detoxlm 1\n";
  out << "order " << order_ << "\n";
  out << "k " << format_hex_double(smoothing_k_) << "\n";
  out << "vocab " << vocab_.size() << "\n";
  for (const auto& token : vocab_.tokens()) {
    out << token << "\n";
  }
  std::uint64_t entries = 0;
  for (const auto& [key, cc] : contexts_) {
    entries += cc.counts.size();
  }
  out << "ngrams " << entries << "\n";
  for (const auto& [key, cc] : contexts_) {
    for (const auto& [token, count] : cc.counts) {
      for (TokenId id : key) {
        out << id << ' ';
      }
      out << token << ' ' << count << "\n";
    }
  }
  if (!out) {
    throw std::runtime_error("model save: write failed");
  }
}

void NGramModel::save_file(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw std::runtime_error("model save: cannot open " + path.string());
  }
  save(out);
}

NGramModel NGramModel::load(std::istream& in) {
  std::string line;
  auto next_line = [&](const char* what) -> std::string& {
    if (!std::getline(in, line)) {
      load_error(std::string("unexpected end of file reading ") + what);
    }
    if (!line.empty() && line.back() == '\r') {
      line.pop_back();
    }
    return line;
  };

  if (next_line("header") != "detoxlm 1") {
    load_error("bad magic, expected 'detoxlm 1'");
  }

  auto read_field = [&](const char* name) -> std::string {
    next_line(name);
    const std::string prefix = std::string(name) + " ";
    if (line.rfind(prefix, 0) != 0) {
      load_error(std::string("expected '") + name + "' line");
    }
    return line.substr(prefix.size());
  };

  const int order = std::stoi(read_field("order"));
  const double k = parse_hex_double(read_field("k"));
  const std::size_t vocab_size = std::stoul(read_field("vocab"));
  if (vocab_size < 2) {
    load_error("vocabulary too small");
  }

  Vocabulary vocab;
  for (std::size_t i = 0; i < vocab_size; ++i) {
    next_line("vocab entry");
    if (i == 0 && line != Vocabulary::kBosToken) {
      load_error("first vocab entry must be the BOS token");
    }
    if (i == 1 && line != Vocabulary::kUnkToken) {
      load_error("second vocab entry must be the UNK token");
    }
    if (i >= 2) {
      vocab.add(line);
    }
  }
  if (vocab.size() != vocab_size) {
    load_error("duplicate vocab entries");
  }

  NGramModel model(order, k, std::move(vocab));
  const std::uint64_t entries = std::stoull(read_field("ngrams"));
  const std::size_t ctx_len = static_cast<std::size_t>(order) - 1;
  for (std::uint64_t i = 0; i < entries; ++i) {
    std::istringstream fields(next_line("ngram entry"));
    ContextKey key(ctx_len);
    for (std::size_t j = 0; j < ctx_len; ++j) {
      if (!(fields >> key[j])) {
        load_error("truncated ngram entry");
      }
      if (key[j] >= model.vocab_.size()) {
        load_error("ngram context id out of vocabulary");
      }
    }
    TokenId target = 0;
    std::uint64_t count = 0;
    if (!(fields >> target >> count)) {
      load_error("truncated ngram entry");
    }
    if (target >= model.vocab_.size()) {
      load_error("ngram target out of vocabulary");
    }
    auto& cc = model.contexts_[key];
    cc.counts[target] += count;
    cc.total += count;
    model.tokens_seen_ += count;
  }
  return model;
}

NGramModel NGramModel::load_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw std::runtime_error("model load: cannot open " + path.string());
  }
  return load(in);
}

NGramModel train_ngram(const std::vector<TokenSequence>& corpus, int order,
                       double smoothing_k, Vocabulary vocab) {
  NGramModel model(order, smoothing_k, std::move(vocab));
  for (const auto& seq : corpus) {
    model.add_sequence(seq);
  }
  return model;
}

}  // namespace detox
