#include "detox/decoding.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "detox/log.hpp"
#include "nlohmann/json.hpp"

namespace detox {

std::vector<double> delta_p(const ProbDist& p_org, const ProbDist& p_dapt) {
  if (p_org.size() != p_dapt.size()) {
    throw std::invalid_argument("delta_p: distribution length mismatch");
  }
  std::vector<double> delta(p_org.size());
  for (std::size_t i = 0; i < delta.size(); ++i) {
    delta[i] = p_org[i] - p_dapt[i];
  }
  return delta;
}

double alpha(double x, double lambda) {
  if (lambda < 0.0) {
    throw std::invalid_argument("alpha: lambda must be >= 0");
  }
  return x >= 0.0 ? 1.0 : std::exp(lambda * x);
}

ProbDist rescale_dist(const ProbDist& p_org, const ProbDist& p_dapt,
                      double lambda) {
  if (p_org.size() != p_dapt.size()) {
    throw std::invalid_argument("rescale_dist: distribution length mismatch");
  }
  if (lambda < 0.0) {
    throw std::invalid_argument("rescale_dist: lambda must be >= 0");
  }
  const std::size_t n = p_org.size();

  // shift[w] = min(0, lambda * delta_p[w]), i.e. log alpha(delta_p[w]).
  std::vector<double> shift(n);
  bool any_suppressed = false;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = lambda * (p_org[i] - p_dapt[i]);
    shift[i] = d < 0.0 ? d : 0.0;
    any_suppressed = any_suppressed || shift[i] < 0.0;
  }
  if (!any_suppressed) {
    return p_org;  // alpha is identically 1: exact identity
  }

  // Degeneracy check on the unnormalized linear-space mass.
  double linear_total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    linear_total += p_org[i] * std::exp(shift[i]);
  }

  std::vector<double> log_mass(n);
  for (std::size_t i = 0; i < n; ++i) {
    log_mass[i] = std::log(p_org[i]) + shift[i];  // log(0) = -inf is fine
  }

  ProbDist out;
  out.probs.assign(n, 0.0);
  const std::size_t best = static_cast<std::size_t>(
      std::max_element(log_mass.begin(), log_mass.end()) - log_mass.begin());
  if (linear_total < 1e-300) {
    log_warn("rescale_dist: all mass suppressed, falling back to argmax");
    out.probs[best] = 1.0;
    return out;
  }

  // Log-space normalization with max subtraction.
  const double max_log = log_mass[best];
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    out.probs[i] = std::exp(log_mass[i] - max_log);
    total += out.probs[i];
  }
  for (std::size_t i = 0; i < n; ++i) {
    out.probs[i] /= total;
  }
  return out;
}

Strategy strategy_from_name(std::string_view name) {
  if (name == "greedy") {
    return Strategy::kGreedy;
  }
  if (name == "sample") {
    return Strategy::kSample;
  }
  throw std::invalid_argument("unknown strategy '" + std::string(name) +
                              "' (expected 'greedy' or 'sample')");
}

std::string_view strategy_name(Strategy strategy) {
  return strategy == Strategy::kGreedy ? "greedy" : "sample";
}

void DecayConfig::validate() const {
  if (lambda < 0.0) {
    throw std::invalid_argument("lambda must be >= 0");
  }
  if (max_new_tokens < 1) {
    throw std::invalid_argument("max_new_tokens must be >= 1");
  }
  if (top_k < 1) {
    throw std::invalid_argument("top_k must be >= 1");
  }
}

EnsembleDecoder::EnsembleDecoder(NGramModel m_org, NGramModel m_dapt,
                                 DecayConfig config)
    : m_org_(std::move(m_org)),
      m_dapt_(std::move(m_dapt)),
      config_(std::move(config)) {
  config_.validate();
  if (!(m_org_.vocab() == m_dapt_.vocab())) {
    throw std::invalid_argument("models must share a vocabulary");
  }
  if (config_.end_of_text) {
    const auto id = m_org_.vocab().find(*config_.end_of_text);
    if (!id) {
      throw std::invalid_argument("end_of_text token '" +
                                  *config_.end_of_text +
                                  "' is not in the vocabulary");
    }
    end_of_text_id_ = *id;
  }
}

ProbDist EnsembleDecoder::next_token_dist(
    std::span<const TokenId> context) const {
  return rescale_dist(m_org_.next_token_dist(context),
                      m_dapt_.next_token_dist(context), config_.lambda);
}

TokenId EnsembleDecoder::select(const ProbDist& dist,
                                std::mt19937_64& rng) const {
  if (config_.strategy == Strategy::kGreedy) {
    // max_element returns the first maximum: lowest token id wins ties.
    return static_cast<TokenId>(
        std::max_element(dist.probs.begin(), dist.probs.end()) -
        dist.probs.begin());
  }

  // Top-k sampling: keep the k most probable tokens (ties by lower id),
  // renormalize, draw once.
  const std::size_t k =
      std::min<std::size_t>(static_cast<std::size_t>(config_.top_k),
                            dist.size());
  std::vector<std::uint32_t> order(dist.size());
  std::iota(order.begin(), order.end(), 0);
  std::partial_sort(order.begin(),
                    order.begin() + static_cast<std::ptrdiff_t>(k),
                    order.end(), [&](std::uint32_t a, std::uint32_t b) {
                      if (dist.probs[a] != dist.probs[b]) {
                        return dist.probs[a] > dist.probs[b];
                      }
                      return a < b;
                    });
  double total = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    total += dist.probs[order[i]];
  }
  const double u =
      static_cast<double>(rng() >> 11) * 0x1.0p-53;  // uniform in [0,1)
  double cumulative = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    cumulative += dist.probs[order[i]] / total;
    if (u < cumulative) {
      return order[i];
    }
  }
  return order[k - 1];  // numerical shortfall: last candidate
}

TokenSequence EnsembleDecoder::generate(std::span<const TokenId> prompt) const {
  return generate(prompt, config_.seed);
}

TokenSequence EnsembleDecoder::generate(std::span<const TokenId> prompt,
                                        std::uint64_t seed) const {
  if (prompt.empty()) {
    throw std::invalid_argument("generate: prompt must be non-empty");
  }
  for (TokenId id : prompt) {
    if (id >= vocab().size()) {
      throw std::out_of_range("generate: prompt token id exceeds vocabulary");
    }
  }
  std::mt19937_64 rng(seed);
  TokenSequence context(prompt.begin(), prompt.end());
  TokenSequence continuation;
  continuation.reserve(static_cast<std::size_t>(config_.max_new_tokens));
  for (int step = 0; step < config_.max_new_tokens; ++step) {
    const ProbDist dist = next_token_dist(context);
    const TokenId token = select(dist, rng);
    if (end_of_text_id_ && token == *end_of_text_id_) {
      break;
    }
    continuation.push_back(token);
    context.push_back(token);
  }
  return continuation;
}

DecoderSpec DecoderSpec::parse(const std::string& json_text,
                               const std::filesystem::path& base_dir) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(std::string("decoder config: invalid JSON: ") +
                             e.what());
  }
  if (!doc.is_object()) {
    throw std::runtime_error("decoder config: top level must be an object");
  }
  DecoderSpec spec;
  try {
    const auto resolve = [&](const std::string& raw) {
      std::filesystem::path p(raw);
      return p.is_absolute() ? p : base_dir / p;
    };
    spec.m_org = resolve(doc.at("m_org").get<std::string>());
    spec.m_dapt = resolve(doc.at("m_dapt").get<std::string>());
    if (doc.contains("lambda")) {
      spec.config.lambda = doc["lambda"].get<double>();
    }
    if (doc.contains("max_new_tokens")) {
      spec.config.max_new_tokens = doc["max_new_tokens"].get<int>();
    }
    if (doc.contains("strategy")) {
      spec.config.strategy =
          strategy_from_name(doc["strategy"].get<std::string>());
    }
    if (doc.contains("top_k")) {
      spec.config.top_k = doc["top_k"].get<int>();
    }
    if (doc.contains("seed")) {
      spec.config.seed = doc["seed"].get<std::uint64_t>();
    }
    if (doc.contains("end_of_text")) {
      spec.config.end_of_text = doc["end_of_text"].get<std::string>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(std::string("decoder config: ") + e.what());
  }
  spec.config.validate();
  return spec;
}

DecoderSpec DecoderSpec::load_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw std::runtime_error("decoder config: cannot open " + path.string());
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse(buffer.str(), path.parent_path());
}

EnsembleDecoder make_decoder(const std::filesystem::path& m_org_path,
                             const std::filesystem::path& m_dapt_path,
                             const DecayConfig& config) {
  NGramModel m_org = NGramModel::load_file(m_org_path);
  NGramModel m_dapt = NGramModel::load_file(m_dapt_path);
  return EnsembleDecoder(std::move(m_org), std::move(m_dapt), config);
}

EnsembleDecoder make_decoder(const DecoderSpec& spec) {
  return make_decoder(spec.m_org, spec.m_dapt, spec.config);
}

std::uint64_t derive_seed(std::uint64_t config_seed,
                          std::string_view prompt_id) {
  // FNV-1a over the config seed's bytes, then the prompt id's bytes.
  std::uint64_t hash = 14695981039346656037ULL;
  const auto mix = [&hash](unsigned char byte) {
    hash ^= byte;
    hash *= 1099511628211ULL;
  };
  for (int i = 0; i < 8; ++i) {
    mix(static_cast<unsigned char>(config_seed >> (8 * i)));
  }
  for (char c : prompt_id) {
    mix(static_cast<unsigned char>(c));
  }
  return hash;
}

}  // namespace detox
