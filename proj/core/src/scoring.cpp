#include "detox/scoring.hpp"

#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "detox/remote_scoring.hpp"
#include "detox/tokens.hpp"
#include "nlohmann/json.hpp"

namespace detox {

namespace {

struct AttributeNames {
  std::string_view snake;
  std::string_view api;
};

constexpr std::array<AttributeNames, kAttributeCount> kNames{{
    {"toxicity", "TOXICITY"},
    {"severe_toxicity", "SEVERE_TOXICITY"},
    {"identity_attack", "IDENTITY_ATTACK"},
    {"insult", "INSULT"},
    {"threat", "THREAT"},
    {"profanity", "PROFANITY"},
    {"sexually_explicit", "SEXUALLY_EXPLICIT"},
    {"flirtation", "FLIRTATION"},
}};

}  // namespace

const std::array<Attribute, kAttributeCount>& all_attributes() {
  static const std::array<Attribute, kAttributeCount> attrs = [] {
    std::array<Attribute, kAttributeCount> a{};
    for (std::size_t i = 0; i < kAttributeCount; ++i) {
      a[i] = static_cast<Attribute>(i);
    }
    return a;
  }();
  return attrs;
}

std::string_view attribute_name(Attribute attribute) {
  return kNames[static_cast<std::size_t>(attribute)].snake;
}

std::string_view attribute_api_name(Attribute attribute) {
  return kNames[static_cast<std::size_t>(attribute)].api;
}

std::optional<Attribute> attribute_from_name(std::string_view name) {
  for (std::size_t i = 0; i < kAttributeCount; ++i) {
    if (name == kNames[i].snake || name == kNames[i].api) {
      return static_cast<Attribute>(i);
    }
  }
  return std::nullopt;
}

void AttributeScores::validate() const {
  for (double v : values) {
    if (!(v >= 0.0 && v <= 1.0)) {
      throw std::runtime_error("attribute score out of [0,1]");
    }
  }
}

std::vector<Attribute> classify(const AttributeScores& scores,
                                double threshold) {
  if (!(threshold >= 0.0 && threshold <= 1.0)) {
    throw std::invalid_argument("threshold must be in [0,1]");
  }
  std::vector<Attribute> hits;
  for (Attribute a : all_attributes()) {
    if (scores[a] >= threshold) {
      hits.push_back(a);
    }
  }
  return hits;
}

void Lexicon::add_term(const std::string& phrase, Attribute attribute,
                       double weight) {
  if (!(weight > 0.0 && weight <= 1.0)) {
    throw std::invalid_argument("lexicon weight must be in (0,1]: '" + phrase +
                                "'");
  }
  Entry entry;
  entry.tokens = tokenize(phrase);
  entry.attribute = attribute;
  entry.weight = weight;
  if (entry.tokens.empty()) {
    throw std::invalid_argument("lexicon term tokenizes to nothing: '" +
                                phrase + "'");
  }
  for (const auto& existing : entries_) {
    if (existing.attribute == attribute && existing.tokens == entry.tokens) {
      throw std::invalid_argument("duplicate lexicon term: '" + phrase + "'");
    }
  }
  entries_.push_back(std::move(entry));
}

Lexicon Lexicon::parse(const std::string& json_text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(std::string("lexicon: invalid JSON: ") + e.what());
  }
  if (!doc.is_object()) {
    throw std::runtime_error("lexicon: top level must be an object");
  }
  Lexicon lexicon;
  // Fixed attribute order first, so entry order is stable regardless of the
  // file's key order.
  for (Attribute a : all_attributes()) {
    auto it = doc.find(std::string(attribute_name(a)));
    if (it == doc.end()) {
      continue;
    }
    if (!it->is_object()) {
      throw std::runtime_error("lexicon: attribute '" +
                               std::string(attribute_name(a)) +
                               "' must map phrases to weights");
    }
    // nlohmann objects iterate keys sorted, so this is deterministic.
    for (const auto& [phrase, weight] : it->items()) {
      if (!weight.is_number()) {
        throw std::runtime_error("lexicon: weight for '" + phrase +
                                 "' must be a number");
      }
      lexicon.add_term(phrase, a, weight.get<double>());
    }
  }
  for (const auto& [key, value] : doc.items()) {
    if (!attribute_from_name(key)) {
      throw std::runtime_error("lexicon: unknown attribute '" + key + "'");
    }
  }
  return lexicon;
}

Lexicon Lexicon::load_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw std::runtime_error("lexicon: cannot open " + path.string());
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse(buffer.str());
}

AttributeScores score_lexicon(const std::string& text, const Lexicon& lexicon) {
  const std::vector<std::string> tokens = tokenize(text);
  // survival[a] = prod over matched occurrences of (1 - weight)
  std::array<double, kAttributeCount> survival;
  survival.fill(1.0);
  for (const auto& entry : lexicon.entries()) {
    const std::size_t m = entry.tokens.size();
    if (m > tokens.size()) {
      continue;
    }
    for (std::size_t i = 0; i + m <= tokens.size(); ++i) {
      bool match = true;
      for (std::size_t j = 0; j < m; ++j) {
        if (tokens[i + j] != entry.tokens[j]) {
          match = false;
          break;
        }
      }
      if (match) {
        survival[static_cast<std::size_t>(entry.attribute)] *=
            1.0 - entry.weight;
      }
    }
  }
  AttributeScores scores;
  for (std::size_t i = 0; i < kAttributeCount; ++i) {
    scores.values[i] = 1.0 - survival[i];
  }
  return scores;
}

void ScorerConfig::validate() const {
  if (mode == ScorerMode::kLexicon) {
    if (lexicon_path.empty()) {
      throw std::invalid_argument("lexicon scorer requires a lexicon path");
    }
  } else {
    if (endpoint.empty()) {
      throw std::invalid_argument("remote scorer requires an endpoint");
    }
  }
  if (!(rate_limit > 0.0)) {
    throw std::invalid_argument("rate_limit must be > 0");
  }
  if (max_attempts < 1) {
    throw std::invalid_argument("max_attempts must be >= 1");
  }
}

std::unique_ptr<Scorer> make_scorer(const ScorerConfig& config) {
  config.validate();
  if (config.mode == ScorerMode::kLexicon) {
    return std::make_unique<LexiconScorer>(
        Lexicon::load_file(config.lexicon_path));
  }
  return std::make_unique<RemoteScorer>(config);
}

}  // namespace detox
