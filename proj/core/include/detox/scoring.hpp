#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace detox {

// The fixed, ordered attribute set. Order is stable across all reports and
// serializations.
enum class Attribute : std::size_t {
  kToxicity = 0,
  kSevereToxicity,
  kIdentityAttack,
  kInsult,
  kThreat,
  kProfanity,
  kSexuallyExplicit,
  kFlirtation,
};

inline constexpr std::size_t kAttributeCount = 8;

const std::array<Attribute, kAttributeCount>& all_attributes();

// Snake-case name used in files and reports, e.g. "severe_toxicity".
std::string_view attribute_name(Attribute attribute);

// Wire name used by the remote service, e.g. "SEVERE_TOXICITY".
std::string_view attribute_api_name(Attribute attribute);

// Accepts either the snake-case or the wire name.
std::optional<Attribute> attribute_from_name(std::string_view name);

struct AttributeScores {
  std::array<double, kAttributeCount> values{};

  double& operator[](Attribute a) {
    return values[static_cast<std::size_t>(a)];
  }
  double operator[](Attribute a) const {
    return values[static_cast<std::size_t>(a)];
  }
  double toxicity() const { return (*this)[Attribute::kToxicity]; }

  // Throws if any entry falls outside [0,1].
  void validate() const;

  bool operator==(const AttributeScores&) const = default;
};

// Attributes whose score is >= threshold (inclusive), in attribute order.
std::vector<Attribute> classify(const AttributeScores& scores,
                                double threshold);

// Deterministic lexicon-based scorer. Each entry is a lowercase phrase
// (one or more tokens) with a weight in (0,1] for one attribute; every
// occurrence in a text contributes a factor to a saturating product:
//   score(a) = 1 - prod over occurrences (1 - weight).
class Lexicon {
 public:
  struct Entry {
    std::vector<std::string> tokens;  // tokenized phrase, length >= 1
    Attribute attribute;
    double weight;  // in (0,1]
  };

  void add_term(const std::string& phrase, Attribute attribute, double weight);

  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  const std::vector<Entry>& entries() const { return entries_; }

  // JSON object: {"<attribute>": {"<phrase>": weight, ...}, ...}
  static Lexicon parse(const std::string& json_text);
  static Lexicon load_file(const std::filesystem::path& path);

 private:
  std::vector<Entry> entries_;
};

AttributeScores score_lexicon(const std::string& text, const Lexicon& lexicon);

// Common scorer interface; implementations must be safe for concurrent calls.
class Scorer {
 public:
  virtual ~Scorer() = default;
  virtual AttributeScores score(const std::string& text) = 0;
};

class LexiconScorer final : public Scorer {
 public:
  explicit LexiconScorer(Lexicon lexicon) : lexicon_(std::move(lexicon)) {}
  AttributeScores score(const std::string& text) override {
    return score_lexicon(text, lexicon_);
  }
  const Lexicon& lexicon() const { return lexicon_; }

 private:
  Lexicon lexicon_;
};

enum class ScorerMode { kLexicon, kRemote };

struct ScorerConfig {
  ScorerMode mode = ScorerMode::kLexicon;
  std::filesystem::path lexicon_path;  // lexicon mode
  std::string endpoint;                // remote mode, e.g. http://host:port/v1
  std::filesystem::path cache_path;    // remote mode, optional
  std::string api_key;                 // remote mode, optional
  double rate_limit = 10.0;            // requests per second
  int backoff_initial_ms = 250;        // first retry delay
  int max_attempts = 3;

  void validate() const;  // throws std::invalid_argument
};

// Builds a scorer from config. Lexicon mode loads lexicon_path; remote mode
// builds a caching, rate-limited HTTP client.
std::unique_ptr<Scorer> make_scorer(const ScorerConfig& config);

}  // namespace detox
