#pragma once

#include <chrono>
#include <cstdint>
#include <mutex>
#include <string>
#include <string_view>
#include <unordered_map>

#include "detox/scoring.hpp"

namespace detox {

// Lowercase hex SHA-256 of the given bytes.
std::string sha256_hex(std::string_view data);

// Cache key for a scored text: SHA-256 over the text plus the fixed
// attribute set, so a future attribute-set change invalidates old entries.
std::string score_cache_key(const std::string& text);

// Client for a PerspectiveAPI-style comment-analysis service.
//
// Request:  POST <endpoint> {"comment":{"text":...},
//                            "requestedAttributes":{"TOXICITY":{},...}}
// Response: {"attributeScores":{"TOXICITY":{"summaryScore":{"value":0.9}},...}}
//
// Results are cached by content hash (in memory, plus an append-only JSONL
// file when cache_path is set); network calls are throttled to rate_limit
// requests/second and retried with exponential backoff on transport failure.
// Safe for concurrent use.
class RemoteScorer final : public Scorer {
 public:
  struct Stats {
    std::uint64_t network_requests = 0;  // HTTP requests sent (incl. retries)
    std::uint64_t cache_hits = 0;
    std::uint64_t retries = 0;
    std::uint64_t clamped = 0;  // out-of-range scores clamped to [0,1]
  };

  explicit RemoteScorer(const ScorerConfig& config);

  AttributeScores score(const std::string& text) override;

  Stats stats() const;
  std::size_t cache_size() const;

 private:
  AttributeScores fetch(const std::string& text);
  AttributeScores parse_response(const std::string& body);
  void wait_for_rate_slot();
  void load_cache_file();
  void append_cache_record(const std::string& key,
                           const AttributeScores& scores);

  ScorerConfig config_;
  std::string host_;  // scheme://host[:port]
  std::string path_;  // request path, with key query param if configured

  mutable std::mutex mutex_;  // cache map + stats + cache file
  std::unordered_map<std::string, AttributeScores> cache_;
  Stats stats_;

  std::mutex rate_mutex_;
  std::chrono::steady_clock::time_point next_slot_{};
};

}  // namespace detox
