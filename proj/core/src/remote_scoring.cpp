#include "detox/remote_scoring.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "detox/jsonl.hpp"
#include "detox/log.hpp"
#include "httplib.h"
#include "nlohmann/json.hpp"

namespace detox {

namespace {

std::string attribute_set_tag() {
  std::string tag;
  for (Attribute a : all_attributes()) {
    tag += '\n';
    tag += attribute_api_name(a);
  }
  return tag;
}

}  // namespace

std::string sha256_hex(std::string_view data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  if (ctx == nullptr ||
      EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx, data.data(), data.size()) != 1 ||
      EVP_DigestFinal_ex(ctx, digest, &len) != 1) {
    EVP_MD_CTX_free(ctx);
    throw std::runtime_error("sha256 computation failed");
  }
  EVP_MD_CTX_free(ctx);
  static const char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(kHex[digest[i] >> 4]);
    out.push_back(kHex[digest[i] & 0xF]);
  }
  return out;
}

std::string score_cache_key(const std::string& text) {
  static const std::string tag = attribute_set_tag();
  return sha256_hex(text + tag);
}

RemoteScorer::RemoteScorer(const ScorerConfig& config) : config_(config) {
  config_.validate();
  if (config_.mode != ScorerMode::kRemote) {
    throw std::invalid_argument("RemoteScorer requires remote mode config");
  }

  // Split endpoint into scheme://host[:port] and request path.
  const std::string& url = config_.endpoint;
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) {
    throw std::invalid_argument("remote scorer: endpoint must include scheme: " +
                                url);
  }
  const auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) {
    host_ = url;
    path_ = "/";
  } else {
    host_ = url.substr(0, path_start);
    path_ = url.substr(path_start);
  }
  if (!config_.api_key.empty()) {
    path_ += (path_.find('?') == std::string::npos ? '?' : '&');
    path_ += "key=" + config_.api_key;
  }

  if (!config_.cache_path.empty()) {
    load_cache_file();
  }
}

void RemoteScorer::load_cache_file() {
  std::ifstream in(config_.cache_path, std::ios::binary);
  if (!in) {
    return;  // no cache yet
  }
  for_each_line(in, [&](std::uint64_t line_no, const std::string& line) {
    try {
      const auto record = nlohmann::json::parse(line);
      const auto key = record.at("hash").get<std::string>();
      const auto& values = record.at("scores");
      if (!values.is_array() || values.size() != kAttributeCount) {
        throw std::runtime_error("scores must be an array of 8");
      }
      AttributeScores scores;
      for (std::size_t i = 0; i < kAttributeCount; ++i) {
        scores.values[i] = values[i].get<double>();
      }
      scores.validate();
      cache_[key] = scores;
    } catch (const std::exception& e) {
      log_warn("score cache " + config_.cache_path.string() + " line " +
               std::to_string(line_no) + " skipped: " + e.what());
    }
  });
}

void RemoteScorer::append_cache_record(const std::string& key,
                                       const AttributeScores& scores) {
  std::ofstream out(config_.cache_path, std::ios::binary | std::ios::app);
  if (!out) {
    log_warn("score cache: cannot append to " + config_.cache_path.string());
    return;
  }
  nlohmann::ordered_json record;
  record["hash"] = key;
  record["scores"] = scores.values;
  out << record.dump() << "\n";
}

void RemoteScorer::wait_for_rate_slot() {
  std::chrono::steady_clock::time_point slot;
  {
    std::lock_guard lock(rate_mutex_);
    const auto interval = std::chrono::duration_cast<
        std::chrono::steady_clock::duration>(
        std::chrono::duration<double>(1.0 / config_.rate_limit));
    const auto now = std::chrono::steady_clock::now();
    slot = std::max(next_slot_, now);
    next_slot_ = slot + interval;
  }
  std::this_thread::sleep_until(slot);
}

AttributeScores RemoteScorer::parse_response(const std::string& body) {
  const auto malformed = [&](const std::string& why) -> std::runtime_error {
    return std::runtime_error("remote scorer: malformed response (" + why +
                              "): " + body);
  };
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(body);
  } catch (const nlohmann::json::exception& e) {
    throw malformed(e.what());
  }
  const auto scores_it = doc.find("attributeScores");
  if (scores_it == doc.end() || !scores_it->is_object()) {
    throw malformed("missing attributeScores");
  }
  AttributeScores scores;
  for (Attribute a : all_attributes()) {
    const std::string name(attribute_api_name(a));
    const auto attr_it = scores_it->find(name);
    if (attr_it == scores_it->end()) {
      throw malformed("missing attribute " + name);
    }
    double value = 0.0;
    try {
      value = attr_it->at("summaryScore").at("value").get<double>();
    } catch (const nlohmann::json::exception&) {
      throw malformed("missing summaryScore.value for " + name);
    }
    if (value < 0.0 || value > 1.0) {
      log_warn("remote scorer: " + name + " score " + std::to_string(value) +
               " out of [0,1], clamped");
      value = std::clamp(value, 0.0, 1.0);
      std::lock_guard lock(mutex_);
      ++stats_.clamped;
    }
    scores[a] = value;
  }
  return scores;
}

AttributeScores RemoteScorer::fetch(const std::string& text) {
  nlohmann::ordered_json request;
  request["comment"]["text"] = text;
  auto& attrs = request["requestedAttributes"];
  attrs = nlohmann::ordered_json::object();
  for (Attribute a : all_attributes()) {
    attrs[std::string(attribute_api_name(a))] = nlohmann::ordered_json::object();
  }
  const std::string body = request.dump();

  std::string last_error;
  for (int attempt = 0; attempt < config_.max_attempts; ++attempt) {
    if (attempt > 0) {
      const auto delay = std::chrono::milliseconds(
          config_.backoff_initial_ms) * (1 << (attempt - 1));
      log_info("remote scorer: retrying after " +
               std::to_string(delay.count()) + " ms (" + last_error + ")");
      std::this_thread::sleep_for(delay);
      std::lock_guard lock(mutex_);
      ++stats_.retries;
    }
    wait_for_rate_slot();
    {
      std::lock_guard lock(mutex_);
      ++stats_.network_requests;
    }
    httplib::Client client(host_);
    client.set_connection_timeout(10);
    client.set_read_timeout(30);
    auto result = client.Post(path_, body, "application/json");
    if (!result) {
      last_error = "transport error: " + httplib::to_string(result.error());
      continue;
    }
    if (result->status != 200) {
      last_error = "HTTP " + std::to_string(result->status) + ": " +
                   result->body;
      continue;
    }
    return parse_response(result->body);
  }
  throw std::runtime_error("remote scorer: request failed after " +
                           std::to_string(config_.max_attempts) +
                           " attempts; last error: " + last_error);
}

AttributeScores RemoteScorer::score(const std::string& text) {
  const std::string key = score_cache_key(text);
  {
    std::lock_guard lock(mutex_);
    if (auto it = cache_.find(key); it != cache_.end()) {
      ++stats_.cache_hits;
      return it->second;
    }
  }
  const AttributeScores scores = fetch(text);
  {
    std::lock_guard lock(mutex_);
    const auto [it, inserted] = cache_.emplace(key, scores);
    if (inserted && !config_.cache_path.empty()) {
      append_cache_record(key, scores);
    }
  }
  return scores;
}

RemoteScorer::Stats RemoteScorer::stats() const {
  std::lock_guard lock(mutex_);
  return stats_;
}

std::size_t RemoteScorer::cache_size() const {
  std::lock_guard lock(mutex_);
  return cache_.size();
}

}  // namespace detox
