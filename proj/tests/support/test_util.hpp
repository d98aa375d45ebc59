#pragma once

#include <atomic>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "detox/log.hpp"

namespace detox::testing {

// Unique scratch directory, recursively removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::atomic<unsigned> counter{0};
    std::random_device rd;
    const auto base = std::filesystem::temp_directory_path();
    for (int attempt = 0; attempt < 16; ++attempt) {
      auto candidate =
          base / ("detox-test-" + std::to_string(rd()) + "-" +
                  std::to_string(counter.fetch_add(1)));
      std::error_code ec;
      if (std::filesystem::create_directory(candidate, ec)) {
        path_ = std::move(candidate);
        return;
      }
    }
    throw std::runtime_error("TempDir: could not create scratch directory");
  }

  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const {
    return path_ / name;
  }

 private:
  std::filesystem::path path_;
};

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw std::runtime_error("read_file: cannot open " + path.string());
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

inline void write_file(const std::filesystem::path& path,
                       const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw std::runtime_error("write_file: cannot open " + path.string());
  }
  out << content;
}

// Captures log output for the lifetime of the object.
class LogCapture {
 public:
  explicit LogCapture(LogLevel level = LogLevel::kWarn)
      : previous_level_(log_level()) {
    set_log_level(level);
    set_log_sink([this](LogLevel lvl, std::string_view message) {
      std::lock_guard lock(mutex_);
      messages_.emplace_back(lvl, std::string(message));
    });
  }

  LogCapture(const LogCapture&) = delete;
  LogCapture& operator=(const LogCapture&) = delete;

  ~LogCapture() {
    set_log_sink({});
    set_log_level(previous_level_);
  }

  std::vector<std::pair<LogLevel, std::string>> messages() const {
    std::lock_guard lock(mutex_);
    return messages_;
  }

  bool contains(std::string_view needle) const {
    std::lock_guard lock(mutex_);
    for (const auto& [level, message] : messages_) {
      if (message.find(needle) != std::string::npos) {
        return true;
      }
    }
    return false;
  }

  std::size_t count() const {
    std::lock_guard lock(mutex_);
    return messages_.size();
  }

 private:
  LogLevel previous_level_;
  mutable std::mutex mutex_;
  std::vector<std::pair<LogLevel, std::string>> messages_;
};

}  // namespace detox::testing
