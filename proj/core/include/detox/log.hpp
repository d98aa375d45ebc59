#pragma once

#include <functional>
#include <string_view>

namespace detox {

enum class LogLevel { kDebug = 0, kInfo = 1, kWarn = 2, kError = 3, kOff = 4 };

void set_log_level(LogLevel level);
LogLevel log_level();

// Messages at or above the current level go to the sink (default: stderr).
using LogSink = std::function<void(LogLevel, std::string_view)>;
void set_log_sink(LogSink sink);  // empty sink restores the stderr default

void log_message(LogLevel level, std::string_view message);

inline void log_debug(std::string_view m) { log_message(LogLevel::kDebug, m); }
inline void log_info(std::string_view m) { log_message(LogLevel::kInfo, m); }
inline void log_warn(std::string_view m) { log_message(LogLevel::kWarn, m); }
inline void log_error(std::string_view m) { log_message(LogLevel::kError, m); }

}  // namespace detox
