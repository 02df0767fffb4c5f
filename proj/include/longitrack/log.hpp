#pragma once

#include <cstdlib>
#include <iostream>
#include <mutex>
#include <string>
#include <string_view>

namespace longitrack {

enum class LogLevel { error = 0, info = 1, debug = 2 };

namespace detail {

inline LogLevel log_level_from_env() {
  const char* v = std::getenv("LONGITRACK_LOG");
  if (!v) return LogLevel::info;
  const std::string_view s(v);
  if (s == "error") return LogLevel::error;
  if (s == "debug") return LogLevel::debug;
  return LogLevel::info;
}

inline std::mutex& log_mutex() {
  static std::mutex m;
  return m;
}

}  // namespace detail

// Read once; the level does not change mid-run.
inline LogLevel log_level() {
  static const LogLevel level = detail::log_level_from_env();
  return level;
}

inline void log_at(LogLevel level, std::string_view tag,
                   std::string_view message) {
  if (static_cast<int>(level) > static_cast<int>(log_level())) return;
  std::lock_guard<std::mutex> lock(detail::log_mutex());
  std::cerr << "[" << tag << "] " << message << "\n";
}

inline void log_error(std::string_view m) { log_at(LogLevel::error, "error", m); }
inline void log_info(std::string_view m) { log_at(LogLevel::info, "info", m); }
inline void log_debug(std::string_view m) { log_at(LogLevel::debug, "debug", m); }

}  // namespace longitrack
