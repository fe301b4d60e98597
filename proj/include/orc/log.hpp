#pragma once

// Leveled stderr logging; the level comes from ORC_LOG (default warn).

#include <cstdio>
#include <cstdlib>
#include <mutex>
#include <string>
#include <string_view>

namespace orc::log {

enum class Level { error, warn, info, debug };

inline const char* to_string(Level l) {
  switch (l) {
    case Level::error: return "error";
    case Level::warn: return "warn";
    case Level::info: return "info";
    case Level::debug: return "debug";
  }
  return "?";
}

inline Level parse_level(const char* s, Level fallback = Level::warn) {
  if (!s) return fallback;
  const std::string_view v(s);
  for (Level l : {Level::error, Level::warn, Level::info, Level::debug})
    if (v == to_string(l)) return l;
  return fallback;
}

inline Level& threshold() {
  static Level level = parse_level(std::getenv("ORC_LOG"));
  return level;
}

inline bool enabled(Level l) { return l <= threshold(); }

inline void write(Level l, std::string_view msg) {
  if (!enabled(l)) return;
  static std::mutex mu;
  std::lock_guard lock(mu);
  std::fprintf(stderr, "orc %s: %.*s\n", to_string(l), static_cast<int>(msg.size()), msg.data());
}

inline void error(std::string_view m) { write(Level::error, m); }
inline void warn(std::string_view m) { write(Level::warn, m); }
inline void info(std::string_view m) { write(Level::info, m); }
inline void debug(std::string_view m) { write(Level::debug, m); }

}  // namespace orc::log
