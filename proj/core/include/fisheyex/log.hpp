#pragma once

#include <string_view>

#include <fmt/core.h>

namespace fisheyex::log {

enum class Level { quiet = 0, info = 1, debug = 2 };

/// Reads FISHEYEX_LOG once; defaults to info.
Level level();
void set_level(Level level);

void write(Level at, std::string_view message);

template <typename... Args>
void info(fmt::format_string<Args...> format, Args&&... args) {
  if (level() >= Level::info) write(Level::info, fmt::format(format, std::forward<Args>(args)...));
}

template <typename... Args>
void debug(fmt::format_string<Args...> format, Args&&... args) {
  if (level() >= Level::debug) write(Level::debug, fmt::format(format, std::forward<Args>(args)...));
}

}  // namespace fisheyex::log
