#include "fisheyex/log.hpp"

#include <atomic>
#include <cstdlib>
#include <iostream>
#include <mutex>
#include <string>

namespace fisheyex::log {

namespace {

Level from_env() {
  const char* env = std::getenv("FISHEYEX_LOG");
  if (env == nullptr) return Level::info;
  const std::string value(env);
  if (value == "quiet") return Level::quiet;
  if (value == "debug") return Level::debug;
  return Level::info;
}

std::atomic<int>& current() {
  static std::atomic<int> level{static_cast<int>(from_env())};
  return level;
}

std::mutex g_write_mutex;

}  // namespace

Level level() { return static_cast<Level>(current().load()); }

void set_level(Level l) { current().store(static_cast<int>(l)); }

void write(Level at, std::string_view message) {
  std::lock_guard lock(g_write_mutex);
  std::cerr << (at == Level::debug ? "[debug] " : "[info] ") << message << '\n';
}

}  // namespace fisheyex::log
