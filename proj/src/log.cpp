#include "psim/log.hpp"

#include <atomic>
#include <cstdlib>
#include <iostream>
#include <mutex>
#include <string>

namespace psim::log {
namespace {

Level from_env() {
  const char* v = std::getenv("PSIM_LOG");
  if (v == nullptr) return Level::info;
  std::string s(v);
  if (s == "error") return Level::error;
  if (s == "debug") return Level::debug;
  return Level::info;
}

std::atomic<int>& current() {
  static std::atomic<int> level{static_cast<int>(from_env())};
  return level;
}

std::mutex& sink_mutex() {
  static std::mutex m;
  return m;
}

}  // namespace

Level threshold() { return static_cast<Level>(current().load()); }

void set_threshold(Level level) { current().store(static_cast<int>(level)); }

void write(Level level, std::string_view message) {
  if (static_cast<int>(level) > current().load()) return;
  static constexpr const char* tags[] = {"error", "info", "debug"};
  std::lock_guard lock(sink_mutex());
  std::cerr << "[psim " << tags[static_cast<int>(level)] << "] " << message << '\n';
}

}  // namespace psim::log
