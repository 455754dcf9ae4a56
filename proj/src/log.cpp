#include "focus/log.hpp"

#include <atomic>
#include <cstdlib>
#include <iostream>
#include <mutex>

namespace focus::log {

namespace {

Level level_from_env() {
  const char* env = std::getenv("FOCUS_LOG");
  if (env == nullptr) return Level::warn;
  const std::string_view v(env);
  if (v == "debug") return Level::debug;
  if (v == "info") return Level::info;
  if (v == "error") return Level::error;
  if (v == "off") return Level::off;
  return Level::warn;
}

std::atomic<Level>& current() {
  static std::atomic<Level> lvl{level_from_env()};
  return lvl;
}

std::mutex& sink_mutex() {
  static std::mutex m;
  return m;
}

Sink& sink() {
  static Sink s;
  return s;
}

constexpr std::string_view kNames[] = {"debug", "info", "warn", "error", "off"};

}  // namespace

Level level() { return current().load(); }
void set_level(Level level) { current().store(level); }

void set_sink(Sink s) {
  std::lock_guard lock(sink_mutex());
  sink() = std::move(s);
}

void write(Level lvl, std::string_view message) {
  if (lvl < level()) return;
  std::lock_guard lock(sink_mutex());
  if (sink()) {
    sink()(lvl, message);
    return;
  }
  std::cerr << "[focus " << kNames[static_cast<int>(lvl)] << "] " << message << '\n';
}

}  // namespace focus::log
