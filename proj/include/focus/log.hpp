#pragma once

#include <functional>
#include <string>
#include <string_view>

namespace focus::log {

enum class Level { debug = 0, info = 1, warn = 2, error = 3, off = 4 };

// Reads FOCUS_LOG (debug|info|warn|error|off); defaults to warn.
Level level();
void set_level(Level level);

// Replaces the stderr sink; pass nullptr to restore it.
using Sink = std::function<void(Level, std::string_view)>;
void set_sink(Sink sink);

void write(Level level, std::string_view message);
inline void debug(std::string_view m) { write(Level::debug, m); }
inline void info(std::string_view m) { write(Level::info, m); }
inline void warn(std::string_view m) { write(Level::warn, m); }
inline void error(std::string_view m) { write(Level::error, m); }

}  // namespace focus::log
