#pragma once
#include <cstdio>
#include <string>

namespace oros::log {

enum class Level { Error = 0, Warn = 1, Info = 2, Debug = 3 };

// Global level, initialized from OROS_LOG (error|warn|info|debug) on first use.
Level level();
void set_level(Level lv);

void write(Level lv, const std::string& msg);

inline void error(const std::string& m) { write(Level::Error, m); }
inline void warn(const std::string& m) { write(Level::Warn, m); }
inline void info(const std::string& m) { write(Level::Info, m); }
inline void debug(const std::string& m) { write(Level::Debug, m); }

}  // namespace oros::log
