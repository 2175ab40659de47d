#include "sentinel/log.hpp"

#include <cstdlib>
#include <iostream>
#include <mutex>

namespace sentinel {
namespace log {

Level threshold() {
  static Level level = [] {
    const char* env = std::getenv("SENTINEL_LOG");
    if (!env) return Level::kWarn;
    std::string v(env);
    if (v == "error") return Level::kError;
    if (v == "warn") return Level::kWarn;
    if (v == "info") return Level::kInfo;
    if (v == "debug") return Level::kDebug;
    return Level::kWarn;
  }();
  return level;
}

void write(Level level, const std::string& message) {
  if (level > threshold()) return;
  static std::mutex mutex;
  static const char* names[] = {"error", "warn", "info", "debug"};
  std::lock_guard<std::mutex> lock(mutex);
  std::cerr << "[" << names[static_cast<int>(level)] << "] " << message << "\n";
}

}  // namespace log
}  // namespace sentinel
