#include "splinemetric/log.hpp"

#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <mutex>

namespace splinemetric {

LogLevel log_level() {
  static const LogLevel level = [] {
    const char* env = std::getenv("SPLINEMETRIC_LOG");
    if (env == nullptr) return LogLevel::kInfo;
    if (std::strcmp(env, "quiet") == 0) return LogLevel::kQuiet;
    if (std::strcmp(env, "debug") == 0) return LogLevel::kDebug;
    return LogLevel::kInfo;
  }();
  return level;
}

namespace {

std::mutex& log_mutex() {
  static std::mutex m;
  return m;
}

void emit(const char* prefix, const std::string& message) {
  std::lock_guard<std::mutex> lock(log_mutex());
  std::fprintf(stderr, "%s%s\n", prefix, message.c_str());
}

}  // namespace

void log_info(const std::string& message) {
  if (log_level() >= LogLevel::kInfo) emit("[splinemetric] ", message);
}

void log_debug(const std::string& message) {
  if (log_level() >= LogLevel::kDebug) emit("[splinemetric:debug] ", message);
}

}  // namespace splinemetric
