#pragma once

#include <string>

namespace splinemetric {

/// Verbosity from the SPLINEMETRIC_LOG environment variable:
/// "quiet" (errors only), "info" (default), "debug".
enum class LogLevel { kQuiet = 0, kInfo = 1, kDebug = 2 };

LogLevel log_level();

void log_info(const std::string& message);
void log_debug(const std::string& message);

}  // namespace splinemetric
