#pragma once

#include <string>

namespace deltacert {

enum class LogLevel { kError = 0, kWarn = 1, kInfo = 2, kDebug = 3 };

/// Threshold read once from the DELTACERT_LOG environment variable
/// (error|warn|info|debug). Defaults to warn.
LogLevel log_threshold();

/// Writes "deltacert: [<level>] <msg>" to stderr when enabled.
void log_message(LogLevel level, const std::string& msg);

inline void log_error(const std::string& msg) { log_message(LogLevel::kError, msg); }
inline void log_warn(const std::string& msg) { log_message(LogLevel::kWarn, msg); }
inline void log_info(const std::string& msg) { log_message(LogLevel::kInfo, msg); }
inline void log_debug(const std::string& msg) { log_message(LogLevel::kDebug, msg); }

}  // namespace deltacert
