#include "deltacert/log.hpp"

#include <cstdlib>
#include <iostream>

namespace deltacert {
namespace {

LogLevel parse_level(const char* value) {
  if (value == nullptr) return LogLevel::kWarn;
  const std::string v(value);
  if (v == "error") return LogLevel::kError;
  if (v == "warn") return LogLevel::kWarn;
  if (v == "info") return LogLevel::kInfo;
  if (v == "debug") return LogLevel::kDebug;
  return LogLevel::kWarn;
}

const char* level_name(LogLevel level) {
  switch (level) {
    case LogLevel::kError: return "error";
    case LogLevel::kWarn: return "warn";
    case LogLevel::kInfo: return "info";
    case LogLevel::kDebug: return "debug";
  }
  return "warn";
}

}  // namespace

LogLevel log_threshold() {
  static const LogLevel threshold = parse_level(std::getenv("DELTACERT_LOG"));
  return threshold;
}

void log_message(LogLevel level, const std::string& msg) {
  if (static_cast<int>(level) > static_cast<int>(log_threshold())) return;
  std::cerr << "deltacert: [" << level_name(level) << "] " << msg << "\n";
}

}  // namespace deltacert
