// Copyright 2026 The adhoc-css Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "log.hpp"

#include <atomic>
#include <iostream>
#include <mutex>

namespace acss {
namespace {
std::atomic<int> g_level{static_cast<int>(LogLevel::kWarn)};
std::mutex g_mu;
}  // namespace

void set_log_level(LogLevel level) { g_level = static_cast<int>(level); }
LogLevel log_level() { return static_cast<LogLevel>(g_level.load()); }

void log(LogLevel level, const std::string& message) {
  if (static_cast<int>(level) > g_level.load() || level == LogLevel::kQuiet) return;
  static const char* const kNames[] = {"", "warn", "info", "debug"};
  std::lock_guard<std::mutex> lock(g_mu);
  std::cerr << '[' << kNames[static_cast<int>(level)] << "] " << message << '\n';
}

}  // namespace acss
