#pragma once

#include <functional>
#include <iostream>
#include <mutex>
#include <string>
#include <utility>
#include <vector>

namespace ivpvae {

enum class LogLevel { info, warning };

using LogSink = std::function<void(LogLevel, const std::string&)>;

namespace detail {
inline std::mutex& log_mutex() {
  static std::mutex m;
  return m;
}
inline LogSink& log_sink() {
  static LogSink sink = [](LogLevel level, const std::string& msg) {
    std::cerr << (level == LogLevel::warning ? "warning: " : "") << msg << '\n';
  };
  return sink;
}
}  // namespace detail

/// Replaces the process-wide sink and returns the previous one.
inline LogSink set_log_sink(LogSink sink) {
  std::lock_guard lock(detail::log_mutex());
  return std::exchange(detail::log_sink(), std::move(sink));
}

inline void log_message(LogLevel level, const std::string& msg) {
  std::lock_guard lock(detail::log_mutex());
  if (detail::log_sink()) detail::log_sink()(level, msg);
}

inline void warn(const std::string& msg) { log_message(LogLevel::warning, msg); }
inline void info(const std::string& msg) { log_message(LogLevel::info, msg); }

/// Collects messages for the lifetime of the object.
class ScopedLogCapture {
 public:
  ScopedLogCapture() {
    previous_ = set_log_sink([this](LogLevel level, const std::string& m) {
      if (level == LogLevel::warning) warnings.push_back(m);
      else infos.push_back(m);
    });
  }
  ~ScopedLogCapture() { set_log_sink(std::move(previous_)); }
  ScopedLogCapture(const ScopedLogCapture&) = delete;
  ScopedLogCapture& operator=(const ScopedLogCapture&) = delete;

  std::vector<std::string> warnings;
  std::vector<std::string> infos;

 private:
  LogSink previous_;
};

}  // namespace ivpvae
