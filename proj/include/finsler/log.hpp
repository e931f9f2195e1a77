#pragma once

// Diagnostics on standard error, filtered by the FS_LOG environment variable
// (error, info or debug; default error).

#include <spdlog/sinks/stdout_sinks.h>
#include <spdlog/spdlog.h>

#include <cstdlib>
#include <memory>
#include <string_view>

#include "finsler/error.hpp"

namespace finsler {

inline spdlog::level::level_enum parse_log_level(std::string_view name) {
  if (name == "error") return spdlog::level::err;
  if (name == "info") return spdlog::level::info;
  if (name == "debug") return spdlog::level::debug;
  throw ConfigError("FS_LOG must be one of error, info, debug");
}

inline spdlog::logger& log() {
  static const std::shared_ptr<spdlog::logger> instance = [] {
    auto l = std::make_shared<spdlog::logger>("finsler", std::make_shared<spdlog::sinks::stderr_sink_mt>());
    l->set_pattern("[%l] %v");
    const char* env = std::getenv("FS_LOG");
    l->set_level(env && *env ? parse_log_level(env) : spdlog::level::err);
    return l;
  }();
  return *instance;
}

}  // namespace finsler
