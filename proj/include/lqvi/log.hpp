// lqvi -- constrained linear-quadratic dynamic games via affine variational inequalities
// Copyright 2026 lqvi contributors
// Licensed under Apache 2.0

#pragma once

#include <cstdio>
#include <cstdlib>
#include <string>

namespace lqvi {

/// Log verbosity from the AVI_GAME_LOG environment variable:
/// 0/unset = warnings only, 1 = info, 2 = debug.
inline int log_level() {
  static const int level = [] {
    const char* env = std::getenv("AVI_GAME_LOG");
    if (!env || !*env) return 0;
    return std::atoi(env);
  }();
  return level;
}

inline void log_warn(const std::string& msg) {
  std::fprintf(stderr, "[lqvi] warning: %s\n", msg.c_str());
}

inline void log_info(const std::string& msg) {
  if (log_level() >= 1) std::fprintf(stderr, "[lqvi] %s\n", msg.c_str());
}

inline void log_debug(const std::string& msg) {
  if (log_level() >= 2) std::fprintf(stderr, "[lqvi] %s\n", msg.c_str());
}

}  // namespace lqvi
