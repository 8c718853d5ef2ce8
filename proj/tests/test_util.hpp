#pragma once

#include <unistd.h>

#include <cmath>
#include <cstddef>
#include <filesystem>
#include <string>

#include "pomcpshield/trace.hpp"

namespace testutil {

// Pulls a --key=value argument out of argv (so doctest never sees it) and
// returns the value, or "" when absent.
inline std::string take_arg(int& argc, char** argv, const std::string& key) {
  const std::string prefix = "--" + key + "=";
  for (int i = 1; i < argc; ++i) {
    std::string arg = argv[i];
    if (arg.rfind(prefix, 0) == 0) {
      for (int j = i; j + 1 < argc; ++j) argv[j] = argv[j + 1];
      --argc;
      return arg.substr(prefix.size());
    }
  }
  return {};
}

inline std::filesystem::path fresh_dir(const std::string& stem) {
  auto dir = std::filesystem::temp_directory_path() / (stem + "-" + std::to_string(::getpid()));
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

// Equality up to `tol` on belief probabilities, exact on everything else.
inline bool traces_close(const pomcpshield::Trace& a, const pomcpshield::Trace& b, double tol) {
  if (a.domain != b.domain || a.particles != b.particles || a.seed != b.seed) return false;
  if (std::abs(a.c - b.c) > tol) return false;
  if (a.runs.size() != b.runs.size()) return false;
  for (std::size_t r = 0; r < a.runs.size(); ++r) {
    if (a.runs[r].size() != b.runs[r].size()) return false;
    for (std::size_t s = 0; s < a.runs[r].size(); ++s) {
      const pomcpshield::Step& x = a.runs[r][s];
      const pomcpshield::Step& y = b.runs[r][s];
      if (x.action != y.action || x.observation != y.observation) return false;
      if (x.raw_particles != y.raw_particles) return false;
      if (x.beliefs.size() != y.beliefs.size()) return false;
      for (std::size_t k = 0; k < x.beliefs.size(); ++k) {
        if (x.beliefs[k].size() != y.beliefs[k].size()) return false;
        for (std::size_t j = 0; j < x.beliefs[k].size(); ++j) {
          if (std::abs(x.beliefs[k][j] - y.beliefs[k][j]) > tol) return false;
        }
      }
    }
  }
  return true;
}

}  // namespace testutil
