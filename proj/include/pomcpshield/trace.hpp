#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pomcpshield/belief.hpp"
#include "pomcpshield/model.hpp"

namespace pomcpshield {

// One recorded decision: the belief marginals the agent held (one ProbVector
// per selector), the action it took, and the observation it received.
// raw_particles is empty unless particle logging was requested.
struct Step {
  std::vector<ProbVector> beliefs;
  ActionId action = 0;
  ObservationId observation = 0;
  std::vector<StateId> raw_particles;

  bool operator==(const Step&) const = default;
};

using Run = std::vector<Step>;

struct Trace {
  std::string domain;
  int particles = 0;
  double c = 0.0;
  std::uint64_t seed = 0;
  std::vector<Run> runs;

  bool operator==(const Trace&) const = default;

  std::size_t total_steps() const {
    std::size_t n = 0;
    for (const auto& r : runs) n += r.size();
    return n;
  }
};

}  // namespace pomcpshield
