#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "pomcpshield/random.hpp"

namespace pomcpshield {

using StateId = std::int32_t;
using ActionId = std::int32_t;
using ObservationId = std::int32_t;

struct StepOutcome {
  StateId next_state;
  ObservationId observation;
  double reward;
  bool terminal;
};

// Black-box POMDP simulator plus the metadata the planner, trace logger and
// rule machinery need: action/observation spaces, reward range, and named
// marginal projections of the hidden state ("selectors").
class Model {
 public:
  virtual ~Model() = default;

  virtual std::string name() const = 0;
  virtual int action_count() const = 0;
  virtual int observation_count() const = 0;
  virtual double reward_range() const = 0;
  virtual int default_max_steps() const = 0;

  // Draw from the initial belief prior (fills the particle filter).
  virtual StateId sample_start(RandomStream& rng) const = 0;
  // Draw the true initial environment state. Defaults to the belief prior.
  virtual StateId sample_true_start(RandomStream& rng) const { return sample_start(rng); }

  virtual StepOutcome step(StateId state, ActionId action, RandomStream& rng) const = 0;

  // Local transform used to refill the particle filter after rejection.
  virtual StateId reinvigorate(StateId state, RandomStream& rng) const {
    (void)rng;
    return state;
  }

  virtual std::string action_label(ActionId action) const = 0;

  ActionId action_from_label(std::string_view label) const {
    for (ActionId a = 0; a < action_count(); ++a) {
      if (action_label(a) == label) return a;
    }
    throw std::invalid_argument("unknown action label '" + std::string(label) + "' for domain " +
                                name());
  }

  // Belief summaries: selector i maps states onto selector_categories(i)
  // categories; marginals over them are what gets logged and what rules see.
  virtual int selector_count() const = 0;
  virtual int selector_categories(int selector) const = 0;
  virtual int project(int selector, StateId state) const = 0;
  virtual const std::vector<std::string>& category_labels(int selector) const = 0;

  // Selector that rules evaluate against at a given step of an episode
  // (the current segment for velocity regulation, the only selector for tiger).
  virtual int context_selector(int step_index) const {
    (void)step_index;
    return 0;
  }
};

}  // namespace pomcpshield
