#pragma once

#include "pomcpshield/model.hpp"

namespace pomcpshield {

// Two doors, one hides a treasure and one a tiger. Listening costs -1 and
// reports the tiger's side with 0.85 accuracy; opening yields +10 (treasure)
// or -100 (tiger) and by default ends the episode.
class TigerModel final : public Model {
 public:
  static constexpr StateId kTigerLeft = 0;
  static constexpr StateId kTigerRight = 1;
  static constexpr ActionId kListen = 0;
  static constexpr ActionId kOpenLeft = 1;
  static constexpr ActionId kOpenRight = 2;
  static constexpr ObservationId kHearLeft = 0;
  static constexpr ObservationId kHearRight = 1;

  explicit TigerModel(bool reset_on_open = false, double listen_accuracy = 0.85,
                      double treasure_reward = 10.0, double tiger_penalty = -100.0,
                      double listen_cost = -1.0);

  std::string name() const override { return "tiger"; }
  int action_count() const override { return 3; }
  int observation_count() const override { return 2; }
  double reward_range() const override { return treasure_reward_ - tiger_penalty_; }
  int default_max_steps() const override { return 10; }

  StateId sample_start(RandomStream& rng) const override;
  StepOutcome step(StateId state, ActionId action, RandomStream& rng) const override;

  std::string action_label(ActionId action) const override;

  // One selector: the agent's belief about the treasure position.
  int selector_count() const override { return 1; }
  int selector_categories(int selector) const override;
  int project(int selector, StateId state) const override;
  const std::vector<std::string>& category_labels(int selector) const override;

  double listen_accuracy() const { return listen_accuracy_; }

 private:
  bool reset_on_open_;
  double listen_accuracy_;
  double treasure_reward_;
  double tiger_penalty_;
  double listen_cost_;
  std::vector<std::string> labels_;
};

}  // namespace pomcpshield
