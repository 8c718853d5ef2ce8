#include "pomcpshield/tiger.hpp"

#include <stdexcept>

namespace pomcpshield {

TigerModel::TigerModel(bool reset_on_open, double listen_accuracy, double treasure_reward,
                       double tiger_penalty, double listen_cost)
    : reset_on_open_(reset_on_open),
      listen_accuracy_(listen_accuracy),
      treasure_reward_(treasure_reward),
      tiger_penalty_(tiger_penalty),
      listen_cost_(listen_cost),
      labels_{"left", "right"} {
  if (!(listen_accuracy > 0.5) || !(listen_accuracy <= 1.0)) {
    throw std::invalid_argument("tiger listen accuracy must lie in (0.5, 1]");
  }
}

StateId TigerModel::sample_start(RandomStream& rng) const {
  return rng.bernoulli(0.5) ? kTigerRight : kTigerLeft;
}

StepOutcome TigerModel::step(StateId state, ActionId action, RandomStream& rng) const {
  if (action == kListen) {
    const ObservationId truthful = (state == kTigerLeft) ? kHearLeft : kHearRight;
    const ObservationId o =
        rng.bernoulli(listen_accuracy_) ? truthful : (truthful == kHearLeft ? kHearRight : kHearLeft);
    return {state, o, listen_cost_, false};
  }
  const StateId tiger_door = (action == kOpenLeft) ? kTigerLeft : kTigerRight;
  const double reward = (state == tiger_door) ? tiger_penalty_ : treasure_reward_;
  if (reset_on_open_) {
    return {sample_start(rng), kHearLeft, reward, false};
  }
  return {state, kHearLeft, reward, true};
}

std::string TigerModel::action_label(ActionId action) const {
  switch (action) {
    case kListen:
      return "Listen";
    case kOpenLeft:
      return "OpenLeft";
    case kOpenRight:
      return "OpenRight";
    default:
      throw std::invalid_argument("tiger action out of range");
  }
}

int TigerModel::selector_categories(int selector) const {
  if (selector != 0) throw std::out_of_range("tiger has one selector");
  return 2;
}

int TigerModel::project(int selector, StateId state) const {
  if (selector != 0) throw std::out_of_range("tiger has one selector");
  // Treasure is behind the door the tiger is not: category 0 = "left".
  return state == kTigerRight ? 0 : 1;
}

const std::vector<std::string>& TigerModel::category_labels(int selector) const {
  if (selector != 0) throw std::out_of_range("tiger has one selector");
  return labels_;
}

}  // namespace pomcpshield
