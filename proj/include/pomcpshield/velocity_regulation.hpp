#pragma once

#include <array>
#include <optional>

#include "pomcpshield/model.hpp"

namespace pomcpshield {

// Path layout for velocity regulation: segments split into subsegments, a
// collision penalty, and optionally fixed true difficulties for evaluation.
struct VrMap {
  std::vector<std::vector<double>> segment_subsegment_lengths;
  double collision_penalty = 63.0;
  std::optional<std::vector<int>> difficulties;

  static VrMap default_map();
  static VrMap from_json_text(const std::string& text);
  static VrMap from_json_file(const std::string& path);
  std::string to_json_text() const;
};

// A robot traverses the map one subsegment per step, choosing a speed level
// a in {0,1,2}. Each segment has a hidden difficulty f in {0,1,2}; the reward
// for a subsegment is length*(1+a), minus the collision penalty when a
// collision (probability depending on f and a) occurs. The robot observes
// subsegment occupancy with difficulty-dependent probability.
class VelocityRegulationModel final : public Model {
 public:
  explicit VelocityRegulationModel(VrMap map = VrMap::default_map());

  std::string name() const override { return "vr"; }
  int action_count() const override { return 3; }
  int observation_count() const override { return 2; }
  double reward_range() const override;
  int default_max_steps() const override { return total_subsegments_; }

  StateId sample_start(RandomStream& rng) const override;
  StateId sample_true_start(RandomStream& rng) const override;
  StepOutcome step(StateId state, ActionId action, RandomStream& rng) const override;
  StateId reinvigorate(StateId state, RandomStream& rng) const override;

  std::string action_label(ActionId action) const override;

  // One selector per segment: the marginal over that segment's difficulty.
  int selector_count() const override { return num_segments_; }
  int selector_categories(int selector) const override;
  int project(int selector, StateId state) const override;
  const std::vector<std::string>& category_labels(int selector) const override;
  int context_selector(int step_index) const override;

  int total_subsegments() const { return total_subsegments_; }
  int num_segments() const { return num_segments_; }
  const VrMap& map() const { return map_; }

  int position_of(StateId state) const { return static_cast<int>(state % (total_subsegments_ + 1)); }
  int difficulty_of(StateId state, int segment) const;
  double subsegment_length(int position) const { return sub_lengths_[static_cast<std::size_t>(position)]; }
  // Elapsed traversal time for bookkeeping; not part of the reward.
  double step_duration(int position, ActionId action) const {
    return subsegment_length(position) / (1.0 + static_cast<double>(action));
  }

  static constexpr std::array<double, 3> kOccupancyProb{0.44, 0.79, 0.86};
  static constexpr std::array<std::array<double, 3>, 3> kCollisionProb{{
      {0.0, 0.0, 0.028},   // f=0, a=0..2
      {0.0, 0.056, 0.11},  // f=1
      {0.0, 0.14, 0.25},   // f=2
  }};

 private:
  VrMap map_;
  int num_segments_;
  int total_subsegments_;
  std::vector<int> sub_segment_;      // position -> segment index
  std::vector<double> sub_lengths_;   // position -> length
  std::vector<std::int64_t> pow3_;    // 3^i per segment
  std::int64_t num_tuples_;
  std::vector<std::string> labels_;
};

}  // namespace pomcpshield
