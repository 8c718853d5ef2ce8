#include "pomcpshield/velocity_regulation.hpp"

#include <algorithm>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace pomcpshield {

VrMap VrMap::default_map() {
  VrMap m;
  for (double len : {2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 14.0}) {
    m.segment_subsegment_lengths.push_back({len, len});
  }
  m.collision_penalty = 63.0;
  return m;
}

VrMap VrMap::from_json_text(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  VrMap m;
  if (!j.contains("segments") || !j["segments"].is_array() || j["segments"].empty()) {
    throw std::invalid_argument("vr map: missing non-empty 'segments' array");
  }
  for (const auto& seg : j["segments"]) {
    if (!seg.contains("subsegments") || !seg["subsegments"].is_array() ||
        seg["subsegments"].empty()) {
      throw std::invalid_argument("vr map: each segment needs a non-empty 'subsegments' array");
    }
    std::vector<double> lens;
    for (const auto& sub : seg["subsegments"]) {
      const double len = sub.at("length").get<double>();
      if (!(len > 0.0)) throw std::invalid_argument("vr map: subsegment length must be positive");
      lens.push_back(len);
    }
    m.segment_subsegment_lengths.push_back(std::move(lens));
  }
  m.collision_penalty = j.value("collision_penalty", 63.0);
  if (j.contains("difficulties")) {
    std::vector<int> d = j["difficulties"].get<std::vector<int>>();
    if (d.size() != m.segment_subsegment_lengths.size()) {
      throw std::invalid_argument("vr map: 'difficulties' length must equal segment count");
    }
    for (int f : d) {
      if (f < 0 || f > 2) throw std::invalid_argument("vr map: difficulties must lie in {0,1,2}");
    }
    m.difficulties = std::move(d);
  }
  return m;
}

VrMap VrMap::from_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open vr map file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json_text(ss.str());
}

std::string VrMap::to_json_text() const {
  nlohmann::json j;
  j["segments"] = nlohmann::json::array();
  for (const auto& lens : segment_subsegment_lengths) {
    nlohmann::json seg;
    seg["subsegments"] = nlohmann::json::array();
    for (double len : lens) seg["subsegments"].push_back({{"length", len}});
    j["segments"].push_back(seg);
  }
  j["collision_penalty"] = collision_penalty;
  if (difficulties) j["difficulties"] = *difficulties;
  return j.dump(2);
}

VelocityRegulationModel::VelocityRegulationModel(VrMap map)
    : map_(std::move(map)), labels_{"0", "1", "2"} {
  num_segments_ = static_cast<int>(map_.segment_subsegment_lengths.size());
  if (num_segments_ == 0) throw std::invalid_argument("vr: empty map");
  total_subsegments_ = 0;
  pow3_.resize(static_cast<std::size_t>(num_segments_));
  std::int64_t p = 1;
  for (int i = 0; i < num_segments_; ++i) {
    pow3_[static_cast<std::size_t>(i)] = p;
    p *= 3;
    const auto& lens = map_.segment_subsegment_lengths[static_cast<std::size_t>(i)];
    for (double len : lens) {
      sub_segment_.push_back(i);
      sub_lengths_.push_back(len);
      ++total_subsegments_;
    }
  }
  num_tuples_ = p;
  const std::int64_t states = num_tuples_ * (total_subsegments_ + 1);
  if (states >= std::numeric_limits<StateId>::max()) {
    throw std::invalid_argument("vr: state space too large for packed state ids");
  }
}

double VelocityRegulationModel::reward_range() const {
  const double lmax = *std::max_element(sub_lengths_.begin(), sub_lengths_.end());
  const double lmin = *std::min_element(sub_lengths_.begin(), sub_lengths_.end());
  return 3.0 * lmax - (lmin - map_.collision_penalty);
}

StateId VelocityRegulationModel::sample_start(RandomStream& rng) const {
  const std::int64_t tuple = static_cast<std::int64_t>(rng.next_below(static_cast<std::uint32_t>(num_tuples_)));
  return static_cast<StateId>(tuple * (total_subsegments_ + 1));
}

StateId VelocityRegulationModel::sample_true_start(RandomStream& rng) const {
  if (!map_.difficulties) return sample_start(rng);
  std::int64_t tuple = 0;
  for (int i = 0; i < num_segments_; ++i) {
    tuple += static_cast<std::int64_t>((*map_.difficulties)[static_cast<std::size_t>(i)]) *
             pow3_[static_cast<std::size_t>(i)];
  }
  return static_cast<StateId>(tuple * (total_subsegments_ + 1));
}

StepOutcome VelocityRegulationModel::step(StateId state, ActionId action, RandomStream& rng) const {
  const int pos = position_of(state);
  const std::int64_t tuple = state / (total_subsegments_ + 1);
  if (pos >= total_subsegments_) {
    return {state, 0, 0.0, true};
  }
  const int seg = sub_segment_[static_cast<std::size_t>(pos)];
  const int f = static_cast<int>((tuple / pow3_[static_cast<std::size_t>(seg)]) % 3);
  const double len = sub_lengths_[static_cast<std::size_t>(pos)];
  const bool collision =
      rng.bernoulli(kCollisionProb[static_cast<std::size_t>(f)][static_cast<std::size_t>(action)]);
  const ObservationId obs = rng.bernoulli(kOccupancyProb[static_cast<std::size_t>(f)]) ? 1 : 0;
  const double reward =
      len * (1.0 + static_cast<double>(action)) - (collision ? map_.collision_penalty : 0.0);
  const int next_pos = pos + 1;
  const StateId next = static_cast<StateId>(tuple * (total_subsegments_ + 1) + next_pos);
  return {next, obs, reward, next_pos == total_subsegments_};
}

StateId VelocityRegulationModel::reinvigorate(StateId state, RandomStream& rng) const {
  const int pos = position_of(state);
  std::int64_t tuple = state / (total_subsegments_ + 1);
  const int seg = static_cast<int>(rng.next_below(static_cast<std::uint32_t>(num_segments_)));
  const std::int64_t p = pow3_[static_cast<std::size_t>(seg)];
  const int old_f = static_cast<int>((tuple / p) % 3);
  const int new_f = static_cast<int>(rng.next_below(3));
  tuple += static_cast<std::int64_t>(new_f - old_f) * p;
  return static_cast<StateId>(tuple * (total_subsegments_ + 1) + pos);
}

std::string VelocityRegulationModel::action_label(ActionId action) const {
  switch (action) {
    case 0:
      return "S0";
    case 1:
      return "S1";
    case 2:
      return "S2";
    default:
      throw std::invalid_argument("vr action out of range");
  }
}

int VelocityRegulationModel::selector_categories(int selector) const {
  if (selector < 0 || selector >= num_segments_) throw std::out_of_range("vr selector out of range");
  return 3;
}

int VelocityRegulationModel::project(int selector, StateId state) const {
  return difficulty_of(state, selector);
}

int VelocityRegulationModel::difficulty_of(StateId state, int segment) const {
  if (segment < 0 || segment >= num_segments_) throw std::out_of_range("vr segment out of range");
  const std::int64_t tuple = state / (total_subsegments_ + 1);
  return static_cast<int>((tuple / pow3_[static_cast<std::size_t>(segment)]) % 3);
}

const std::vector<std::string>& VelocityRegulationModel::category_labels(int selector) const {
  if (selector < 0 || selector >= num_segments_) throw std::out_of_range("vr selector out of range");
  return labels_;
}

int VelocityRegulationModel::context_selector(int step_index) const {
  const int pos = std::clamp(step_index, 0, total_subsegments_ - 1);
  return sub_segment_[static_cast<std::size_t>(pos)];
}

}  // namespace pomcpshield
