#include "pomcpshield/planner.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace pomcpshield {

SearchTree::SearchTree(const Model& model, PlannerConfig config)
    : model_(model),
      config_(config),
      num_actions_(model.action_count()),
      num_observations_(model.observation_count()) {
  if (config_.num_simulations < 1) throw std::invalid_argument("num_simulations must be >= 1");
  if (!(config_.uct_c >= 0.0)) throw std::invalid_argument("uct exploration constant must be >= 0");
  if (!(config_.gamma >= 0.0 && config_.gamma <= 1.0)) {
    throw std::invalid_argument("gamma must lie in [0,1]");
  }
  if (config_.max_depth < 1) throw std::invalid_argument("max_depth must be >= 1");
  node_visits_.reserve(static_cast<std::size_t>(config_.num_simulations) + 2);
  reset();
}

void SearchTree::reset() {
  node_visits_.clear();
  edge_visits_.clear();
  edge_value_.clear();
  children_.clear();
  root_ = new_node();
}

int SearchTree::new_node() {
  const int id = static_cast<int>(node_visits_.size());
  node_visits_.push_back(0);
  edge_visits_.insert(edge_visits_.end(), static_cast<std::size_t>(num_actions_), 0);
  edge_value_.insert(edge_value_.end(), static_cast<std::size_t>(num_actions_), 0.0);
  children_.insert(children_.end(), static_cast<std::size_t>(num_actions_ * num_observations_), -1);
  return id;
}

ActionId SearchTree::select_uct(int node, const std::vector<ActionId>& legal, bool restrict) const {
  const std::size_t base = static_cast<std::size_t>(node) * static_cast<std::size_t>(num_actions_);
  // Unvisited actions take priority, lowest id first.
  if (restrict) {
    for (ActionId a : legal) {
      if (edge_visits_[base + static_cast<std::size_t>(a)] == 0) return a;
    }
  } else {
    for (ActionId a = 0; a < num_actions_; ++a) {
      if (edge_visits_[base + static_cast<std::size_t>(a)] == 0) return a;
    }
  }
  const double log_n = std::log(static_cast<double>(node_visits_[static_cast<std::size_t>(node)]));
  ActionId best = -1;
  double best_score = -std::numeric_limits<double>::infinity();
  auto consider = [&](ActionId a) {
    const std::size_t e = base + static_cast<std::size_t>(a);
    const double score =
        edge_value_[e] + config_.uct_c * std::sqrt(log_n / static_cast<double>(edge_visits_[e]));
    if (score > best_score) {
      best_score = score;
      best = a;
    }
  };
  if (restrict) {
    for (ActionId a : legal) consider(a);
  } else {
    for (ActionId a = 0; a < num_actions_; ++a) consider(a);
  }
  return best;
}

double SearchTree::rollout(StateId state, int depth, RandomStream& rng) {
  double acc = 0.0;
  double disc = 1.0;
  while (depth < config_.max_depth) {
    const ActionId a = static_cast<ActionId>(rng.next_below(static_cast<std::uint32_t>(num_actions_)));
    const StepOutcome out = model_.step(state, a, rng);
    acc += disc * out.reward;
    if (out.terminal) break;
    disc *= config_.gamma;
    state = out.next_state;
    ++depth;
  }
  return acc;
}

double SearchTree::simulate(StateId state, int node, int depth, const std::vector<ActionId>& legal,
                            RandomStream& rng) {
  const ActionId a = select_uct(node, legal, depth == 0);
  const StepOutcome out = model_.step(state, a, rng);
  double ret = out.reward;
  if (!out.terminal && depth + 1 < config_.max_depth) {
    const std::size_t slot =
        (static_cast<std::size_t>(node) * static_cast<std::size_t>(num_actions_) +
         static_cast<std::size_t>(a)) *
            static_cast<std::size_t>(num_observations_) +
        static_cast<std::size_t>(out.observation);
    int child = children_[slot];
    if (child < 0) {
      child = new_node();
      children_[slot] = child;
      ret += config_.gamma * rollout(out.next_state, depth + 1, rng);
    } else {
      ret += config_.gamma * simulate(out.next_state, child, depth + 1, legal, rng);
    }
  }
  const std::size_t e =
      static_cast<std::size_t>(node) * static_cast<std::size_t>(num_actions_) + static_cast<std::size_t>(a);
  node_visits_[static_cast<std::size_t>(node)] += 1;
  edge_visits_[e] += 1;
  edge_value_[e] += (ret - edge_value_[e]) / static_cast<double>(edge_visits_[e]);
  return ret;
}

ActionId SearchTree::search(const ParticleBelief& belief, const std::vector<ActionId>& legal,
                            RandomStream& rng) {
  if (legal.empty()) throw std::invalid_argument("search: empty legal action set");
  for (ActionId a : legal) {
    if (a < 0 || a >= num_actions_) throw std::invalid_argument("search: legal action out of range");
  }
  if (belief.empty()) throw std::invalid_argument("search: empty belief");
  for (int i = 0; i < config_.num_simulations; ++i) {
    const StateId s = belief.sample(rng);
    simulate(s, root_, 0, legal, rng);
  }
  ActionId best = -1;
  double best_value = -std::numeric_limits<double>::infinity();
  const std::size_t base = static_cast<std::size_t>(root_) * static_cast<std::size_t>(num_actions_);
  for (ActionId a : legal) {
    const std::size_t e = base + static_cast<std::size_t>(a);
    if (edge_visits_[e] > 0 && edge_value_[e] > best_value) {
      best_value = edge_value_[e];
      best = a;
    }
  }
  if (best < 0) best = legal.front();
  return best;
}

void SearchTree::advance(ActionId action, ObservationId observation) {
  if (action < 0 || action >= num_actions_ || observation < 0 ||
      observation >= num_observations_) {
    throw std::invalid_argument("advance: action or observation out of range");
  }
  const std::size_t slot =
      (static_cast<std::size_t>(root_) * static_cast<std::size_t>(num_actions_) +
       static_cast<std::size_t>(action)) *
          static_cast<std::size_t>(num_observations_) +
      static_cast<std::size_t>(observation);
  const int sub = children_[slot];
  if (sub < 0) {
    reset();
    return;
  }
  // Compacting copy of the surviving subtree, breadth-first so the new root is node 0.
  std::vector<int> order;
  order.reserve(node_visits_.size());
  order.push_back(sub);
  std::vector<int> old_to_new(node_visits_.size(), -1);
  old_to_new[static_cast<std::size_t>(sub)] = 0;
  for (std::size_t i = 0; i < order.size(); ++i) {
    const int old_node = order[i];
    const std::size_t cbase = static_cast<std::size_t>(old_node) *
                              static_cast<std::size_t>(num_actions_ * num_observations_);
    for (int k = 0; k < num_actions_ * num_observations_; ++k) {
      const int c = children_[cbase + static_cast<std::size_t>(k)];
      if (c >= 0) {
        old_to_new[static_cast<std::size_t>(c)] = static_cast<int>(order.size());
        order.push_back(c);
      }
    }
  }
  std::vector<int> nv(order.size());
  std::vector<int> ev(order.size() * static_cast<std::size_t>(num_actions_));
  std::vector<double> eval(order.size() * static_cast<std::size_t>(num_actions_));
  std::vector<int> ch(order.size() * static_cast<std::size_t>(num_actions_ * num_observations_));
  for (std::size_t n = 0; n < order.size(); ++n) {
    const int old_node = order[n];
    nv[n] = node_visits_[static_cast<std::size_t>(old_node)];
    for (int a = 0; a < num_actions_; ++a) {
      const std::size_t oe =
          static_cast<std::size_t>(old_node) * static_cast<std::size_t>(num_actions_) +
          static_cast<std::size_t>(a);
      const std::size_t ne = n * static_cast<std::size_t>(num_actions_) + static_cast<std::size_t>(a);
      ev[ne] = edge_visits_[oe];
      eval[ne] = edge_value_[oe];
    }
    for (int k = 0; k < num_actions_ * num_observations_; ++k) {
      const std::size_t oc = static_cast<std::size_t>(old_node) *
                                 static_cast<std::size_t>(num_actions_ * num_observations_) +
                             static_cast<std::size_t>(k);
      const std::size_t nc =
          n * static_cast<std::size_t>(num_actions_ * num_observations_) + static_cast<std::size_t>(k);
      const int c = children_[oc];
      ch[nc] = c >= 0 ? old_to_new[static_cast<std::size_t>(c)] : -1;
    }
  }
  node_visits_ = std::move(nv);
  edge_visits_ = std::move(ev);
  edge_value_ = std::move(eval);
  children_ = std::move(ch);
  root_ = 0;
}

ActionId SearchTree::unrestricted_root_argmax() const {
  const std::size_t base = static_cast<std::size_t>(root_) * static_cast<std::size_t>(num_actions_);
  ActionId best = -1;
  double best_value = -std::numeric_limits<double>::infinity();
  for (ActionId a = 0; a < num_actions_; ++a) {
    const std::size_t e = base + static_cast<std::size_t>(a);
    if (edge_visits_[e] > 0 && edge_value_[e] > best_value) {
      best_value = edge_value_[e];
      best = a;
    }
  }
  return best;
}

std::vector<RootEdge> SearchTree::root_edges() const {
  std::vector<RootEdge> out;
  const std::size_t base = static_cast<std::size_t>(root_) * static_cast<std::size_t>(num_actions_);
  for (ActionId a = 0; a < num_actions_; ++a) {
    const std::size_t e = base + static_cast<std::size_t>(a);
    out.push_back({a, edge_visits_[e], edge_value_[e]});
  }
  return out;
}

int SearchTree::root_visits() const { return node_visits_[static_cast<std::size_t>(root_)]; }

int SearchTree::root_action_visits(ActionId a) const {
  return edge_visits_[static_cast<std::size_t>(root_) * static_cast<std::size_t>(num_actions_) +
                      static_cast<std::size_t>(a)];
}

double SearchTree::root_action_value(ActionId a) const {
  return edge_value_[static_cast<std::size_t>(root_) * static_cast<std::size_t>(num_actions_) +
                     static_cast<std::size_t>(a)];
}

}  // namespace pomcpshield
