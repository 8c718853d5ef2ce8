#pragma once

#include <vector>

#include "pomcpshield/belief.hpp"
#include "pomcpshield/model.hpp"
#include "pomcpshield/random.hpp"

namespace pomcpshield {

struct PlannerConfig {
  int num_simulations = 1 << 15;
  double uct_c = 1.0;       // exploration constant = reward range when set correctly
  double gamma = 0.95;
  int max_depth = 10;
};

struct RootEdge {
  ActionId action;
  int visits;
  double value;
};

// Monte-Carlo tree search over histories. Nodes live in a flat arena indexed
// by (node, action) and (node, action, observation) so a search allocates at
// most one arena growth per simulation. The tree persists across real steps
// via advance(), which re-roots on the taken action/observation branch.
class SearchTree {
 public:
  SearchTree(const Model& model, PlannerConfig config);

  // Runs config.num_simulations simulations from particles sampled out of
  // `belief`; root action selection is restricted to `legal`, deeper levels
  // are unrestricted. Returns the highest-value visited legal root action.
  ActionId search(const ParticleBelief& belief, const std::vector<ActionId>& legal,
                  RandomStream& rng);

  // Re-roots the tree on the (action, observation) child, compacting the
  // arena to the surviving subtree. Missing child resets to a fresh root.
  void advance(ActionId action, ObservationId observation);

  void reset();

  // Argmax over all root actions with at least one visit (lowest id on ties);
  // -1 if the root has no visited action. This ignores any legality
  // restriction, so after a shielded search it reports what the unrestricted
  // planner would have picked from the same statistics.
  ActionId unrestricted_root_argmax() const;

  std::vector<RootEdge> root_edges() const;
  int root_visits() const;
  int root_action_visits(ActionId a) const;
  double root_action_value(ActionId a) const;
  int node_count() const { return static_cast<int>(node_visits_.size()); }

  const PlannerConfig& config() const { return config_; }

 private:
  int new_node();
  double simulate(StateId state, int node, int depth, const std::vector<ActionId>& legal,
                  RandomStream& rng);
  double rollout(StateId state, int depth, RandomStream& rng);
  ActionId select_uct(int node, const std::vector<ActionId>& legal, bool restrict) const;

  const Model& model_;
  PlannerConfig config_;
  int num_actions_;
  int num_observations_;

  std::vector<int> node_visits_;
  std::vector<int> edge_visits_;     // node * A + a
  std::vector<double> edge_value_;   // node * A + a
  std::vector<int> children_;        // (node * A + a) * O + o, -1 when absent
  int root_ = -1;
};

}  // namespace pomcpshield
