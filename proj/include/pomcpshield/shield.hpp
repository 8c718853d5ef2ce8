#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "pomcpshield/belief.hpp"
#include "pomcpshield/model.hpp"
#include "pomcpshield/random.hpp"
#include "pomcpshield/rulelang.hpp"
#include "pomcpshield/rulelearn.hpp"

namespace pomcpshield {

// Fully instantiated guard for one action: a variable-free body plus sampled
// representative distributions of the region where the body holds.
struct ShieldRule {
  std::string name;
  std::string action_label;
  ActionId action = -1;
  std::vector<Conjunction> body;
  std::vector<ProbVector> representatives;
};

struct Legality {
  std::vector<ActionId> actions;  // ascending
  bool fallback_used = false;
};

// Uniform samples from the simplex of `dim`-category distributions that
// satisfy the body, by rejection. Throws when fewer than `count` samples are
// accepted within count * 100000 draws (the rule region is infeasible or
// vanishingly small).
std::vector<ProbVector> sample_rule_region(const std::vector<Conjunction>& body, int dim,
                                           const std::vector<std::string>& labels, int count,
                                           RandomStream& rng);

// Online action filter. An action is legal when it has no rule, when its rule
// body holds on the context marginal, or when the Hellinger distance from the
// marginal to the nearest representative is strictly below tau. A rule
// without representatives skips the distance relaxation entirely. When every
// action is blocked the configured safe action is returned (fallback_used);
// without one, legal_actions throws.
class Shield {
 public:
  Shield(std::vector<ShieldRule> rules, double tau, std::optional<ActionId> safe_action);

  static Shield from_template(const RuleTemplate& instantiated, const Model& model, double tau,
                              std::optional<ActionId> safe_action, int representatives,
                              std::uint64_t seed);
  static Shield from_learned(const LearnedRule& learned, const Model& model, double tau,
                             std::optional<ActionId> safe_action, int representatives,
                             std::uint64_t seed);

  Legality legal_actions(int action_count, const ProbVector& context_probs,
                         const std::vector<std::string>& labels) const;

  // Smallest Hellinger distance from `probs` to the representatives of the
  // rule guarding `action`; throws when the action has no rule or the rule
  // has no representatives.
  double hellinger_margin(ActionId action, const ProbVector& probs) const;

  const std::vector<ShieldRule>& rules() const { return rules_; }
  double tau() const { return tau_; }
  std::optional<ActionId> safe_action() const { return safe_; }

  void save(std::ostream& out, const Model& model) const;
  void save_file(const std::string& path, const Model& model) const;
  static Shield load(std::istream& in, const Model& model);
  static Shield load_file(const std::string& path, const Model& model);

 private:
  std::vector<ShieldRule> rules_;
  std::map<ActionId, int> rule_of_action_;
  double tau_;
  std::optional<ActionId> safe_;
  int d_ = 0;             // representatives per rule, as configured
  std::uint64_t seed_ = 0;  // sampling seed, kept for the file header
};

}  // namespace pomcpshield
