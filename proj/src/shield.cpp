#include "pomcpshield/shield.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <utility>

namespace pomcpshield {

namespace {

const Assignment kNoAssignment;

double min_distance(const ShieldRule& rule, const ProbVector& probs) {
  double best = std::numeric_limits<double>::infinity();
  for (const ProbVector& rep : rule.representatives) {
    best = std::min(best, hellinger(probs, rep));
  }
  return best;
}

RuleTemplate template_of(const std::vector<ShieldRule>& rules) {
  RuleTemplate tmpl;
  for (const ShieldRule& rule : rules) {
    ActionRuleTemplate art;
    art.rule_name = rule.name;
    art.action_label = rule.action_label;
    art.action = rule.action;
    art.disjuncts = rule.body;
    tmpl.action_rules.push_back(std::move(art));
  }
  return tmpl;
}

std::string read_header_line(std::istream& in, const std::string& key) {
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line.rfind(key + " ", 0) != 0) {
      throw std::runtime_error("shield file: expected header key '" + key + "', got '" + line +
                               "'");
    }
    return line.substr(key.size() + 1);
  }
  throw std::runtime_error("shield file: missing header key '" + key + "'");
}

double parse_double(const std::string& text, const std::string& what) {
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (used != text.size()) throw std::invalid_argument(text);
    return v;
  } catch (const std::exception&) {
    throw std::runtime_error("shield file: bad " + what + " value '" + text + "'");
  }
}

long long parse_integer(const std::string& text, const std::string& what) {
  try {
    std::size_t used = 0;
    const long long v = std::stoll(text, &used);
    if (used != text.size()) throw std::invalid_argument(text);
    return v;
  } catch (const std::exception&) {
    throw std::runtime_error("shield file: bad " + what + " value '" + text + "'");
  }
}

}  // namespace

std::vector<ProbVector> sample_rule_region(const std::vector<Conjunction>& body, int dim,
                                           const std::vector<std::string>& labels, int count,
                                           RandomStream& rng) {
  if (dim < 1) throw std::invalid_argument("sample_rule_region: dim must be positive");
  if (count < 0) throw std::invalid_argument("sample_rule_region: count must be non-negative");
  std::vector<ProbVector> accepted;
  accepted.reserve(static_cast<std::size_t>(count));
  const long long budget = static_cast<long long>(count) * 100000LL;
  ProbVector candidate(static_cast<std::size_t>(dim));
  for (long long draw = 0; draw < budget && static_cast<int>(accepted.size()) < count; ++draw) {
    // Uniform on the simplex: normalized exponentials.
    double sum = 0.0;
    for (double& g : candidate) {
      g = -std::log(1.0 - rng.next_double());
      sum += g;
    }
    if (sum <= 0.0) continue;
    for (double& g : candidate) g /= sum;
    if (evaluate_body(body, kNoAssignment, candidate, labels)) accepted.push_back(candidate);
  }
  if (static_cast<int>(accepted.size()) < count) {
    throw std::runtime_error("rule region is infeasible or near-infeasible: accepted " +
                             std::to_string(accepted.size()) + " of " + std::to_string(count) +
                             " representatives within the sampling budget");
  }
  return accepted;
}

Shield::Shield(std::vector<ShieldRule> rules, double tau, std::optional<ActionId> safe_action)
    : rules_(std::move(rules)), tau_(tau), safe_(safe_action) {
  if (!(tau_ >= 0.0 && tau_ <= 1.0)) {
    throw std::invalid_argument("shield tau must lie in [0, 1]");
  }
  for (int i = 0; i < static_cast<int>(rules_.size()); ++i) {
    const ShieldRule& rule = rules_[i];
    if (rule.action < 0) {
      throw std::invalid_argument("shield rule '" + rule.name + "' has an unresolved action");
    }
    if (!rule_of_action_.emplace(rule.action, i).second) {
      throw std::invalid_argument("shield has two rules for action '" + rule.action_label + "'");
    }
    for (const ProbVector& rep : rule.representatives) {
      if (!is_prob_vector(rep)) {
        throw std::invalid_argument("shield rule '" + rule.name +
                                    "' has a representative that is not a distribution");
      }
    }
    d_ = std::max(d_, static_cast<int>(rule.representatives.size()));
  }
}

Shield Shield::from_template(const RuleTemplate& instantiated, const Model& model, double tau,
                             std::optional<ActionId> safe_action, int representatives,
                             std::uint64_t seed) {
  if (!instantiated.free_vars.empty()) {
    throw std::invalid_argument("shield template still has free variable '" +
                                instantiated.free_vars.front() +
                                "'; instantiate it with an assignment first");
  }
  RuleTemplate resolved = instantiated;
  resolve_actions(resolved, model);

  const int ctx = model.context_selector(0);
  const int dim = model.selector_categories(ctx);
  const std::vector<std::string>& labels = model.category_labels(ctx);

  RandomStream rng(seed);
  std::vector<ShieldRule> rules;
  rules.reserve(resolved.action_rules.size());
  for (const ActionRuleTemplate& art : resolved.action_rules) {
    ShieldRule rule;
    rule.name = art.rule_name;
    rule.action_label = art.action_label;
    rule.action = art.action;
    rule.body = art.disjuncts;
    if (representatives > 0) {
      try {
        rule.representatives = sample_rule_region(rule.body, dim, labels, representatives, rng);
      } catch (const std::runtime_error& e) {
        throw std::runtime_error("rule '" + rule.name + "': " + e.what());
      }
    }
    rules.push_back(std::move(rule));
  }

  Shield shield(std::move(rules), tau, safe_action);
  shield.d_ = representatives;
  shield.seed_ = seed;
  return shield;
}

Shield Shield::from_learned(const LearnedRule& learned, const Model& model, double tau,
                            std::optional<ActionId> safe_action, int representatives,
                            std::uint64_t seed) {
  RuleTemplate instantiated = learned.tmpl;
  for (ActionRuleTemplate& art : instantiated.action_rules) {
    for (Conjunction& conj : art.disjuncts) {
      for (Atom& atom : conj) {
        if (!atom.rhs.is_var) continue;
        const auto it = learned.assignment.find(atom.rhs.var);
        if (it == learned.assignment.end()) {
          throw std::invalid_argument("learned rule assignment lacks a value for variable '" +
                                      atom.rhs.var + "'");
        }
        atom.rhs = Operand::literal(it->second);
      }
    }
  }
  instantiated.requirements.clear();
  instantiated.free_vars.clear();
  return from_template(instantiated, model, tau, safe_action, representatives, seed);
}

Legality Shield::legal_actions(int action_count, const ProbVector& context_probs,
                               const std::vector<std::string>& labels) const {
  Legality result;
  for (ActionId a = 0; a < action_count; ++a) {
    const auto it = rule_of_action_.find(a);
    if (it == rule_of_action_.end()) {
      result.actions.push_back(a);
      continue;
    }
    const ShieldRule& rule = rules_[static_cast<std::size_t>(it->second)];
    if (evaluate_body(rule.body, kNoAssignment, context_probs, labels)) {
      result.actions.push_back(a);
      continue;
    }
    if (!rule.representatives.empty() && min_distance(rule, context_probs) < tau_) {
      result.actions.push_back(a);
    }
  }
  if (result.actions.empty()) {
    if (!safe_.has_value()) {
      throw std::runtime_error("no legal action: the shield blocked every action and no safe "
                               "action is configured");
    }
    result.actions.push_back(*safe_);
    result.fallback_used = true;
  }
  return result;
}

double Shield::hellinger_margin(ActionId action, const ProbVector& probs) const {
  const auto it = rule_of_action_.find(action);
  if (it == rule_of_action_.end()) {
    throw std::runtime_error("hellinger_margin: no rule guards action " + std::to_string(action));
  }
  const ShieldRule& rule = rules_[static_cast<std::size_t>(it->second)];
  if (rule.representatives.empty()) {
    throw std::runtime_error("hellinger_margin: rule '" + rule.name + "' has no representatives");
  }
  return min_distance(rule, probs);
}

void Shield::save(std::ostream& out, const Model& model) const {
  out << "tau " << format_number(tau_) << "\n";
  out << "safe_action " << (safe_ ? model.action_label(*safe_) : std::string("none")) << "\n";
  out << "d " << d_ << "\n";
  out << "seed " << seed_ << "\n";
  out << "rules " << rules_.size() << "\n";
  out << pretty_print(template_of(rules_));
  for (const ShieldRule& rule : rules_) {
    if (rule.representatives.empty()) continue;
    const std::size_t dim = rule.representatives.front().size();
    out << "representatives " << rule.name << " " << rule.representatives.size() << " " << dim
        << "\n";
    for (const ProbVector& rep : rule.representatives) {
      for (std::size_t i = 0; i < rep.size(); ++i) {
        if (i) out << " ";
        out << format_number(rep[i]);
      }
      out << "\n";
    }
  }
}

void Shield::save_file(const std::string& path, const Model& model) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write shield file '" + path + "'");
  save(out, model);
  if (!out) throw std::runtime_error("error while writing shield file '" + path + "'");
}

Shield Shield::load(std::istream& in, const Model& model) {
  const double tau = parse_double(read_header_line(in, "tau"), "tau");
  const std::string safe_label = read_header_line(in, "safe_action");
  const long long d = parse_integer(read_header_line(in, "d"), "d");
  const long long seed = parse_integer(read_header_line(in, "seed"), "seed");
  const long long rule_count = parse_integer(read_header_line(in, "rules"), "rules");

  std::optional<ActionId> safe;
  if (safe_label != "none") safe = model.action_from_label(safe_label);

  // The rule statements run until the first representatives block (or EOF).
  std::string rule_text;
  std::string pending;  // first "representatives ..." line, if any
  std::string line;
  while (std::getline(in, line)) {
    if (line.rfind("representatives ", 0) == 0) {
      pending = line;
      break;
    }
    rule_text += line;
    rule_text += "\n";
  }
  RuleTemplate tmpl = parse_template(rule_text, &model);
  if (static_cast<long long>(tmpl.action_rules.size()) != rule_count) {
    throw std::runtime_error("shield file: header declares " + std::to_string(rule_count) +
                             " rules but the body has " +
                             std::to_string(tmpl.action_rules.size()));
  }
  if (!tmpl.free_vars.empty()) {
    throw std::runtime_error("shield file: rule has uninstantiated variable '" +
                             tmpl.free_vars.front() + "'");
  }

  std::vector<ShieldRule> rules;
  rules.reserve(tmpl.action_rules.size());
  for (const ActionRuleTemplate& art : tmpl.action_rules) {
    ShieldRule rule;
    rule.name = art.rule_name;
    rule.action_label = art.action_label;
    rule.action = art.action;
    rule.body = art.disjuncts;
    rules.push_back(std::move(rule));
  }

  const int ctx = model.context_selector(0);
  const std::vector<std::string>& labels = model.category_labels(ctx);

  while (!pending.empty()) {
    std::istringstream head(pending);
    std::string keyword, name;
    long long count = 0, dim = 0;
    head >> keyword >> name >> count >> dim;
    if (!head || keyword != "representatives" || count < 0 || dim < 1) {
      throw std::runtime_error("shield file: malformed representatives header '" + pending + "'");
    }
    auto rule_it = std::find_if(rules.begin(), rules.end(),
                                [&](const ShieldRule& r) { return r.name == name; });
    if (rule_it == rules.end()) {
      throw std::runtime_error("shield file: representatives for unknown rule '" + name + "'");
    }
    if (dim != model.selector_categories(ctx)) {
      throw std::runtime_error("shield file: rule '" + name + "' representatives have " +
                               std::to_string(dim) + " categories but domain " + model.name() +
                               " expects " + std::to_string(model.selector_categories(ctx)));
    }
    rule_it->representatives.clear();
    rule_it->representatives.reserve(static_cast<std::size_t>(count));
    for (long long r = 0; r < count; ++r) {
      if (!std::getline(in, line)) {
        throw std::runtime_error("shield file: rule '" + name + "' promises " +
                                 std::to_string(count) + " representatives but the file ends");
      }
      std::istringstream row(line);
      ProbVector rep(static_cast<std::size_t>(dim));
      for (double& v : rep) row >> v;
      std::string trailing;
      if (!row || (row >> trailing)) {
        throw std::runtime_error("shield file: rule '" + name +
                                 "' has a malformed representative line '" + line + "'");
      }
      if (!is_prob_vector(rep)) {
        throw std::runtime_error("shield file: rule '" + name +
                                 "' has a representative that is not a distribution");
      }
      if (!evaluate_body(rule_it->body, kNoAssignment, rep, labels)) {
        throw std::runtime_error("shield file: rule '" + name +
                                 "' has a representative outside the rule region");
      }
      rule_it->representatives.push_back(std::move(rep));
    }
    pending.clear();
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      if (line.rfind("representatives ", 0) != 0) {
        throw std::runtime_error("shield file: unexpected line '" + line + "'");
      }
      pending = line;
      break;
    }
  }

  Shield shield(std::move(rules), tau, safe);
  shield.d_ = static_cast<int>(d);
  shield.seed_ = static_cast<std::uint64_t>(seed);
  return shield;
}

Shield Shield::load_file(const std::string& path, const Model& model) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open shield file '" + path + "'");
  return load(in, model);
}

}  // namespace pomcpshield
