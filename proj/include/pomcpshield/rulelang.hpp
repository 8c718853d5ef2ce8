#pragma once

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "pomcpshield/belief.hpp"
#include "pomcpshield/model.hpp"

namespace pomcpshield {

struct RuleParseError : std::runtime_error {
  RuleParseError(const std::string& what, int line, int col);
  int line;
  int col;
};

// Reference to one probability in the context selector's marginal, either by
// category label (p_<label>) or by category index (diff(distr, seg, <i>)).
struct SelectorRef {
  enum class Kind { CategoryLabel, CategoryIndex };
  Kind kind = Kind::CategoryLabel;
  std::string label;
  int index = -1;

  bool operator==(const SelectorRef&) const = default;
};

enum class Cmp { Lt, Gt, Le, Ge };

// Right-hand side of an atom or requirement: a free variable or a constant.
struct Operand {
  bool is_var = false;
  std::string var;
  double constant = 0.0;

  static Operand variable(std::string name) { return {true, std::move(name), 0.0}; }
  static Operand literal(double value) { return {false, {}, value}; }

  bool operator==(const Operand&) const = default;
};

struct Atom {
  SelectorRef sel;
  Cmp cmp;
  Operand rhs;

  bool operator==(const Atom&) const = default;
};

using Conjunction = std::vector<Atom>;

struct ActionRuleTemplate {
  std::string rule_name;
  std::string action_label;
  ActionId action = -1;  // resolved when a model is supplied
  std::vector<Conjunction> disjuncts;

  bool operator==(const ActionRuleTemplate&) const = default;
};

enum class ReqOp { Eq, Lt, Gt, Le, Ge };

struct Requirement {
  std::string lhs;
  ReqOp op;
  Operand rhs;

  bool operator==(const Requirement&) const = default;
};

struct RuleTemplate {
  std::vector<ActionRuleTemplate> action_rules;
  std::vector<Requirement> requirements;
  std::vector<std::string> free_vars;  // in first-use order

  bool operator==(const RuleTemplate&) const = default;
};

using Assignment = std::map<std::string, double>;

struct Rule {
  RuleTemplate tmpl;
  Assignment assignment;
};

// Parses the rule-template grammar:
//   template := action_rule+ [ "where" requirement ("and" requirement)* ";" ]
//   action_rule := ID ":" "select" ID "when" body ";"
//   body := general and/or expression over atoms, parentheses allowed;
//           normalized to a disjunction of conjunctions
//   atom := selector CMP (VAR | NUM)
//   selector := "p_"<label> | "diff" "(" "distr" "," "seg" "," NUM ")"
// When a model is given, action labels are resolved to ids (unknown → error).
RuleTemplate parse_template(const std::string& text, const Model* model = nullptr);

void resolve_actions(RuleTemplate& tmpl, const Model& model);

// Renders a template back into the grammar; parse(pretty_print(t)) == t.
std::string pretty_print(const RuleTemplate& tmpl);

// Renders with every free variable replaced by its assigned value and the
// where-clause dropped; the result parses as a fully instantiated template.
std::string print_instantiated(const RuleTemplate& tmpl, const Assignment& assignment);

double operand_value(const Operand& op, const Assignment& assignment);

bool compare(double lhs, Cmp cmp, double rhs);

// Value of the referenced probability in `probs`, whose categories are named
// by `labels`.
double selector_value(const SelectorRef& sel, const ProbVector& probs,
                      const std::vector<std::string>& labels);

bool evaluate_conjunction(const Conjunction& conj, const Assignment& assignment,
                          const ProbVector& probs, const std::vector<std::string>& labels);

// Truth value of a disjunction-of-conjunctions body on one belief marginal.
bool evaluate_body(const std::vector<Conjunction>& disjuncts, const Assignment& assignment,
                   const ProbVector& probs, const std::vector<std::string>& labels);

bool requirement_holds(const Requirement& req, const Assignment& assignment);

bool requirements_hold(const RuleTemplate& tmpl, const Assignment& assignment);

// Shortest decimal string that parses back to exactly `v`.
std::string format_number(double v);

}  // namespace pomcpshield
