#pragma once

#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "pomcpshield/rulelang.hpp"
#include "pomcpshield/trace.hpp"

namespace pomcpshield {

struct UnsatError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Atom with its selector replaced by the probability observed at one step.
struct GroundAtom {
  double lhs;
  Cmp cmp;
  bool is_var;
  int var_class;    // merged-class index when is_var
  double constant;  // when !is_var
};

// One (action rule, step) obligation: (dummy OR body). `negated` means the
// body is the negation of the grounded disjunction (the step took a different
// action). The dummy is true -- the step counts as violated -- exactly when
// the body is false under an assignment.
struct GroundClause {
  int rule_index;
  int run_index;
  int step_index;
  bool negated;
  std::vector<std::vector<GroundAtom>> disjuncts;
};

// Free variables merged through equality requirements, with the bounds the
// remaining requirements impose and the direction of the atoms they appear in.
struct VarClass {
  enum class Direction { Lower, Upper, Mixed };
  std::vector<std::string> vars;
  double lo = 0.0;
  double hi = 1.0;
  bool lo_strict = false;
  bool hi_strict = false;
  Direction direction = Direction::Mixed;
  bool strict_atoms = false;  // some < or > atom constrains this class
};

struct MaxSmtProblem {
  RuleTemplate tmpl;
  std::vector<GroundClause> clauses;
  std::vector<VarClass> classes;
  std::map<std::string, int> var_class;
  // Requirements the internal solver cannot express (inequalities between two
  // variables); the SMT-LIB emitter handles them, the internal solver refuses.
  std::vector<Requirement> unsupported_requirements;
};

struct ClauseRef {
  int rule_index;
  int run_index;
  int step_index;

  bool operator==(const ClauseRef&) const = default;
};

struct LearnedRule {
  RuleTemplate tmpl;
  Assignment assignment;
  int objective_value = 0;
  std::vector<int> violated;  // clause indices, ascending
  std::vector<ClauseRef> violated_refs;
};

enum class TightenMode { MostRestrictive, MostPermissive, None };

// Grounds every action rule against every step of the trace; one clause per
// (rule, step) pair, negated when the step's action differs from the rule's.
MaxSmtProblem encode(const Trace& trace, const RuleTemplate& tmpl, const Model& model);

bool clause_violated(const GroundClause& clause, const std::vector<double>& class_values);
int assignment_cost(const MaxSmtProblem& problem, const std::vector<double>& class_values);

// Exact minimization of the number of violated clauses, then threshold
// tightening. Ties on cost are broken toward the lexicographically smallest
// sorted violated-index set, which makes the result comparable across
// solving strategies. Throws UnsatError when the hard constraints conflict.
LearnedRule solve_maxsmt(const MaxSmtProblem& problem,
                         TightenMode mode = TightenMode::MostRestrictive);

// Independent exhaustive reference: evaluates every tuple of the candidate
// grid (observed values, midpoints, bounds, 0, 1). Refuses problems with more
// than `max_vars` merged classes.
LearnedRule brute_force_oracle(const MaxSmtProblem& problem,
                               TightenMode mode = TightenMode::MostRestrictive, int max_vars = 3);

// Moves each single-direction class to the extremal value that preserves
// every clause's truth value and the hard bounds, scanning observed values
// plus 1e-6-nudged variants for strict boundaries. Classes are processed in
// template variable order; mixed-direction classes are left untouched.
std::vector<double> tighten(const MaxSmtProblem& problem, std::vector<double> class_values,
                            TightenMode mode);

Assignment to_assignment(const MaxSmtProblem& problem, const std::vector<double>& class_values);

}  // namespace pomcpshield
