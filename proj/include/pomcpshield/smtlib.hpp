#pragma once

#include <map>
#include <string>

#include "pomcpshield/rulelearn.hpp"

namespace pomcpshield {

// Name of the relaxation literal guarding one obligation clause.
std::string dummy_name(const GroundClause& clause);

// Textual encoding of the learning problem: linear real arithmetic over the
// template variables plus one Bool per clause, each clause asserted as
// (or dummy body) with a unit-weight soft assertion that the dummy is false.
// Ends with (check-sat) and a (get-value ...) over variables and dummies.
std::string emit_smtlib(const MaxSmtProblem& problem);

struct SmtModel {
  std::map<std::string, double> reals;
  std::map<std::string, bool> bools;
};

// Parses the s-expression output of (get-value ...): symbols bound to
// decimals, rationals (/ a b), negations (- x), or true/false. A leading
// "sat" is skipped; "unsat" raises UnsatError.
SmtModel parse_smtlib_model(const std::string& text);

// Writes the encoding to a temporary file, runs `command <file>`, parses the
// model printed on stdout, and rebuilds the learned rule (tightening is done
// locally). The solver must minimize the soft-assertion weight.
LearnedRule solve_with_external(const MaxSmtProblem& problem, const std::string& command,
                                TightenMode mode = TightenMode::MostRestrictive);

}  // namespace pomcpshield
