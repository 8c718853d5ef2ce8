#include "pomcpshield/rulelearn.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <string>
#include <utility>

#include "pomcpshield/model.hpp"

namespace pomcpshield {

namespace {

constexpr double kStrictEps = 1e-6;

struct UnionFind {
  std::vector<int> parent;

  explicit UnionFind(int n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }

  int find(int x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  }

  void unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a == b) return;
    if (a > b) std::swap(a, b);
    parent[b] = a;
  }
};

std::string requirement_text(const Requirement& req) {
  std::string op;
  switch (req.op) {
    case ReqOp::Eq: op = "="; break;
    case ReqOp::Lt: op = "<"; break;
    case ReqOp::Gt: op = ">"; break;
    case ReqOp::Le: op = "<="; break;
    case ReqOp::Ge: op = ">="; break;
  }
  std::string rhs = req.rhs.is_var ? req.rhs.var : format_number(req.rhs.constant);
  return req.lhs + " " + op + " " + rhs;
}

bool in_bounds(const VarClass& cls, double v) {
  if (v < cls.lo || (v == cls.lo && cls.lo_strict)) return false;
  if (v > cls.hi || (v == cls.hi && cls.hi_strict)) return false;
  return true;
}

void ensure_internal_supported(const MaxSmtProblem& p) {
  if (!p.unsupported_requirements.empty()) {
    throw std::invalid_argument("requirement '" + requirement_text(p.unsupported_requirements.front()) +
                                "' relates two variables by an inequality; the internal solver handles "
                                "only variable equalities and constant bounds (use the SMT-LIB backend)");
  }
}

void ensure_feasible(const MaxSmtProblem& p) {
  for (const VarClass& cls : p.classes) {
    if (cls.lo > cls.hi || (cls.lo == cls.hi && (cls.lo_strict || cls.hi_strict))) {
      throw UnsatError("hard constraints on variable '" + cls.vars.front() + "' are unsatisfiable: bounds " +
                       (cls.lo_strict ? "(" : "[") + format_number(cls.lo) + ", " + format_number(cls.hi) +
                       (cls.hi_strict ? ")" : "]") + " are empty");
    }
  }
}

// Distinct observed probabilities, the bound endpoints, and 0/1, filtered to
// the feasible interval: one representative per region where every atom
// involving the class keeps a constant truth value. When every atom points the
// same way and nothing is strict, truth combinations change only at observed
// values, so the regions are covered without midpoints. Mixed directions make
// atoms flip on opposite sides of an observed value, and strict atoms or
// strict bounds split regions at the values themselves; both need the open
// intervals between grid points represented, so midpoints are added.
std::vector<double> candidate_values(const VarClass& cls, std::vector<double> observed) {
  const bool with_midpoints = cls.strict_atoms || cls.lo_strict || cls.hi_strict ||
                              cls.direction == VarClass::Direction::Mixed;
  observed.push_back(0.0);
  observed.push_back(1.0);
  observed.push_back(cls.lo);
  observed.push_back(cls.hi);
  std::sort(observed.begin(), observed.end());
  observed.erase(std::unique(observed.begin(), observed.end()), observed.end());
  std::vector<double> out;
  out.reserve(observed.size() * 2);
  for (std::size_t i = 0; i < observed.size(); ++i) {
    if (in_bounds(cls, observed[i])) out.push_back(observed[i]);
    if (with_midpoints && i + 1 < observed.size()) {
      double mid = 0.5 * (observed[i] + observed[i + 1]);
      if (in_bounds(cls, mid)) out.push_back(mid);
    }
  }
  return out;
}

enum class ClauseStatus { Satisfied, Violated, Open };

// Status under a partial assignment: Satisfied/Violated when the clause truth
// is already determined, Open when some unassigned variable can still decide.
ClauseStatus clause_status(const GroundClause& cl, const std::vector<double>& vals,
                           const std::vector<char>& assigned) {
  bool any_true = false;
  bool all_false = true;
  for (const auto& conj : cl.disjuncts) {
    bool def_false = false;
    bool fully = true;
    for (const GroundAtom& a : conj) {
      if (!a.is_var) {
        if (!compare(a.lhs, a.cmp, a.constant)) {
          def_false = true;
          break;
        }
      } else if (assigned[a.var_class]) {
        if (!compare(a.lhs, a.cmp, vals[a.var_class])) {
          def_false = true;
          break;
        }
      } else {
        fully = false;
      }
    }
    if (def_false) continue;
    all_false = false;
    if (fully) {
      any_true = true;
      break;
    }
  }
  if (cl.negated) {
    if (any_true) return ClauseStatus::Violated;
    if (all_false) return ClauseStatus::Satisfied;
  } else {
    if (any_true) return ClauseStatus::Satisfied;
    if (all_false) return ClauseStatus::Violated;
  }
  return ClauseStatus::Open;
}

// Index in the ascending candidate list where the atom's truth flips (each
// atom is monotone along one variable axis, so it flips at most once).
std::size_t flip_index(const GroundAtom& a, const std::vector<double>& cand) {
  switch (a.cmp) {
    case Cmp::Ge:
      return std::upper_bound(cand.begin(), cand.end(), a.lhs) - cand.begin();
    case Cmp::Gt:
      return std::lower_bound(cand.begin(), cand.end(), a.lhs) - cand.begin();
    case Cmp::Le:
      return std::lower_bound(cand.begin(), cand.end(), a.lhs) - cand.begin();
    case Cmp::Lt:
      return std::upper_bound(cand.begin(), cand.end(), a.lhs) - cand.begin();
  }
  return cand.size();
}

// Number of clauses whose violation is already forced when the class `k` is
// set to each candidate in turn, on top of the current partial assignment.
// Event-driven: each atom of `k` flips once along the candidate axis, so each
// clause is re-examined only on its own segment boundaries.
std::vector<int> candidate_lower_bounds(const MaxSmtProblem& p, const std::vector<int>& ids,
                                        std::vector<double>& vals, std::vector<char>& assigned, int k,
                                        const std::vector<double>& cand) {
  int base = 0;
  std::vector<int> delta(cand.size() + 1, 0);
  std::vector<std::size_t> marks;
  for (int ci : ids) {
    const GroundClause& cl = p.clauses[ci];
    ClauseStatus st = clause_status(cl, vals, assigned);
    if (st == ClauseStatus::Violated) {
      ++base;
      continue;
    }
    if (st == ClauseStatus::Satisfied) continue;
    marks.clear();
    bool refs = false;
    for (const auto& conj : cl.disjuncts) {
      for (const GroundAtom& a : conj) {
        if (a.is_var && a.var_class == k) {
          refs = true;
          std::size_t flip = flip_index(a, cand);
          if (flip > 0 && flip < cand.size()) marks.push_back(flip);
        }
      }
    }
    if (!refs) continue;
    std::sort(marks.begin(), marks.end());
    marks.erase(std::unique(marks.begin(), marks.end()), marks.end());
    assigned[k] = 1;
    std::size_t start = 0;
    for (std::size_t seg = 0; seg <= marks.size(); ++seg) {
      std::size_t end = seg < marks.size() ? marks[seg] : cand.size();
      if (start < end) {
        vals[k] = cand[start];
        if (clause_status(cl, vals, assigned) == ClauseStatus::Violated) {
          ++delta[start];
          --delta[end];
        }
      }
      start = end;
    }
    assigned[k] = 0;
  }
  std::vector<int> out(cand.size());
  int acc = 0;
  for (std::size_t i = 0; i < cand.size(); ++i) {
    acc += delta[i];
    out[i] = acc + base;
  }
  return out;
}

// Lazy segment tree over candidate indices: range add, global min.
class MinTree {
 public:
  explicit MinTree(std::size_t n) : n_(n) {
    size_ = 1;
    while (size_ < n_) size_ <<= 1;
    mn_.assign(2 * size_, 0);
    lz_.assign(2 * size_, 0);
    for (std::size_t i = n_; i < size_; ++i) mn_[size_ + i] = kInf;
    for (std::size_t i = size_ - 1; i >= 1; --i) mn_[i] = std::min(mn_[2 * i], mn_[2 * i + 1]);
  }

  void add(int lo, int hi, int v) {
    if (lo > hi) return;
    add(1, 0, (int)size_ - 1, lo, hi, v);
  }

  int min_all() const { return mn_[1]; }

 private:
  static constexpr int kInf = std::numeric_limits<int>::max() / 4;

  void add(std::size_t node, int node_lo, int node_hi, int lo, int hi, int v) {
    if (hi < node_lo || node_hi < lo) return;
    if (lo <= node_lo && node_hi <= hi) {
      mn_[node] += v;
      lz_[node] += v;
      return;
    }
    int mid = node_lo + (node_hi - node_lo) / 2;
    add(2 * node, node_lo, mid, lo, hi, v);
    add(2 * node + 1, mid + 1, node_hi, lo, hi, v);
    mn_[node] = std::min(mn_[2 * node], mn_[2 * node + 1]) + lz_[node];
  }

  std::size_t n_;
  std::size_t size_;
  std::vector<int> mn_;
  std::vector<int> lz_;
};

// Restrict [lo, hi] (candidate indices) to where the atom holds.
void shrink_range(int& lo, int& hi, const GroundAtom& a, const std::vector<double>& cand) {
  std::size_t flip = flip_index(a, cand);
  switch (a.cmp) {
    case Cmp::Ge:
    case Cmp::Gt:
      hi = std::min(hi, (int)flip - 1);
      break;
    case Cmp::Le:
    case Cmp::Lt:
      lo = std::max(lo, (int)flip);
      break;
  }
}

class ComponentSolver {
 public:
  ComponentSolver(const MaxSmtProblem& p, std::vector<int> clause_ids, std::vector<int> class_ids,
                  std::vector<double>& vals, std::vector<char>& assigned)
      : p_(p),
        ids_(std::move(clause_ids)),
        classes_(std::move(class_ids)),
        vals_(vals),
        assigned_(assigned) {}

  void solve() {
    solve_cost(0);
    solve_canon(0);
  }

  int best_cost() const { return best_cost_; }
  const std::vector<int>& best_violated() const { return best_violated_; }
  const std::vector<double>& best_vals() const { return best_vals_; }

 private:
  std::vector<double> node_candidates(int k) const {
    std::vector<double> obs;
    for (int ci : ids_) {
      const GroundClause& cl = p_.clauses[ci];
      if (clause_status(cl, vals_, assigned_) != ClauseStatus::Open) continue;
      for (const auto& conj : cl.disjuncts)
        for (const GroundAtom& a : conj)
          if (a.is_var && a.var_class == k) obs.push_back(a.lhs);
    }
    return candidate_values(p_.classes[k], std::move(obs));
  }

  // Exact minimum over the two remaining classes, provided every open clause
  // reduces to a single open conjunction: each such clause contributes a
  // signed indicator over a rectangle of candidate pairs, swept along one
  // axis with a range-add/min tree over the other.
  bool try_sweep(int depth) {
    int ca = classes_[depth];
    int cb = classes_[depth + 1];
    int base = 0;
    std::vector<int> open_ids;
    std::vector<double> obs_a;
    std::vector<double> obs_b;
    for (int ci : ids_) {
      const GroundClause& cl = p_.clauses[ci];
      ClauseStatus st = clause_status(cl, vals_, assigned_);
      if (st == ClauseStatus::Violated) {
        ++base;
      } else if (st == ClauseStatus::Open) {
        open_ids.push_back(ci);
        for (const auto& conj : cl.disjuncts) {
          for (const GroundAtom& a : conj) {
            if (!a.is_var) continue;
            if (a.var_class == ca) obs_a.push_back(a.lhs);
            if (a.var_class == cb) obs_b.push_back(a.lhs);
          }
        }
      }
    }
    std::vector<double> cand_a = candidate_values(p_.classes[ca], std::move(obs_a));
    std::vector<double> cand_b = candidate_values(p_.classes[cb], std::move(obs_b));

    struct Term {
      int a_lo, a_hi, b_lo, b_hi, sign;
    };
    std::vector<Term> terms;
    for (int ci : open_ids) {
      const GroundClause& cl = p_.clauses[ci];
      const std::vector<GroundAtom>* open_conj = nullptr;
      int open_count = 0;
      for (const auto& conj : cl.disjuncts) {
        bool def_false = false;
        bool has_unassigned = false;
        for (const GroundAtom& a : conj) {
          if (!a.is_var) {
            if (!compare(a.lhs, a.cmp, a.constant)) {
              def_false = true;
              break;
            }
          } else if (assigned_[a.var_class]) {
            if (!compare(a.lhs, a.cmp, vals_[a.var_class])) {
              def_false = true;
              break;
            }
          } else {
            has_unassigned = true;
          }
        }
        if (def_false) continue;
        if (!has_unassigned) return false;  // fully determined conjunction inside an open clause
        ++open_count;
        open_conj = &conj;
      }
      if (open_count != 1) return false;
      Term t;
      t.a_lo = 0;
      t.a_hi = (int)cand_a.size() - 1;
      t.b_lo = 0;
      t.b_hi = (int)cand_b.size() - 1;
      t.sign = cl.negated ? 1 : -1;
      for (const GroundAtom& a : *open_conj) {
        if (!a.is_var || assigned_[a.var_class]) continue;
        if (a.var_class == ca)
          shrink_range(t.a_lo, t.a_hi, a, cand_a);
        else
          shrink_range(t.b_lo, t.b_hi, a, cand_b);
      }
      if (!cl.negated) ++base;  // violated unless its open conjunction holds
      if (t.a_lo > t.a_hi || t.b_lo > t.b_hi) continue;
      terms.push_back(t);
    }

    std::vector<std::vector<std::pair<int, int>>> events(cand_a.size() + 1);
    for (std::size_t ti = 0; ti < terms.size(); ++ti) {
      events[terms[ti].a_lo].push_back({(int)ti, 1});
      events[terms[ti].a_hi + 1].push_back({(int)ti, -1});
    }
    MinTree tree(cand_b.size());
    int best_here = std::numeric_limits<int>::max() / 4;
    for (std::size_t i = 0; i < cand_a.size(); ++i) {
      for (auto [ti, dir] : events[i]) {
        const Term& t = terms[ti];
        tree.add(t.b_lo, t.b_hi, dir * t.sign);
      }
      best_here = std::min(best_here, tree.min_all());
    }
    if (!cand_a.empty()) best_cost_ = std::min(best_cost_, base + best_here);
    return true;
  }

  void solve_cost(int depth) {
    int remaining = (int)classes_.size() - depth;
    if (remaining == 2 && try_sweep(depth)) return;
    int k = classes_[depth];
    std::vector<double> cand = node_candidates(k);
    std::vector<int> lb = candidate_lower_bounds(p_, ids_, vals_, assigned_, k, cand);
    // Explore restrictive values first so a near-optimal incumbent is found
    // early and the bound prunes the rest.
    bool desc = p_.classes[k].direction == VarClass::Direction::Lower;
    assigned_[k] = 1;
    for (std::size_t j = 0; j < cand.size(); ++j) {
      std::size_t i = desc ? cand.size() - 1 - j : j;
      if (lb[i] >= best_cost_) continue;
      if (remaining == 1) {
        best_cost_ = lb[i];  // with every class assigned the bound is exact
        continue;
      }
      vals_[k] = cand[i];
      solve_cost(depth + 1);
    }
    assigned_[k] = 0;
  }

  // Second pass: among all assignments achieving best_cost_, keep the one
  // whose sorted violated-index set is lexicographically smallest. Candidate
  // enumeration is ascending, making the choice deterministic.
  void solve_canon(int depth) {
    if (depth == (int)classes_.size()) {
      int cost = 0;
      std::vector<int> viol;
      for (int ci : ids_) {
        if (clause_violated(p_.clauses[ci], vals_)) {
          ++cost;
          viol.push_back(ci);
        }
      }
      if (cost != best_cost_) return;
      if (!have_ || viol < best_violated_) {
        have_ = true;
        best_violated_ = std::move(viol);
        best_vals_.clear();
        for (int k : classes_) best_vals_.push_back(vals_[k]);
      }
      return;
    }
    int k = classes_[depth];
    std::vector<double> cand = node_candidates(k);
    std::vector<int> lb = candidate_lower_bounds(p_, ids_, vals_, assigned_, k, cand);
    assigned_[k] = 1;
    for (std::size_t i = 0; i < cand.size(); ++i) {
      if (lb[i] > best_cost_) continue;
      vals_[k] = cand[i];
      solve_canon(depth + 1);
    }
    assigned_[k] = 0;
  }

  const MaxSmtProblem& p_;
  std::vector<int> ids_;
  std::vector<int> classes_;
  std::vector<double>& vals_;
  std::vector<char>& assigned_;
  int best_cost_ = std::numeric_limits<int>::max() / 4;
  bool have_ = false;
  std::vector<int> best_violated_;
  std::vector<double> best_vals_;
};

std::vector<std::vector<double>> observed_by_class(const MaxSmtProblem& p) {
  std::vector<std::vector<double>> obs(p.classes.size());
  for (const GroundClause& cl : p.clauses)
    for (const auto& conj : cl.disjuncts)
      for (const GroundAtom& a : conj)
        if (a.is_var) obs[a.var_class].push_back(a.lhs);
  return obs;
}

LearnedRule assemble(const MaxSmtProblem& p, const std::vector<double>& vals, int total,
                     std::vector<int> violated) {
  LearnedRule out;
  out.tmpl = p.tmpl;
  for (const auto& [var, cls] : p.var_class) out.assignment[var] = vals[cls];
  out.objective_value = total;
  std::sort(violated.begin(), violated.end());
  out.violated = std::move(violated);
  for (int ci : out.violated) {
    const GroundClause& cl = p.clauses[ci];
    out.violated_refs.push_back({cl.rule_index, cl.run_index, cl.step_index});
  }
  return out;
}

void apply_lower_bound(VarClass& cls, double c, bool strict) {
  if (c > cls.lo) {
    cls.lo = c;
    cls.lo_strict = strict;
  } else if (c == cls.lo && strict) {
    cls.lo_strict = true;
  }
}

void apply_upper_bound(VarClass& cls, double c, bool strict) {
  if (c < cls.hi) {
    cls.hi = c;
    cls.hi_strict = strict;
  } else if (c == cls.hi && strict) {
    cls.hi_strict = true;
  }
}

}  // namespace

bool clause_violated(const GroundClause& cl, const std::vector<double>& class_values) {
  bool dnf = false;
  for (const auto& conj : cl.disjuncts) {
    bool all = true;
    for (const GroundAtom& a : conj) {
      double rhs = a.is_var ? class_values[a.var_class] : a.constant;
      if (!compare(a.lhs, a.cmp, rhs)) {
        all = false;
        break;
      }
    }
    if (all) {
      dnf = true;
      break;
    }
  }
  return cl.negated ? dnf : !dnf;
}

int assignment_cost(const MaxSmtProblem& problem, const std::vector<double>& class_values) {
  int cost = 0;
  for (const GroundClause& cl : problem.clauses)
    if (clause_violated(cl, class_values)) ++cost;
  return cost;
}

Assignment to_assignment(const MaxSmtProblem& problem, const std::vector<double>& class_values) {
  Assignment out;
  for (const auto& [var, cls] : problem.var_class) out[var] = class_values[cls];
  return out;
}

MaxSmtProblem encode(const Trace& trace, const RuleTemplate& tmpl, const Model& model) {
  MaxSmtProblem p;
  p.tmpl = tmpl;
  resolve_actions(p.tmpl, model);

  const std::vector<std::string>& vars = p.tmpl.free_vars;
  std::map<std::string, int> var_index;
  for (int i = 0; i < (int)vars.size(); ++i) var_index[vars[i]] = i;

  UnionFind uf((int)vars.size());
  for (const Requirement& req : p.tmpl.requirements) {
    if (req.op == ReqOp::Eq && req.rhs.is_var) uf.unite(var_index.at(req.lhs), var_index.at(req.rhs.var));
  }

  std::map<int, int> root_class;
  for (const std::string& v : vars) {
    int root = uf.find(var_index.at(v));
    auto it = root_class.find(root);
    if (it == root_class.end()) {
      it = root_class.emplace(root, (int)p.classes.size()).first;
      p.classes.emplace_back();
    }
    p.classes[it->second].vars.push_back(v);
    p.var_class[v] = it->second;
  }

  for (const Requirement& req : p.tmpl.requirements) {
    if (req.rhs.is_var) {
      if (req.op != ReqOp::Eq) p.unsupported_requirements.push_back(req);
      continue;
    }
    VarClass& cls = p.classes[p.var_class.at(req.lhs)];
    double c = req.rhs.constant;
    switch (req.op) {
      case ReqOp::Eq:
        apply_lower_bound(cls, c, false);
        apply_upper_bound(cls, c, false);
        break;
      case ReqOp::Ge:
        apply_lower_bound(cls, c, false);
        break;
      case ReqOp::Gt:
        apply_lower_bound(cls, c, true);
        break;
      case ReqOp::Le:
        apply_upper_bound(cls, c, false);
        break;
      case ReqOp::Lt:
        apply_upper_bound(cls, c, true);
        break;
    }
  }

  std::vector<char> direction_seen(p.classes.size(), 0);
  for (const ActionRuleTemplate& rule : p.tmpl.action_rules) {
    for (const Conjunction& conj : rule.disjuncts) {
      for (const Atom& atom : conj) {
        if (!atom.rhs.is_var) continue;
        int ck = p.var_class.at(atom.rhs.var);
        VarClass::Direction d = (atom.cmp == Cmp::Ge || atom.cmp == Cmp::Gt)
                                    ? VarClass::Direction::Lower
                                    : VarClass::Direction::Upper;
        if (!direction_seen[ck]) {
          p.classes[ck].direction = d;
          direction_seen[ck] = true;
        } else if (p.classes[ck].direction != d) {
          p.classes[ck].direction = VarClass::Direction::Mixed;
        }
        if (atom.cmp == Cmp::Lt || atom.cmp == Cmp::Gt) p.classes[ck].strict_atoms = true;
      }
    }
  }

  std::map<int, std::vector<std::string>> label_cache;
  for (std::size_t ri = 0; ri < p.tmpl.action_rules.size(); ++ri) {
    const ActionRuleTemplate& rule = p.tmpl.action_rules[ri];
    for (std::size_t run_i = 0; run_i < trace.runs.size(); ++run_i) {
      const Run& run = trace.runs[run_i];
      for (std::size_t si = 0; si < run.size(); ++si) {
        const Step& step = run[si];
        int ctx = model.context_selector((int)si);
        if (ctx < 0 || ctx >= (int)step.beliefs.size()) {
          throw std::runtime_error("trace run " + std::to_string(run_i) + " step " + std::to_string(si) +
                                   " lacks selector " + std::to_string(ctx) +
                                   " required by the rule template");
        }
        auto lit = label_cache.find(ctx);
        if (lit == label_cache.end()) lit = label_cache.emplace(ctx, model.category_labels(ctx)).first;
        const ProbVector& probs = step.beliefs[ctx];
        GroundClause cl;
        cl.rule_index = (int)ri;
        cl.run_index = (int)run_i;
        cl.step_index = (int)si;
        cl.negated = step.action != rule.action;
        for (const Conjunction& conj : rule.disjuncts) {
          std::vector<GroundAtom> ground;
          ground.reserve(conj.size());
          for (const Atom& atom : conj) {
            GroundAtom ga;
            ga.lhs = selector_value(atom.sel, probs, lit->second);
            ga.cmp = atom.cmp;
            if (atom.rhs.is_var) {
              ga.is_var = true;
              ga.var_class = p.var_class.at(atom.rhs.var);
              ga.constant = 0.0;
            } else {
              ga.is_var = false;
              ga.var_class = -1;
              ga.constant = atom.rhs.constant;
            }
            ground.push_back(ga);
          }
          cl.disjuncts.push_back(std::move(ground));
        }
        p.clauses.push_back(std::move(cl));
      }
    }
  }
  return p;
}

LearnedRule solve_maxsmt(const MaxSmtProblem& p, TightenMode mode) {
  ensure_internal_supported(p);
  ensure_feasible(p);
  const int n = (int)p.classes.size();
  std::vector<double> vals(n, 0.0);
  std::vector<char> assigned(n, 0);

  UnionFind uf(n > 0 ? n : 1);
  std::vector<std::vector<int>> clause_classes(p.clauses.size());
  for (std::size_t ci = 0; ci < p.clauses.size(); ++ci) {
    std::vector<int>& cc = clause_classes[ci];
    for (const auto& conj : p.clauses[ci].disjuncts)
      for (const GroundAtom& a : conj)
        if (a.is_var) cc.push_back(a.var_class);
    std::sort(cc.begin(), cc.end());
    cc.erase(std::unique(cc.begin(), cc.end()), cc.end());
    for (std::size_t i = 1; i < cc.size(); ++i) uf.unite(cc[0], cc[i]);
  }

  int total = 0;
  std::vector<int> violated;
  std::map<int, std::vector<int>> comp_clauses;
  for (std::size_t ci = 0; ci < p.clauses.size(); ++ci) {
    if (clause_classes[ci].empty()) {
      if (clause_violated(p.clauses[ci], vals)) {
        ++total;
        violated.push_back((int)ci);
      }
    } else {
      comp_clauses[uf.find(clause_classes[ci][0])].push_back((int)ci);
    }
  }
  std::map<int, std::vector<int>> comp_classes;
  for (int k = 0; k < n; ++k) comp_classes[uf.find(k)].push_back(k);

  for (auto& [root, class_ids] : comp_classes) {
    auto it = comp_clauses.find(root);
    std::vector<int> ids = it == comp_clauses.end() ? std::vector<int>{} : it->second;
    ComponentSolver solver(p, std::move(ids), class_ids, vals, assigned);
    solver.solve();
    total += solver.best_cost();
    violated.insert(violated.end(), solver.best_violated().begin(), solver.best_violated().end());
    for (std::size_t i = 0; i < class_ids.size(); ++i) vals[class_ids[i]] = solver.best_vals()[i];
  }

  if (mode != TightenMode::None) vals = tighten(p, vals, mode);
  return assemble(p, vals, total, std::move(violated));
}

LearnedRule brute_force_oracle(const MaxSmtProblem& p, TightenMode mode, int max_vars) {
  ensure_internal_supported(p);
  ensure_feasible(p);
  const int n = (int)p.classes.size();
  if (n > max_vars) {
    throw std::invalid_argument("brute-force reference limited to " + std::to_string(max_vars) +
                                " merged variables, problem has " + std::to_string(n));
  }
  std::vector<std::vector<double>> obs = observed_by_class(p);
  std::vector<std::vector<double>> grids(n);
  for (int k = 0; k < n; ++k) grids[k] = candidate_values(p.classes[k], std::move(obs[k]));

  std::vector<std::size_t> idx(n, 0);
  std::vector<double> vals(n, 0.0);
  int best_cost = std::numeric_limits<int>::max();
  std::vector<int> best_viol;
  std::vector<double> best_vals(n, 0.0);
  bool done = false;
  while (!done) {
    for (int k = 0; k < n; ++k) vals[k] = grids[k][idx[k]];
    int cost = 0;
    std::vector<int> viol;
    for (std::size_t ci = 0; ci < p.clauses.size(); ++ci) {
      if (clause_violated(p.clauses[ci], vals)) {
        ++cost;
        viol.push_back((int)ci);
      }
    }
    if (cost < best_cost || (cost == best_cost && viol < best_viol)) {
      best_cost = cost;
      best_viol = std::move(viol);
      best_vals = vals;
    }
    done = true;
    for (int k = n - 1; k >= 0; --k) {
      if (++idx[k] < grids[k].size()) {
        done = false;
        break;
      }
      idx[k] = 0;
    }
    if (n == 0) break;
  }
  if (mode != TightenMode::None) best_vals = tighten(p, best_vals, mode);
  return assemble(p, best_vals, best_cost, std::move(best_viol));
}

std::vector<double> tighten(const MaxSmtProblem& p, std::vector<double> class_values, TightenMode mode) {
  if (mode == TightenMode::None || p.classes.empty()) return class_values;
  std::vector<char> truth(p.clauses.size());
  for (std::size_t ci = 0; ci < p.clauses.size(); ++ci)
    truth[ci] = !clause_violated(p.clauses[ci], class_values);

  std::vector<std::vector<double>> obs = observed_by_class(p);
  std::vector<std::vector<int>> clauses_of(p.classes.size());
  for (std::size_t ci = 0; ci < p.clauses.size(); ++ci) {
    std::vector<int> seen;
    for (const auto& conj : p.clauses[ci].disjuncts)
      for (const GroundAtom& a : conj)
        if (a.is_var) seen.push_back(a.var_class);
    std::sort(seen.begin(), seen.end());
    seen.erase(std::unique(seen.begin(), seen.end()), seen.end());
    for (int k : seen) clauses_of[k].push_back((int)ci);
  }

  for (std::size_t k = 0; k < p.classes.size(); ++k) {
    const VarClass& cls = p.classes[k];
    if (cls.direction == VarClass::Direction::Mixed) continue;
    bool up = (cls.direction == VarClass::Direction::Lower) == (mode == TightenMode::MostRestrictive);
    std::vector<double> cand;
    for (double v : obs[k]) {
      cand.push_back(v);
      cand.push_back(v - kStrictEps);
      cand.push_back(v + kStrictEps);
    }
    cand.push_back(cls.lo);
    cand.push_back(cls.lo + kStrictEps);
    cand.push_back(cls.hi);
    cand.push_back(cls.hi - kStrictEps);
    std::sort(cand.begin(), cand.end());
    cand.erase(std::unique(cand.begin(), cand.end()), cand.end());

    double current = class_values[k];
    double best = current;
    for (double v : cand) {
      if (up ? v <= best : v >= best) continue;
      if (!in_bounds(cls, v)) continue;
      class_values[k] = v;
      bool ok = true;
      for (int ci : clauses_of[k]) {
        if (!clause_violated(p.clauses[ci], class_values) != (bool)truth[ci]) {
          ok = false;
          break;
        }
      }
      class_values[k] = current;
      if (ok) best = v;
    }
    class_values[k] = best;
  }
  return class_values;
}

}  // namespace pomcpshield
