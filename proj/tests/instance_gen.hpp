#pragma once

#include <string>
#include <vector>

#include "pomcpshield/model.hpp"
#include "pomcpshield/random.hpp"
#include "pomcpshield/rulelearn.hpp"
#include "pomcpshield/rulelang.hpp"
#include "pomcpshield/trace.hpp"

namespace testgen {

// Minimal two-action domain with one binary selector; only the pieces the
// rule machinery touches are meaningful.
class TwoCatModel final : public pomcpshield::Model {
 public:
  std::string name() const override { return "twocat"; }
  int action_count() const override { return 2; }
  int observation_count() const override { return 1; }
  double reward_range() const override { return 1.0; }
  int default_max_steps() const override { return 1; }
  pomcpshield::StateId sample_start(pomcpshield::RandomStream& rng) const override {
    return static_cast<pomcpshield::StateId>(rng.next_below(2));
  }
  pomcpshield::StepOutcome step(pomcpshield::StateId state, pomcpshield::ActionId,
                                pomcpshield::RandomStream&) const override {
    return {state, 0, 0.0, true};
  }
  std::string action_label(pomcpshield::ActionId action) const override {
    return action == 0 ? "A" : "B";
  }
  int selector_count() const override { return 1; }
  int selector_categories(int) const override { return 2; }
  int project(int, pomcpshield::StateId state) const override { return state == 0 ? 0 : 1; }
  const std::vector<std::string>& category_labels(int) const override {
    static const std::vector<std::string> labels{"x", "y"};
    return labels;
  }
};

// Random solvable instances for solver-vs-reference equivalence: 1-3 merged
// variables, every variable used in a single comparison direction (so the
// tightening pass is deterministic up to the candidate grid), probabilities on
// a coarse 0.05 grid to force ties, at most loose one-sided bounds, and no
// variable-variable inequalities. Size shrinks as the variable count grows to
// keep the exhaustive reference cheap.
struct GeneratedInstance {
  std::string template_text;
  pomcpshield::Trace trace;
};

inline GeneratedInstance random_instance(pomcpshield::RandomStream& rng) {
  using pomcpshield::RandomStream;
  auto grid = [&rng]() { return 0.05 * static_cast<double>(rng.next_below(21)); };

  const int nv = 1 + static_cast<int>(rng.next_below(3));
  int steps = 0;
  if (nv == 1) steps = 10 + static_cast<int>(rng.next_below(41));
  if (nv == 2) steps = 8 + static_cast<int>(rng.next_below(23));
  if (nv == 3) steps = 6 + static_cast<int>(rng.next_below(7));

  // direction[i]: true -> the variable only appears as a lower threshold
  // (p >= v / p > v), false -> only as an upper one.
  std::vector<bool> lower(nv);
  for (int i = 0; i < nv; ++i) lower[i] = rng.next_below(2) == 1;

  auto var_name = [](int i) { return "v" + std::to_string(i); };
  auto atom_with_var = [&](int i) {
    std::string sel = rng.next_below(2) == 0 ? "p_x" : "p_y";
    const char* cmp;
    if (lower[i]) {
      cmp = rng.next_below(2) == 0 ? ">=" : ">";
    } else {
      cmp = rng.next_below(2) == 0 ? "<=" : "<";
    }
    return sel + " " + cmp + " " + var_name(i);
  };
  auto atom_with_const = [&]() {
    std::string sel = rng.next_below(2) == 0 ? "p_x" : "p_y";
    static const char* kCmp[4] = {"<=", "<", ">=", ">"};
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%.2f", grid());
    return sel + " " + std::string(kCmp[rng.next_below(4)]) + " " + buf;
  };
  auto atom = [&]() {
    if (rng.next_below(10) < 7) return atom_with_var(static_cast<int>(rng.next_below(nv)));
    return atom_with_const();
  };

  std::vector<bool> used(nv, false);
  auto body = [&]() {
    int nd = 1 + static_cast<int>(rng.next_below(2));
    std::string out;
    for (int d = 0; d < nd; ++d) {
      int na = 1 + static_cast<int>(rng.next_below(2));
      std::string conj;
      for (int a = 0; a < na; ++a) {
        std::string at = atom();
        for (int i = 0; i < nv; ++i) {
          if (at.size() >= 2 && at.substr(at.size() - var_name(i).size()) == var_name(i))
            used[i] = true;
        }
        conj += (a ? " and " : "") + at;
      }
      if (nd > 1 && na > 1) conj = "(" + conj + ")";
      out += (d ? " or " : "") + conj;
    }
    return out;
  };

  std::string body_a = body();
  std::string body_b = body();
  for (int i = 0; i < nv; ++i) {
    if (!used[i]) body_a += " and " + atom_with_var(i);
  }
  std::string text;
  text += "ra: select A when " + body_a + ";\n";
  text += "rb: select B when " + body_b + ";\n";

  std::vector<std::string> reqs;
  for (int i = 1; i < nv; ++i) {
    if (lower[i] == lower[i - 1] && rng.next_below(10) < 4) {
      reqs.push_back(var_name(i - 1) + " = " + var_name(i));
    }
  }
  for (int i = 0; i < nv; ++i) {
    if (rng.next_below(10) >= 3) continue;
    if (lower[i]) {
      static const double kLo[3] = {0.0, 0.1, 0.2};
      char buf[16];
      std::snprintf(buf, sizeof(buf), "%.1f", kLo[rng.next_below(3)]);
      reqs.push_back(var_name(i) + (rng.next_below(2) == 0 ? " >= " : " > ") + buf);
    } else {
      static const double kHi[3] = {0.8, 0.9, 1.0};
      char buf[16];
      std::snprintf(buf, sizeof(buf), "%.1f", kHi[rng.next_below(3)]);
      reqs.push_back(var_name(i) + (rng.next_below(2) == 0 ? " <= " : " < ") + buf);
    }
  }
  if (!reqs.empty()) {
    text += "where " + reqs[0];
    for (std::size_t i = 1; i < reqs.size(); ++i) text += " and " + reqs[i];
    text += ";\n";
  }

  GeneratedInstance inst;
  inst.template_text = text;
  inst.trace.domain = "twocat";
  inst.trace.particles = 1;
  inst.trace.c = 1.0;
  inst.trace.seed = 1;
  const int runs = 1 + static_cast<int>(rng.next_below(2));
  inst.trace.runs.resize(runs);
  for (int r = 0; r < runs; ++r) {
    for (int s = 0; s < (steps + r) / runs; ++s) {
      pomcpshield::Step st;
      double p = grid();
      st.beliefs.push_back({p, 1.0 - p});
      st.action = static_cast<pomcpshield::ActionId>(rng.next_below(2));
      st.observation = 0;
      inst.trace.runs[r].push_back(std::move(st));
    }
  }
  return inst;
}

}  // namespace testgen
