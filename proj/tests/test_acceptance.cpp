#define DOCTEST_CONFIG_IMPLEMENT
#include <doctest.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "instance_gen.hpp"
#include "pomcpshield/experiment.hpp"
#include "pomcpshield/rulelearn.hpp"
#include "pomcpshield/shield.hpp"
#include "pomcpshield/stats.hpp"
#include "pomcpshield/tiger.hpp"
#include "pomcpshield/velocity_regulation.hpp"
#include "pomcpshield/xes.hpp"
#include "test_util.hpp"

using namespace pomcpshield;

namespace {

std::string g_cli;
std::string g_templates;

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

bool report(int n, const char* name, bool ok, double seconds = -1.0) {
  if (seconds >= 0.0) {
    std::printf("[%s] criterion %d: %s (%.1f s)\n", ok ? "PASS" : "FAIL", n, name, seconds);
  } else {
    std::printf("[%s] criterion %d: %s\n", ok ? "PASS" : "FAIL", n, name);
  }
  std::fflush(stdout);
  return ok;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  REQUIRE(in.good());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

struct PairOutcome {
  double c = 0.0;
  int pairs = 0;
  double u_mean = 0.0;
  double s_mean = 0.0;
  int sa = 0;
  PairedTResult t;
  EpisodeStats u;
  EpisodeStats s;
};

void finalize_pair(PairOutcome& out) {
  const std::vector<int> idx = completed_pair_indices(out.u, out.s);
  std::vector<double> ur, sr;
  ur.reserve(idx.size());
  sr.reserve(idx.size());
  for (int i : idx) {
    ur.push_back(out.u.runs[static_cast<std::size_t>(i)].ret);
    sr.push_back(out.s.runs[static_cast<std::size_t>(i)].ret);
  }
  out.pairs = static_cast<int>(idx.size());
  out.u_mean = mean(ur);
  out.s_mean = mean(sr);
  out.sa = out.s.interventions;
  if (out.pairs >= 2) out.t = paired_t_test(ur, sr);
  std::printf("[acceptance]   c=%-7g pairs=%-4d unshielded=%-8.3f shielded=%-8.3f sa=%-4d t=%.2f%s\n",
              out.c, out.pairs, out.u_mean, out.s_mean, out.sa, out.t.t,
              out.t.significant ? " *" : "");
  std::fflush(stdout);
}

PairOutcome make_pair(const Model& model, EpisodeConfig cfg, const Shield& shield, double c) {
  cfg.uct_c = c;
  PairOutcome out;
  out.c = c;
  std::printf("[acceptance] %s: unshielded arm at c=%g\n", model.name().c_str(), c);
  std::fflush(stdout);
  out.u = run_episodes(model, cfg, nullptr, nullptr);
  std::printf("[acceptance] %s: shielded arm at c=%g\n", model.name().c_str(), c);
  std::fflush(stdout);
  out.s = run_episodes(model, cfg, &shield, nullptr);
  finalize_pair(out);
  return out;
}

struct TigerPipeline {
  std::string error;
  TigerModel model;
  Trace trace110;
  LearnedRule learned;
  std::optional<Shield> shield;
  std::vector<PairOutcome> arms;  // c = 110, 80, 60, 40
  double learn_seconds = 0.0;
};

EpisodeConfig tiger_config() {
  EpisodeConfig cfg;
  cfg.particles = 1 << 15;
  cfg.runs = 1000;
  cfg.max_steps = 10;
  cfg.gamma = 0.95;
  cfg.seed = 1001;
  return cfg;
}

TigerPipeline& tiger_pipeline() {
  static TigerPipeline tp = [] {
    TigerPipeline t;
    try {
      const EpisodeConfig cfg = tiger_config();
      std::printf("[acceptance] tiger: unshielded arm at c=110 (1000 runs)\n");
      std::fflush(stdout);
      PairOutcome arm110;
      arm110.c = 110.0;
      {
        EpisodeConfig c110 = cfg;
        c110.uct_c = 110.0;
        arm110.u = run_episodes(t.model, c110, nullptr, &t.trace110);
      }

      const auto t0 = std::chrono::steady_clock::now();
      const RuleTemplate tmpl =
          parse_template(slurp(g_templates + "/tiger.rules"), &t.model);
      const MaxSmtProblem problem = encode(t.trace110, tmpl, t.model);
      t.learned = solve_maxsmt(problem);
      t.learn_seconds = seconds_since(t0);
      std::printf("[acceptance] tiger: learned cost %d, x1=%s x3=%s (%.1f s, %zu clauses)\n",
                  t.learned.objective_value, format_number(t.learned.assignment.at("x1")).c_str(),
                  format_number(t.learned.assignment.at("x3")).c_str(), t.learn_seconds,
                  problem.clauses.size());
      std::fflush(stdout);

      t.shield = Shield::from_learned(t.learned, t.model, 0.10, TigerModel::kListen, 1000, 424242);

      std::printf("[acceptance] tiger: shielded arm at c=110\n");
      std::fflush(stdout);
      {
        EpisodeConfig c110 = cfg;
        c110.uct_c = 110.0;
        arm110.s = run_episodes(t.model, c110, &*t.shield, nullptr);
      }
      finalize_pair(arm110);
      t.arms.push_back(std::move(arm110));
      for (double c : {80.0, 60.0, 40.0}) {
        t.arms.push_back(make_pair(t.model, cfg, *t.shield, c));
      }
    } catch (const std::exception& e) {
      t.error = e.what();
    }
    return t;
  }();
  return tp;
}

struct VrPipeline {
  std::string error;
  VelocityRegulationModel model{VrMap::default_map()};
  Trace trace103;
  LearnedRule learned;
  std::optional<Shield> shield;
  std::vector<PairOutcome> arms;  // c = 103, 87.55, 72.1
  double learn_seconds = 0.0;
};

EpisodeConfig vr_config() {
  EpisodeConfig cfg;
  cfg.particles = 1 << 15;
  cfg.runs = 100;
  cfg.max_steps = 0;  // the domain horizon (16 subsegments)
  cfg.gamma = 0.95;
  cfg.seed = 2001;
  return cfg;
}

VrPipeline& vr_pipeline() {
  static VrPipeline vp = [] {
    VrPipeline v;
    try {
      const double c_correct = v.model.reward_range();
      const EpisodeConfig cfg = vr_config();
      std::printf("[acceptance] vr: unshielded arm at c=%g (100 runs)\n", c_correct);
      std::fflush(stdout);
      PairOutcome base;
      base.c = c_correct;
      {
        EpisodeConfig c0 = cfg;
        c0.uct_c = c_correct;
        base.u = run_episodes(v.model, c0, nullptr, &v.trace103);
      }

      const auto t0 = std::chrono::steady_clock::now();
      const RuleTemplate tmpl = parse_template(slurp(g_templates + "/vr.rules"), &v.model);
      const MaxSmtProblem problem = encode(v.trace103, tmpl, v.model);
      v.learned = solve_maxsmt(problem);
      v.learn_seconds = seconds_since(t0);
      std::printf("[acceptance] vr: learned cost %d of %zu clauses (%.1f s)\n",
                  v.learned.objective_value, problem.clauses.size(), v.learn_seconds);
      for (const std::string& var : v.learned.tmpl.free_vars) {
        std::printf("[acceptance]   %s = %s\n", var.c_str(),
                    format_number(v.learned.assignment.at(var)).c_str());
      }
      std::fflush(stdout);

      v.shield = Shield::from_learned(v.learned, v.model, 0.10, std::nullopt, 1000, 424243);

      std::printf("[acceptance] vr: shielded arm at c=%g\n", c_correct);
      std::fflush(stdout);
      {
        EpisodeConfig c0 = cfg;
        c0.uct_c = c_correct;
        base.s = run_episodes(v.model, c0, &*v.shield, nullptr);
      }
      finalize_pair(base);
      v.arms.push_back(std::move(base));
      for (double c : {0.85 * c_correct, 0.7 * c_correct}) {
        v.arms.push_back(make_pair(v.model, cfg, *v.shield, c));
      }
    } catch (const std::exception& e) {
      v.error = e.what();
    }
    return v;
  }();
  return vp;
}

}  // namespace

TEST_CASE("criterion 1: particle posterior matches the Bayes ladder") {
  const auto t0 = std::chrono::steady_clock::now();
  TigerModel tiger;
  RandomStream rng(42);
  ParticleBelief b = ParticleBelief::initial(tiger, 1 << 15, rng);
  b = belief_update(b, tiger, TigerModel::kListen, TigerModel::kHearRight, 1 << 15, rng);
  const double one = b.marginal(tiger, 0)[0];
  b = belief_update(b, tiger, TigerModel::kListen, TigerModel::kHearRight, 1 << 15, rng);
  const double two = b.marginal(tiger, 0)[0];

  bool ok = true;
  ok &= std::abs(one - 0.85) <= 0.01;
  ok &= std::abs(two - 0.9698) <= 0.01;
  CHECK(one == doctest::Approx(0.85).epsilon(0.012));
  CHECK(two == doctest::Approx(0.9698).epsilon(0.011));
  CHECK(report(1, "particle posterior matches the Bayes ladder", ok, seconds_since(t0)));
}

TEST_CASE("criterion 2: Hellinger distance suite") {
  const auto t0 = std::chrono::steady_clock::now();
  bool ok = true;
  ok &= hellinger({0.25, 0.75}, {0.25, 0.75}) == 0.0;
  ok &= std::abs(hellinger({1.0, 0.0}, {0.0, 1.0}) - 1.0) < 1e-12;
  ok &= std::abs(hellinger({0.5, 0.5}, {1.0, 0.0}) - 0.541196) <= 1e-6;

  RandomStream rng(99);
  for (int i = 0; i < 10000 && ok; ++i) {
    const std::size_t dim = 2 + rng.next_below(4);
    ProbVector p(dim), q(dim);
    double ps = 0.0, qs = 0.0;
    for (std::size_t k = 0; k < dim; ++k) {
      p[k] = -std::log(1.0 - rng.next_double());
      q[k] = -std::log(1.0 - rng.next_double());
      ps += p[k];
      qs += q[k];
    }
    for (std::size_t k = 0; k < dim; ++k) {
      p[k] /= ps;
      q[k] /= qs;
    }
    const double h = hellinger(p, q);
    ok &= std::abs(h - hellinger(q, p)) < 1e-12;
    ok &= h >= 0.0 && h <= 1.0 + 1e-12;
  }
  const double secs = seconds_since(t0);
  ok &= secs < 1.0;
  CHECK(report(2, "Hellinger distance suite", ok, secs));
}

TEST_CASE("criterion 3: solver matches the exhaustive reference on 200 instances") {
  const auto t0 = std::chrono::steady_clock::now();
  testgen::TwoCatModel model;
  RandomStream rng(1234);
  bool ok = true;
  for (int i = 0; i < 200; ++i) {
    const testgen::GeneratedInstance inst = testgen::random_instance(rng);
    CAPTURE(i);
    CAPTURE(inst.template_text);
    const RuleTemplate tmpl = parse_template(inst.template_text, &model);
    const MaxSmtProblem problem = encode(inst.trace, tmpl, model);
    const LearnedRule solver = solve_maxsmt(problem);
    const LearnedRule oracle = brute_force_oracle(problem);
    const bool cost_eq = solver.objective_value == oracle.objective_value;
    CHECK(cost_eq);
    ok &= cost_eq;
    for (const auto& [var, value] : oracle.assignment) {
      const bool close = std::abs(solver.assignment.at(var) - value) <= 2e-6;
      CHECK(close);
      ok &= close;
    }
  }
  const double secs = seconds_since(t0);
  ok &= secs < 60.0;
  CHECK(report(3, "solver matches the exhaustive reference on 200 instances", ok, secs));
}

TEST_CASE("criterion 4: tiger thresholds recovered from a clean trace") {
  const auto t0 = std::chrono::steady_clock::now();
  TigerPipeline& tp = tiger_pipeline();
  bool ok = tp.error.empty();
  if (!tp.error.empty()) {
    FAIL_CHECK("tiger pipeline failed: " << tp.error);
  } else {
    const double x3 = tp.learned.assignment.at("x3");
    const double x4 = tp.learned.assignment.at("x4");
    CHECK(tp.learned.objective_value == 0);
    CHECK(x3 == x4);
    CHECK(x3 > 0.9);
    CHECK(x3 <= 0.9698 + 1e-6);
    ok &= tp.learned.objective_value == 0;
    ok &= x3 == x4;
    ok &= x3 > 0.9 && x3 <= 0.9698 + 1e-6;
  }
  CHECK(report(4, "tiger thresholds recovered from a clean trace", ok, seconds_since(t0)));
}

TEST_CASE("criterion 5: tiger returns under exploration-constant errors") {
  const auto t0 = std::chrono::steady_clock::now();
  TigerPipeline& tp = tiger_pipeline();
  bool ok = tp.error.empty() && tp.arms.size() == 4;
  if (!ok) {
    FAIL_CHECK("tiger pipeline failed: " << tp.error);
  } else {
    const PairOutcome& a110 = tp.arms[0];
    const PairOutcome& a80 = tp.arms[1];
    const PairOutcome& a60 = tp.arms[2];
    const PairOutcome& a40 = tp.arms[3];

    CHECK(std::abs(a110.u_mean - 3.702) <= 0.7);
    CHECK(std::abs(a60.u_mean - 3.088) <= 0.7);
    CHECK(std::abs(a40.u_mean - (-4.173)) <= 0.7);
    ok &= std::abs(a110.u_mean - 3.702) <= 0.7;
    ok &= std::abs(a60.u_mean - 3.088) <= 0.7;
    ok &= std::abs(a40.u_mean - (-4.173)) <= 0.7;

    double lo = a110.s_mean, hi = a110.s_mean;
    for (const PairOutcome* a : {&a80, &a60, &a40}) {
      lo = std::min(lo, a->s_mean);
      hi = std::max(hi, a->s_mean);
    }
    CHECK(hi - lo <= 0.3);
    ok &= hi - lo <= 0.3;
    for (const PairOutcome* a : {&a110, &a80, &a60, &a40}) {
      CHECK(std::abs(a->s_mean - 3.702) <= 0.7);
      ok &= std::abs(a->s_mean - 3.702) <= 0.7;
    }

    CHECK(a110.sa <= 5);
    ok &= a110.sa <= 5;

    CHECK_FALSE(a110.t.significant);
    ok &= !a110.t.significant;
    for (const PairOutcome* a : {&a80, &a60, &a40}) {
      CHECK(a->t.significant);
      ok &= a->t.significant;
    }
  }
  CHECK(report(5, "tiger returns under exploration-constant errors", ok, seconds_since(t0)));
}

TEST_CASE("criterion 6: velocity regulation shield never hurts and intervenes more as c degrades") {
  const auto t0 = std::chrono::steady_clock::now();
  VrPipeline& vp = vr_pipeline();
  bool ok = vp.error.empty() && vp.arms.size() == 3;
  if (!ok) {
    FAIL_CHECK("vr pipeline failed: " << vp.error);
  } else {
    CHECK(vp.model.reward_range() == 103.0);
    ok &= vp.model.reward_range() == 103.0;
    for (const PairOutcome& a : vp.arms) {
      CHECK(a.s_mean >= a.u_mean);
      ok &= a.s_mean >= a.u_mean;
      CHECK(a.pairs == 100);
      ok &= a.pairs == 100;
    }
    CHECK(vp.arms[1].t.significant);
    CHECK(vp.arms[2].t.significant);
    ok &= vp.arms[1].t.significant && vp.arms[2].t.significant;
    CHECK(vp.arms[0].sa < vp.arms[1].sa);
    CHECK(vp.arms[1].sa < vp.arms[2].sa);
    ok &= vp.arms[0].sa < vp.arms[1].sa && vp.arms[1].sa < vp.arms[2].sa;
  }
  CHECK(report(6, "velocity regulation shield never hurts and intervenes more as c degrades", ok,
               seconds_since(t0)));
}

TEST_CASE("criterion 7: shielding stays within 20% of the per-step planning time") {
  TigerPipeline& tp = tiger_pipeline();
  bool ok = tp.error.empty() && !tp.arms.empty();
  if (!ok) {
    FAIL_CHECK("tiger pipeline failed: " << tp.error);
  } else {
    const PairOutcome& a110 = tp.arms[0];
    const double u_per_step = a110.u.total_seconds() / static_cast<double>(a110.u.total_steps());
    const double s_per_step = a110.s.total_seconds() / static_cast<double>(a110.s.total_steps());
    const double ratio = s_per_step / u_per_step;
    std::printf("[acceptance]   per-step seconds: unshielded %.4f shielded %.4f ratio %.3f\n",
                u_per_step, s_per_step, ratio);
    CHECK(ratio >= 0.8);
    CHECK(ratio <= 1.2);
    ok &= ratio >= 0.8 && ratio <= 1.2;
  }
  CHECK(report(7, "shielding stays within 20% of the per-step planning time", ok));
}

TEST_CASE("criterion 8: XES round trip preserves a full-size trace") {
  const auto t0 = std::chrono::steady_clock::now();
  VrPipeline& vp = vr_pipeline();
  bool ok = vp.error.empty();
  if (!ok) {
    FAIL_CHECK("vr pipeline failed: " << vp.error);
  } else {
    std::ostringstream out;
    write_xes(vp.trace103, vp.model, out);
    std::istringstream in(out.str());
    const Trace back = read_xes(in, vp.model);
    const bool close = testutil::traces_close(back, vp.trace103, 1e-9);
    CHECK(close);
    CHECK(back.runs.size() == vp.trace103.runs.size());
    ok &= close && back.runs.size() == vp.trace103.runs.size();
  }
  CHECK(report(8, "XES round trip preserves a full-size trace", ok, seconds_since(t0)));
}

TEST_CASE("criterion 9: repeated evaluation is byte-identical") {
  const auto t0 = std::chrono::steady_clock::now();
  auto dir = testutil::fresh_dir("pomcpshield-acceptance");
  TigerModel tiger;
  const RuleTemplate tmpl = parse_template(
      "rL: select Listen when p_right <= 0.85 and p_left <= 0.85;\n"
      "rOR: select OpenRight when p_right >= 0.97;\n"
      "rOL: select OpenLeft when p_left >= 0.97;\n",
      &tiger);
  const Shield shield = Shield::from_template(tmpl, tiger, 0.10, TigerModel::kListen, 100, 7);
  const std::string shield_path = (dir / "s.shield").string();
  shield.save_file(shield_path, tiger);

  auto eval_once = [&](const std::string& out) {
    const std::string cmd = g_cli + " eval --domain tiger --shield " + shield_path +
                            " --c 110 --c 40 --particles 256 --runs 5 --max-steps 5 --seed 77" +
                            " --out " + out + " > " + (dir / "eval.log").string() + " 2>&1";
    return std::system(cmd.c_str());
  };
  const int rc1 = eval_once((dir / "r1.csv").string());
  const int rc2 = eval_once((dir / "r2.csv").string());
  bool ok = rc1 == 0 && rc2 == 0;
  CHECK(rc1 == 0);
  CHECK(rc2 == 0);
  if (ok) {
    const std::string a = slurp((dir / "r1.csv").string());
    const std::string b = slurp((dir / "r2.csv").string());
    CHECK(a == b);
    CHECK(a.rfind("c,pairs,", 0) == 0);
    ok &= a == b && a.rfind("c,pairs,", 0) == 0;
  }
  std::filesystem::remove_all(dir);
  CHECK(report(9, "repeated evaluation is byte-identical", ok, seconds_since(t0)));
}

int main(int argc, char** argv) {
  g_cli = testutil::take_arg(argc, argv, "cli");
  g_templates = testutil::take_arg(argc, argv, "templates");
  if (g_cli.empty() || g_templates.empty()) {
    std::fprintf(stderr,
                 "usage: test_acceptance --cli=<binary> --templates=<dir> [doctest args]\n");
    return 1;
  }
  doctest::Context ctx(argc, argv);
  return ctx.run();
}
