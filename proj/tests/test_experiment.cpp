#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <string>
#include <vector>

#include "pomcpshield/experiment.hpp"
#include "pomcpshield/tiger.hpp"

using namespace pomcpshield;

namespace {

// The planner's belief disagrees with the true state and observations are
// deterministic, so the first update rejects every particle.
class HopelessModel final : public Model {
 public:
  std::string name() const override { return "hopeless"; }
  int action_count() const override { return 1; }
  int observation_count() const override { return 2; }
  double reward_range() const override { return 1.0; }
  int default_max_steps() const override { return 4; }
  StateId sample_start(RandomStream&) const override { return 1; }
  StateId sample_true_start(RandomStream&) const override { return 0; }
  StepOutcome step(StateId state, ActionId, RandomStream&) const override {
    return {state, state == 0 ? 0 : 1, 1.0, false};
  }
  std::string action_label(ActionId) const override { return "wait"; }
  int selector_count() const override { return 1; }
  int selector_categories(int) const override { return 2; }
  int project(int, StateId state) const override { return state == 0 ? 0 : 1; }
  const std::vector<std::string>& category_labels(int) const override {
    static const std::vector<std::string> labels{"a", "b"};
    return labels;
  }
};

EpisodeConfig small_config() {
  EpisodeConfig cfg;
  cfg.particles = 64;
  cfg.runs = 3;
  cfg.max_steps = 4;
  cfg.seed = 9;
  return cfg;
}

Shield permissive_shield(const TigerModel& tiger) {
  RuleTemplate tmpl = parse_template(
      "rL: select Listen when p_right <= 1;\n"
      "rOR: select OpenRight when p_right >= 0;\n"
      "rOL: select OpenLeft when p_left >= 0;\n",
      &tiger);
  return Shield::from_template(tmpl, tiger, 0.10, TigerModel::kListen, 0, 1);
}

Shield listen_only_shield(const TigerModel& tiger) {
  RuleTemplate tmpl = parse_template(
      "rOL: select OpenLeft when p_right > 1;\n"
      "rOR: select OpenRight when p_right > 1;\n",
      &tiger);
  return Shield::from_template(tmpl, tiger, 0.10, std::nullopt, 0, 1);
}

}  // namespace

TEST_CASE("episode configs are validated") {
  TigerModel tiger;
  EpisodeConfig cfg = small_config();
  cfg.particles = 0;
  CHECK_THROWS_AS((void)run_episodes(tiger, cfg, nullptr, nullptr), std::invalid_argument);
  cfg = small_config();
  cfg.runs = -1;
  CHECK_THROWS_AS((void)run_episodes(tiger, cfg, nullptr, nullptr), std::invalid_argument);
  cfg = small_config();
  cfg.gamma = 0.0;
  CHECK_THROWS_AS((void)run_episodes(tiger, cfg, nullptr, nullptr), std::invalid_argument);
  cfg.gamma = 1.1;
  CHECK_THROWS_AS((void)run_episodes(tiger, cfg, nullptr, nullptr), std::invalid_argument);
}

TEST_CASE("the same config replays the same episodes") {
  TigerModel tiger;
  const EpisodeConfig cfg = small_config();

  Trace t1, t2;
  EpisodeStats s1 = run_episodes(tiger, cfg, nullptr, &t1);
  EpisodeStats s2 = run_episodes(tiger, cfg, nullptr, &t2);

  CHECK(t1 == t2);
  CHECK(t1.domain == "tiger");
  CHECK(t1.particles == 64);
  CHECK(t1.c == 110.0);  // the default exploration constant is the reward range
  CHECK(t1.seed == 9);
  REQUIRE(s1.runs.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(s1.runs[i].ret == s2.runs[i].ret);
    CHECK(s1.runs[i].steps == s2.runs[i].steps);
    CHECK_FALSE(s1.runs[i].failed);
  }
}

TEST_CASE("a shield that allows everything changes nothing") {
  TigerModel tiger;
  const EpisodeConfig cfg = small_config();
  Shield shield = permissive_shield(tiger);

  Trace unshielded, shielded;
  EpisodeStats u = run_episodes(tiger, cfg, nullptr, &unshielded);
  EpisodeStats s = run_episodes(tiger, cfg, &shield, &shielded);

  CHECK(shielded == unshielded);
  CHECK(s.interventions == 0);
  REQUIRE(u.runs.size() == s.runs.size());
  for (std::size_t i = 0; i < u.runs.size(); ++i) {
    CHECK(u.runs[i].ret == s.runs[i].ret);
    CHECK(s.runs[i].interventions == 0);
  }
}

TEST_CASE("a shield that only allows listening intervenes every step") {
  TigerModel tiger;
  EpisodeConfig cfg = small_config();
  cfg.runs = 2;
  cfg.max_steps = 3;
  cfg.sa_proxy = true;
  Shield shield = listen_only_shield(tiger);

  Trace trace;
  EpisodeStats proxy = run_episodes(tiger, cfg, &shield, &trace);
  CHECK(proxy.interventions == 6);  // every step prunes the open actions
  for (const Run& run : trace.runs) {
    for (const Step& step : run) CHECK(step.action == TigerModel::kListen);
  }

  cfg.sa_proxy = false;
  EpisodeStats shadow = run_episodes(tiger, cfg, &shield, nullptr);
  CHECK(shadow.interventions >= 0);
  CHECK(shadow.interventions <= 6);
}

TEST_CASE("particle deprivation marks the run failed and logs nothing") {
  HopelessModel model;
  EpisodeConfig cfg;
  cfg.particles = 16;
  cfg.runs = 2;
  cfg.max_steps = 3;
  cfg.seed = 4;

  Trace trace;
  EpisodeStats stats = run_episodes(model, cfg, nullptr, &trace);
  REQUIRE(stats.runs.size() == 2);
  for (const RunResult& r : stats.runs) {
    CHECK(r.failed);
    CHECK(r.steps == 1);
  }
  CHECK(stats.completed_returns().empty());
  CHECK(stats.total_steps() == 0);
  CHECK(trace.runs.empty());
  CHECK(completed_pair_indices(stats, stats).empty());
}

TEST_CASE("paired evaluation reduces both arms to one deterministic row") {
  TigerModel tiger;
  EpisodeConfig cfg = small_config();
  cfg.runs = 4;
  Shield shield = permissive_shield(tiger);

  EvalRow row = evaluate_pair(tiger, cfg, shield, 110.0);
  CHECK(row.c == 110.0);
  CHECK(row.pairs == 4);
  CHECK(row.unshielded_mean == row.shielded_mean);
  CHECK(row.unshielded_sd == row.shielded_sd);
  CHECK(row.interventions == 0);
  CHECK(row.t_stat == 0.0);
  CHECK_FALSE(row.significant);
  REQUIRE(row.relative_increase.has_value());
  CHECK(*row.relative_increase == 0.0);

  EvalRow again = evaluate_pair(tiger, cfg, shield, 110.0);
  CHECK(format_csv({row}) == format_csv({again}));
}

TEST_CASE("the table flags significance and missing baselines") {
  EvalRow strong;
  strong.c = 110.0;
  strong.pairs = 1000;
  strong.unshielded_mean = 3.088;
  strong.unshielded_sd = 1.5;
  strong.shielded_mean = 3.702;
  strong.shielded_sd = 1.2;
  strong.relative_increase = 19.88;
  strong.interventions = 42;
  strong.t_stat = 4.5;
  strong.significant = true;

  EvalRow empty_baseline;
  empty_baseline.c = 103.0;

  const std::string table = format_table({strong, empty_baseline});
  for (const char* token : {"c", "return", "time/run s", "shielded return", "RI %", "#SA", "sig"}) {
    CHECK(table.find(token) != std::string::npos);
  }
  CHECK(table.find("3.088 ± 1.500") != std::string::npos);
  CHECK(table.find("3.702 ± 1.200") != std::string::npos);
  CHECK(table.find("19.88") != std::string::npos);
  CHECK(table.find("42") != std::string::npos);
  CHECK(table.find("*") != std::string::npos);
  CHECK(table.find("—") != std::string::npos);
}

TEST_CASE("the CSV layout is fixed and omits wall times by default") {
  EvalRow row;
  row.c = 110.0;
  row.pairs = 2;
  row.unshielded_mean = 3.5;
  row.unshielded_sd = 0.5;
  row.shielded_mean = 3.75;
  row.shielded_sd = 0.25;
  row.relative_increase = 7.5;
  row.interventions = 4;
  row.t_stat = 2.5;
  row.significant = true;
  row.unshielded_time_mean = 0.5;
  row.unshielded_time_sd = 0.125;
  row.shielded_time_mean = 0.75;
  row.shielded_time_sd = 0.25;

  EvalRow blank;
  blank.c = 103.0;

  CHECK(format_csv({row, blank}) ==
        "c,pairs,return_mean,return_sd,shielded_return_mean,shielded_return_sd,ri_percent,"
        "sa,t,significant\n"
        "110,2,3.5,0.5,3.75,0.25,7.5,4,2.5,1\n"
        "103,0,0,0,0,0,,0,0,0\n");
  CHECK(format_csv({row}, true) ==
        "c,pairs,return_mean,return_sd,shielded_return_mean,shielded_return_sd,ri_percent,"
        "sa,t,significant,time_mean,time_sd,shielded_time_mean,shielded_time_sd\n"
        "110,2,3.5,0.5,3.75,0.25,7.5,4,2.5,1,0.5,0.125,0.75,0.25\n");
}

TEST_CASE("episode statistics skip failed runs") {
  EpisodeStats stats;
  RunResult ok;
  ok.ret = 2.0;
  ok.seconds = 0.5;
  ok.steps = 3;
  RunResult bad;
  bad.ret = 99.0;
  bad.seconds = 9.0;
  bad.steps = 7;
  bad.failed = true;
  stats.runs = {ok, bad, ok};

  CHECK(stats.completed_returns() == std::vector<double>{2.0, 2.0});
  CHECK(stats.total_seconds() == 1.0);
  CHECK(stats.total_steps() == 6);

  EpisodeStats other;
  other.runs = {bad, ok, ok};
  CHECK(completed_pair_indices(stats, other) == std::vector<int>{2});
}
