#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "pomcpshield/model.hpp"
#include "pomcpshield/shield.hpp"
#include "pomcpshield/trace.hpp"

namespace pomcpshield {

struct EpisodeConfig {
  int particles = 1 << 15;
  int num_simulations = 0;  // 0: one simulation per particle
  int runs = 100;
  int max_steps = 0;     // 0: the domain default
  double uct_c = 0.0;    // 0: the domain reward range
  double gamma = 0.95;
  std::uint64_t seed = 1;
  bool sa_proxy = false;  // count a step as an intervention whenever any action was pruned
  bool record_raw_particles = false;
};

struct RunResult {
  double ret = 0.0;       // discounted return
  double seconds = 0.0;   // planning time (search calls only)
  int steps = 0;          // number of decisions taken
  int interventions = 0;  // steps where the shield altered the decision
  bool failed = false;    // aborted by particle deprivation
};

struct EpisodeStats {
  std::vector<RunResult> runs;
  int interventions = 0;  // #SA summed over completed runs

  std::vector<double> completed_returns() const;
  double total_seconds() const;
  long long total_steps() const;
};

// Plays `cfg.runs` episodes. Run i uses its own RandomStream(cfg.seed + i),
// so two calls with the same config are paired run-by-run regardless of the
// shield. With a shield, root actions are restricted to the legal set each
// step; interventions count the steps where the unrestricted argmax over the
// same tree statistics was illegal (or, with sa_proxy, where any action was
// pruned). Completed runs are appended to *out_trace when given; runs that
// die of particle deprivation are kept in `runs` (failed=true) but logged
// nowhere else.
EpisodeStats run_episodes(const Model& model, const EpisodeConfig& cfg, const Shield* shield,
                          Trace* out_trace);

// Indices of runs that completed in both arms (the paired sample).
std::vector<int> completed_pair_indices(const EpisodeStats& a, const EpisodeStats& b);

struct EvalRow {
  double c = 0.0;
  int pairs = 0;
  double unshielded_mean = 0.0;
  double unshielded_sd = 0.0;
  double shielded_mean = 0.0;
  double shielded_sd = 0.0;
  std::optional<double> relative_increase;  // percent; empty when the unshielded mean is 0
  int interventions = 0;
  double t_stat = 0.0;
  bool significant = false;
  double unshielded_time_mean = 0.0;
  double unshielded_time_sd = 0.0;
  double shielded_time_mean = 0.0;
  double shielded_time_sd = 0.0;
};

// Runs the unshielded and shielded arms with identical seeds at exploration
// constant `c` and reduces them to one table row. Optional sinks receive the
// completed trajectories of each arm.
EvalRow evaluate_pair(const Model& model, EpisodeConfig cfg, const Shield& shield, double c,
                      Trace* unshielded_trace = nullptr, Trace* shielded_trace = nullptr);

std::string format_table(const std::vector<EvalRow>& rows);

// Deterministic CSV: wall-time columns only with with_times (they vary
// between invocations of the same config).
std::string format_csv(const std::vector<EvalRow>& rows, bool with_times = false);

}  // namespace pomcpshield
