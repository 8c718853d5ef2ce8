#include "pomcpshield/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <iomanip>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <utility>

#include "pomcpshield/planner.hpp"
#include "pomcpshield/rulelang.hpp"
#include "pomcpshield/stats.hpp"

namespace pomcpshield {

std::vector<double> EpisodeStats::completed_returns() const {
  std::vector<double> out;
  for (const RunResult& r : runs) {
    if (!r.failed) out.push_back(r.ret);
  }
  return out;
}

double EpisodeStats::total_seconds() const {
  double s = 0.0;
  for (const RunResult& r : runs) {
    if (!r.failed) s += r.seconds;
  }
  return s;
}

long long EpisodeStats::total_steps() const {
  long long s = 0;
  for (const RunResult& r : runs) {
    if (!r.failed) s += r.steps;
  }
  return s;
}

EpisodeStats run_episodes(const Model& model, const EpisodeConfig& cfg, const Shield* shield,
                          Trace* out_trace) {
  if (cfg.particles < 1) throw std::invalid_argument("run_episodes: particles must be positive");
  if (cfg.runs < 0) throw std::invalid_argument("run_episodes: runs must be non-negative");
  if (!(cfg.gamma > 0.0 && cfg.gamma <= 1.0)) {
    throw std::invalid_argument("run_episodes: gamma must lie in (0, 1]");
  }

  const int sims = cfg.num_simulations > 0 ? cfg.num_simulations : cfg.particles;
  const int max_steps = cfg.max_steps > 0 ? cfg.max_steps : model.default_max_steps();
  const int action_count = model.action_count();

  PlannerConfig pc;
  pc.num_simulations = sims;
  pc.uct_c = cfg.uct_c > 0.0 ? cfg.uct_c : model.reward_range();
  pc.gamma = cfg.gamma;
  pc.max_depth = max_steps;

  std::vector<ActionId> all(static_cast<std::size_t>(action_count));
  std::iota(all.begin(), all.end(), 0);

  EpisodeStats stats;
  if (out_trace) {
    out_trace->domain = model.name();
    out_trace->particles = cfg.particles;
    out_trace->c = pc.uct_c;
    out_trace->seed = cfg.seed;
  }

  SearchTree tree(model, pc);
  for (int i = 0; i < cfg.runs; ++i) {
    // The environment and the planner draw from separate streams so that runs
    // with the same seed share environment randomness regardless of how much
    // the search consumes: paired arms then differ only where decisions differ.
    const std::uint64_t run_seed = cfg.seed + static_cast<std::uint64_t>(i);
    RandomStream env_rng(run_seed);
    RandomStream rng(run_seed ^ 0x5851f42d4c957f2dull);
    StateId state = model.sample_true_start(env_rng);
    ParticleBelief belief = ParticleBelief::initial(model, cfg.particles, rng);
    tree.reset();

    Run run;
    RunResult rr;
    double discount = 1.0;
    bool terminal = false;

    for (int step = 0; step < max_steps && !terminal; ++step) {
      std::vector<ProbVector> marginals = belief.marginals(model);

      const std::vector<ActionId>* legal = &all;
      std::vector<ActionId> restricted;
      if (shield) {
        const int ctx = model.context_selector(step);
        Legality legality =
            shield->legal_actions(action_count, marginals[static_cast<std::size_t>(ctx)],
                                  model.category_labels(ctx));
        restricted = std::move(legality.actions);
        legal = &restricted;
      }

      const auto t0 = std::chrono::steady_clock::now();
      const ActionId action = tree.search(belief, *legal, rng);
      rr.seconds += std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      ++rr.steps;

      if (shield) {
        if (cfg.sa_proxy) {
          if (static_cast<int>(legal->size()) < action_count) ++rr.interventions;
        } else {
          const ActionId shadow = tree.unrestricted_root_argmax();
          if (shadow >= 0 &&
              std::find(legal->begin(), legal->end(), shadow) == legal->end()) {
            ++rr.interventions;
          }
        }
      }

      const StepOutcome outcome = model.step(state, action, env_rng);
      rr.ret += discount * outcome.reward;
      discount *= cfg.gamma;

      Step logged;
      logged.beliefs = std::move(marginals);
      logged.action = action;
      logged.observation = outcome.observation;
      if (cfg.record_raw_particles) logged.raw_particles = belief.particles();
      run.push_back(std::move(logged));

      terminal = outcome.terminal;
      if (!terminal) {
        state = outcome.next_state;
        try {
          belief = belief_update(belief, model, action, outcome.observation, cfg.particles, rng);
        } catch (const ParticleDeprivationError&) {
          rr.failed = true;
          break;
        }
        tree.advance(action, outcome.observation);
      }
    }

    if (!rr.failed) {
      stats.interventions += rr.interventions;
      if (out_trace) out_trace->runs.push_back(std::move(run));
    }
    stats.runs.push_back(rr);
  }
  return stats;
}

std::vector<int> completed_pair_indices(const EpisodeStats& a, const EpisodeStats& b) {
  const int n = static_cast<int>(std::min(a.runs.size(), b.runs.size()));
  std::vector<int> idx;
  for (int i = 0; i < n; ++i) {
    if (!a.runs[static_cast<std::size_t>(i)].failed &&
        !b.runs[static_cast<std::size_t>(i)].failed) {
      idx.push_back(i);
    }
  }
  return idx;
}

EvalRow evaluate_pair(const Model& model, EpisodeConfig cfg, const Shield& shield, double c,
                      Trace* unshielded_trace, Trace* shielded_trace) {
  cfg.uct_c = c;
  const EpisodeStats unshielded = run_episodes(model, cfg, nullptr, unshielded_trace);
  const EpisodeStats shielded = run_episodes(model, cfg, &shield, shielded_trace);
  const std::vector<int> idx = completed_pair_indices(unshielded, shielded);

  std::vector<double> u_ret, s_ret, u_time, s_time;
  EvalRow row;
  for (int i : idx) {
    const RunResult& u = unshielded.runs[static_cast<std::size_t>(i)];
    const RunResult& s = shielded.runs[static_cast<std::size_t>(i)];
    u_ret.push_back(u.ret);
    s_ret.push_back(s.ret);
    u_time.push_back(u.seconds);
    s_time.push_back(s.seconds);
    row.interventions += s.interventions;
  }

  row.c = c > 0.0 ? c : model.reward_range();
  row.pairs = static_cast<int>(idx.size());
  row.unshielded_mean = mean(u_ret);
  row.unshielded_sd = sample_stddev(u_ret);
  row.shielded_mean = mean(s_ret);
  row.shielded_sd = sample_stddev(s_ret);
  row.relative_increase = relative_increase_percent(row.unshielded_mean, row.shielded_mean);
  if (row.pairs >= 2) {
    const PairedTResult t = paired_t_test(u_ret, s_ret);
    row.t_stat = t.t;
    row.significant = t.significant;
  }
  row.unshielded_time_mean = mean(u_time);
  row.unshielded_time_sd = sample_stddev(u_time);
  row.shielded_time_mean = mean(s_time);
  row.shielded_time_sd = sample_stddev(s_time);
  return row;
}

namespace {

std::string pm(double m, double sd, int prec) {
  std::ostringstream out;
  out << std::fixed << std::setprecision(prec) << m << " ± " << sd;
  return out.str();
}

}  // namespace

std::string format_table(const std::vector<EvalRow>& rows) {
  std::ostringstream out;
  out << std::setw(9) << "c" << std::setw(20) << "return" << std::setw(18) << "time/run s"
      << std::setw(20) << "shielded return" << std::setw(10) << "RI %" << std::setw(18)
      << "time/run s" << std::setw(6) << "#SA" << std::setw(5) << "sig" << "\n";
  for (const EvalRow& row : rows) {
    out << std::fixed << std::setprecision(2) << std::setw(9) << row.c;
    out << std::setw(20) << pm(row.unshielded_mean, row.unshielded_sd, 3);
    out << std::setw(18) << pm(row.unshielded_time_mean, row.unshielded_time_sd, 3);
    out << std::setw(20) << pm(row.shielded_mean, row.shielded_sd, 3);
    if (row.relative_increase) {
      std::ostringstream ri;
      ri << std::fixed << std::setprecision(2) << *row.relative_increase;
      out << std::setw(10) << ri.str();
    } else {
      out << std::setw(10) << "—";
    }
    out << std::setw(18) << pm(row.shielded_time_mean, row.shielded_time_sd, 3);
    out << std::setw(6) << row.interventions;
    out << std::setw(5) << (row.significant ? "*" : "");
    out << "\n";
  }
  return out.str();
}

std::string format_csv(const std::vector<EvalRow>& rows, bool with_times) {
  std::ostringstream out;
  out << "c,pairs,return_mean,return_sd,shielded_return_mean,shielded_return_sd,ri_percent,"
         "sa,t,significant";
  if (with_times) {
    out << ",time_mean,time_sd,shielded_time_mean,shielded_time_sd";
  }
  out << "\n";
  for (const EvalRow& row : rows) {
    out << format_number(row.c) << "," << row.pairs << "," << format_number(row.unshielded_mean)
        << "," << format_number(row.unshielded_sd) << "," << format_number(row.shielded_mean)
        << "," << format_number(row.shielded_sd) << ",";
    if (row.relative_increase) out << format_number(*row.relative_increase);
    out << "," << row.interventions << "," << format_number(row.t_stat) << ","
        << (row.significant ? 1 : 0);
    if (with_times) {
      out << "," << format_number(row.unshielded_time_mean) << ","
          << format_number(row.unshielded_time_sd) << ","
          << format_number(row.shielded_time_mean) << ","
          << format_number(row.shielded_time_sd);
    }
    out << "\n";
  }
  return out.str();
}

}  // namespace pomcpshield
