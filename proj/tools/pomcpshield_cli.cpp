#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "pomcpshield/experiment.hpp"
#include "pomcpshield/rulelang.hpp"
#include "pomcpshield/rulelearn.hpp"
#include "pomcpshield/shield.hpp"
#include "pomcpshield/smtlib.hpp"
#include "pomcpshield/stats.hpp"
#include "pomcpshield/tiger.hpp"
#include "pomcpshield/velocity_regulation.hpp"
#include "pomcpshield/xes.hpp"

namespace {

using nlohmann::json;
using namespace pomcpshield;

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void spill(const std::string& path, const std::string& content) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << content;
  if (!out) throw std::runtime_error("error while writing '" + path + "'");
}

std::unique_ptr<Model> make_model(const std::string& domain, const std::string& map_path) {
  if (domain == "tiger") return std::make_unique<TigerModel>();
  if (domain == "vr") {
    VrMap map = map_path.empty() ? VrMap::default_map() : VrMap::from_json_file(map_path);
    return std::make_unique<VelocityRegulationModel>(std::move(map));
  }
  throw std::runtime_error("unknown domain '" + domain + "' (expected tiger or vr)");
}

// Values from a JSON config file fill in every option the command line left
// untouched; explicit flags always win.
template <typename T>
void from_config(const CLI::App& app, const json& j, const char* flag, const char* key,
                 T& target) {
  if (!j.contains(key)) return;
  if (app.get_option(flag)->count() > 0) return;
  try {
    target = j.at(key).get<T>();
  } catch (const json::exception&) {
    throw std::runtime_error(std::string("config key '") + key + "' has the wrong type");
  }
}

void sweep_from_config(const CLI::App& app, const json& j, std::vector<double>& cs) {
  if (!j.contains("c")) return;
  if (app.get_option("--c")->count() > 0) return;
  const json& v = j.at("c");
  cs.clear();
  if (v.is_array()) {
    for (const json& x : v) cs.push_back(x.get<double>());
  } else {
    cs.push_back(v.get<double>());
  }
}

json load_config(const std::string& path) {
  if (path.empty()) return json::object();
  json j = json::parse(slurp(path));
  if (!j.is_object()) throw std::runtime_error("config file '" + path + "' is not a JSON object");
  return j;
}

struct CommonOpts {
  std::string config;
  std::string domain = "tiger";
  std::string map_path;
  EpisodeConfig episode;
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
  cmd->add_option("--config", opts.config, "JSON config file; explicit flags override it");
  cmd->add_option("--domain", opts.domain, "Domain: tiger or vr")->capture_default_str();
  cmd->add_option("--map", opts.map_path, "Path map JSON for the vr domain (default built-in)");
  cmd->add_option("--particles", opts.episode.particles, "Particle filter size")
      ->capture_default_str();
  cmd->add_option("--sims", opts.episode.num_simulations,
                  "Simulations per search (default: one per particle)");
  cmd->add_option("--runs", opts.episode.runs, "Number of episodes")->capture_default_str();
  cmd->add_option("--max-steps", opts.episode.max_steps,
                  "Steps per episode (default: the domain's horizon)");
  cmd->add_option("--gamma", opts.episode.gamma, "Discount factor")->capture_default_str();
  cmd->add_option("--seed", opts.episode.seed, "Base seed; run i uses seed + i")
      ->capture_default_str();
}

void merge_common(const CLI::App& cmd, const json& j, CommonOpts& opts) {
  from_config(cmd, j, "--domain", "domain", opts.domain);
  from_config(cmd, j, "--map", "map", opts.map_path);
  from_config(cmd, j, "--particles", "particles", opts.episode.particles);
  from_config(cmd, j, "--sims", "simulations", opts.episode.num_simulations);
  from_config(cmd, j, "--runs", "runs", opts.episode.runs);
  from_config(cmd, j, "--max-steps", "max_steps", opts.episode.max_steps);
  from_config(cmd, j, "--gamma", "gamma", opts.episode.gamma);
  from_config(cmd, j, "--seed", "seed", opts.episode.seed);
}

int cmd_run(const CLI::App& cmd, CommonOpts& opts, double& c, std::string& shield_path,
            bool& raw_particles, bool& sa_proxy, std::string& out_path) {
  const json j = load_config(opts.config);
  merge_common(cmd, j, opts);
  from_config(cmd, j, "--c", "c", c);
  from_config(cmd, j, "--shield", "shield", shield_path);
  from_config(cmd, j, "--raw-particles", "raw_particles", raw_particles);
  from_config(cmd, j, "--sa-proxy", "sa_proxy", sa_proxy);
  from_config(cmd, j, "--out", "out", out_path);

  auto model = make_model(opts.domain, opts.map_path);
  opts.episode.uct_c = c;
  opts.episode.record_raw_particles = raw_particles;
  opts.episode.sa_proxy = sa_proxy;

  std::optional<Shield> shield;
  if (!shield_path.empty()) shield = Shield::load_file(shield_path, *model);

  Trace trace;
  const EpisodeStats stats =
      run_episodes(*model, opts.episode, shield ? &*shield : nullptr, &trace);
  write_xes_file(trace, *model, out_path);

  const std::vector<double> returns = stats.completed_returns();
  std::cout << "domain " << model->name() << ", c " << format_number(trace.c) << ": completed "
            << returns.size() << "/" << stats.runs.size() << " runs, mean discounted return "
            << format_number(mean(returns)) << " (sd " << format_number(sample_stddev(returns))
            << ")";
  if (shield) std::cout << ", interventions " << stats.interventions;
  std::cout << "\nwrote " << out_path << "\n";
  return 0;
}

int cmd_learn(const CLI::App& cmd, CommonOpts& opts, std::string& trace_path,
              std::string& template_path, std::string& backend, std::string& solver_cmd,
              std::string& emit_path, std::string& tighten_name, std::string& out_path) {
  const json j = load_config(opts.config);
  merge_common(cmd, j, opts);
  from_config(cmd, j, "--trace", "trace", trace_path);
  from_config(cmd, j, "--template", "template", template_path);
  from_config(cmd, j, "--backend", "backend", backend);
  from_config(cmd, j, "--solver-cmd", "solver_cmd", solver_cmd);
  from_config(cmd, j, "--emit-smtlib", "emit_smtlib", emit_path);
  from_config(cmd, j, "--tighten", "tighten", tighten_name);
  from_config(cmd, j, "--out", "out", out_path);

  TightenMode mode;
  if (tighten_name == "restrictive") {
    mode = TightenMode::MostRestrictive;
  } else if (tighten_name == "permissive") {
    mode = TightenMode::MostPermissive;
  } else if (tighten_name == "none") {
    mode = TightenMode::None;
  } else {
    throw std::runtime_error("--tighten must be restrictive, permissive or none");
  }

  auto model = make_model(opts.domain, opts.map_path);
  const Trace trace = read_xes_file(trace_path, *model);
  const RuleTemplate tmpl = parse_template(slurp(template_path), model.get());
  const MaxSmtProblem problem = encode(trace, tmpl, *model);
  if (!emit_path.empty()) {
    spill(emit_path, emit_smtlib(problem));
    std::cout << "wrote SMT-LIB encoding to " << emit_path << "\n";
  }

  LearnedRule learned;
  if (backend == "internal") {
    learned = solve_maxsmt(problem, mode);
  } else if (backend == "smtlib") {
    if (solver_cmd.empty()) {
      throw std::runtime_error("--backend smtlib needs --solver-cmd (the input file path is "
                               "appended to the command)");
    }
    learned = solve_with_external(problem, solver_cmd, mode);
  } else {
    throw std::runtime_error("--backend must be internal or smtlib");
  }

  std::cout << "clauses " << problem.clauses.size() << ", cost " << learned.objective_value
            << " (violated " << learned.violated.size() << ")\n";
  for (const std::string& var : learned.tmpl.free_vars) {
    std::cout << var << " = " << format_number(learned.assignment.at(var)) << "\n";
  }
  const std::string instantiated = print_instantiated(learned.tmpl, learned.assignment);
  if (out_path.empty()) {
    std::cout << instantiated;
  } else {
    spill(out_path, instantiated);
    std::cout << "wrote " << out_path << "\n";
  }
  return 0;
}

int cmd_mkshield(const CLI::App& cmd, CommonOpts& opts, std::string& template_path, double& tau,
                 int& reps, std::string& safe_label, std::string& out_path) {
  const json j = load_config(opts.config);
  merge_common(cmd, j, opts);
  from_config(cmd, j, "--template", "template", template_path);
  from_config(cmd, j, "--tau", "tau", tau);
  from_config(cmd, j, "--reps", "reps", reps);
  from_config(cmd, j, "--safe-action", "safe_action", safe_label);
  from_config(cmd, j, "--out", "out", out_path);

  auto model = make_model(opts.domain, opts.map_path);
  const RuleTemplate tmpl = parse_template(slurp(template_path), model.get());
  std::optional<ActionId> safe;
  if (!safe_label.empty() && safe_label != "none") {
    safe = model->action_from_label(safe_label);
  }
  const Shield shield =
      Shield::from_template(tmpl, *model, tau, safe, reps, opts.episode.seed);
  shield.save_file(out_path, *model);
  std::cout << "wrote " << out_path << ": " << shield.rules().size() << " rules, " << reps
            << " representatives each, tau " << format_number(tau) << "\n";
  return 0;
}

int cmd_eval(const CLI::App& cmd, CommonOpts& opts, std::vector<double>& cs,
             std::string& shield_path, double& tau, bool& sa_proxy, bool& with_times,
             std::string& out_path) {
  const json j = load_config(opts.config);
  merge_common(cmd, j, opts);
  sweep_from_config(cmd, j, cs);
  from_config(cmd, j, "--shield", "shield", shield_path);
  from_config(cmd, j, "--tau", "tau", tau);
  from_config(cmd, j, "--sa-proxy", "sa_proxy", sa_proxy);
  from_config(cmd, j, "--with-times", "with_times", with_times);
  from_config(cmd, j, "--out", "out", out_path);
  if (shield_path.empty()) throw std::runtime_error("eval needs --shield");

  auto model = make_model(opts.domain, opts.map_path);
  Shield shield = Shield::load_file(shield_path, *model);
  if (cmd.get_option("--tau")->count() > 0 || j.contains("tau")) {
    shield = Shield(shield.rules(), tau, shield.safe_action());
  }
  opts.episode.sa_proxy = sa_proxy;

  if (cs.empty()) cs.push_back(model->reward_range());
  std::vector<EvalRow> rows;
  rows.reserve(cs.size());
  for (double c : cs) {
    rows.push_back(evaluate_pair(*model, opts.episode, shield, c));
  }
  std::cout << format_table(rows);
  if (!out_path.empty()) {
    spill(out_path, format_csv(rows, with_times));
    std::cout << "wrote " << out_path << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"POMCP planning with a learned rule-based shield"};
  app.require_subcommand(1);

  CommonOpts run_opts, learn_opts, mk_opts, eval_opts;

  // run
  CLI::App* run_cmd = app.add_subcommand("run", "Play episodes and write the trajectories as XES");
  add_common(run_cmd, run_opts);
  double run_c = 0.0;
  std::string run_shield, run_out = "trace.xes";
  bool run_raw = false, run_proxy = false;
  run_cmd->add_option("--c", run_c,
                      "UCT exploration constant (default: the domain's reward range)");
  run_cmd->add_option("--shield", run_shield, "Shield file; when given, episodes are shielded");
  run_cmd->add_flag("--raw-particles", run_raw, "Log raw particle states in the XES output");
  run_cmd->add_flag("--sa-proxy", run_proxy,
                    "Count interventions as 'any action pruned' instead of 'argmax blocked'");
  run_cmd->add_option("--out", run_out, "Output XES path")->capture_default_str();

  // learn
  CLI::App* learn_cmd =
      app.add_subcommand("learn", "Fit rule-template thresholds to a trace by MAX-SMT");
  add_common(learn_cmd, learn_opts);
  std::string learn_trace, learn_template, learn_backend = "internal", learn_solver;
  std::string learn_emit, learn_tighten = "restrictive", learn_out;
  learn_cmd->add_option("--trace", learn_trace, "Input XES trace")->required();
  learn_cmd->add_option("--template", learn_template, "Rule template file")->required();
  learn_cmd->add_option("--backend", learn_backend, "Solver backend: internal or smtlib")
      ->capture_default_str();
  learn_cmd->add_option("--solver-cmd", learn_solver,
                        "External solver command; the SMT-LIB file path is appended");
  learn_cmd->add_option("--emit-smtlib", learn_emit, "Also write the SMT-LIB encoding here");
  learn_cmd->add_option("--tighten", learn_tighten,
                        "Threshold tightening: restrictive, permissive or none")
      ->capture_default_str();
  learn_cmd->add_option("--out", learn_out, "Output rule file (default: stdout)");

  // mkshield
  CLI::App* mk_cmd =
      app.add_subcommand("mkshield", "Turn an instantiated rule into a shield file");
  add_common(mk_cmd, mk_opts);
  std::string mk_template, mk_safe, mk_out = "shield.txt";
  double mk_tau = 0.10;
  int mk_reps = 1000;
  mk_cmd->add_option("--template", mk_template, "Instantiated rule file")->required();
  mk_cmd->add_option("--tau", mk_tau, "Hellinger acceptance threshold")->capture_default_str();
  mk_cmd->add_option("--reps", mk_reps, "Representative beliefs sampled per rule")
      ->capture_default_str();
  mk_cmd->add_option("--safe-action", mk_safe, "Fallback action label (or 'none')");
  mk_cmd->add_option("--out", mk_out, "Output shield file")->capture_default_str();

  // eval
  CLI::App* eval_cmd = app.add_subcommand(
      "eval", "Sweep exploration constants, comparing unshielded and shielded arms");
  add_common(eval_cmd, eval_opts);
  std::vector<double> eval_cs;
  std::string eval_shield, eval_out;
  double eval_tau = 0.10;
  bool eval_proxy = false, eval_times = false;
  eval_cmd->add_option("--c", eval_cs, "Exploration constant; repeat to sweep");
  eval_cmd->add_option("--shield", eval_shield, "Shield file");
  eval_cmd->add_option("--tau", eval_tau, "Override the shield file's tau");
  eval_cmd->add_flag("--sa-proxy", eval_proxy,
                     "Count interventions as 'any action pruned' instead of 'argmax blocked'");
  eval_cmd->add_flag("--with-times", eval_times,
                     "Include wall-time columns in the CSV (breaks byte-for-byte determinism)");
  eval_cmd->add_option("--out", eval_out, "Output CSV path");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run_cmd->parsed()) {
      return cmd_run(*run_cmd, run_opts, run_c, run_shield, run_raw, run_proxy, run_out);
    }
    if (learn_cmd->parsed()) {
      return cmd_learn(*learn_cmd, learn_opts, learn_trace, learn_template, learn_backend,
                       learn_solver, learn_emit, learn_tighten, learn_out);
    }
    if (mk_cmd->parsed()) {
      return cmd_mkshield(*mk_cmd, mk_opts, mk_template, mk_tau, mk_reps, mk_safe, mk_out);
    }
    if (eval_cmd->parsed()) {
      return cmd_eval(*eval_cmd, eval_opts, eval_cs, eval_shield, eval_tau, eval_proxy,
                      eval_times, eval_out);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
