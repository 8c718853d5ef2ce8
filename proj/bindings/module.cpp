#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>

#include "pomcpshield/belief.hpp"
#include "pomcpshield/experiment.hpp"
#include "pomcpshield/planner.hpp"
#include "pomcpshield/random.hpp"
#include "pomcpshield/rulelang.hpp"
#include "pomcpshield/rulelearn.hpp"
#include "pomcpshield/shield.hpp"
#include "pomcpshield/stats.hpp"
#include "pomcpshield/tiger.hpp"
#include "pomcpshield/trace.hpp"
#include "pomcpshield/velocity_regulation.hpp"
#include "pomcpshield/xes.hpp"

namespace py = pybind11;
using namespace pomcpshield;

PYBIND11_MODULE(_core, m) {
  m.doc() = "POMCP planning with a rule-based action shield";

  py::register_exception<ParticleDeprivationError>(m, "ParticleDeprivationError");
  py::register_exception<UnsatError>(m, "UnsatError");

  m.def("hellinger", &hellinger, py::arg("p"), py::arg("q"));
  m.def("is_prob_vector", &is_prob_vector, py::arg("p"), py::arg("tol") = 1e-9);

  py::class_<RandomStream>(m, "RandomStream")
      .def(py::init<std::uint64_t>(), py::arg("seed"))
      .def("next_double", &RandomStream::next_double)
      .def("next_below", &RandomStream::next_below, py::arg("n"))
      .def("bernoulli", &RandomStream::bernoulli, py::arg("p"));

  py::class_<Model>(m, "Model")
      .def("name", &Model::name)
      .def("action_count", &Model::action_count)
      .def("observation_count", &Model::observation_count)
      .def("reward_range", &Model::reward_range)
      .def("default_max_steps", &Model::default_max_steps)
      .def("action_label", &Model::action_label, py::arg("action"))
      .def("action_from_label",
           [](const Model& self, const std::string& label) { return self.action_from_label(label); },
           py::arg("label"))
      .def("selector_count", &Model::selector_count)
      .def("selector_categories", &Model::selector_categories, py::arg("selector"))
      .def("category_labels", &Model::category_labels, py::arg("selector"))
      .def("context_selector", &Model::context_selector, py::arg("step_index"));

  py::class_<TigerModel, Model> tiger(m, "TigerModel");
  tiger
      .def(py::init<bool, double, double, double, double>(), py::arg("reset_on_open") = false,
           py::arg("listen_accuracy") = 0.85, py::arg("treasure_reward") = 10.0,
           py::arg("tiger_penalty") = -100.0, py::arg("listen_cost") = -1.0)
      .def_readonly_static("LISTEN", &TigerModel::kListen)
      .def_readonly_static("OPEN_LEFT", &TigerModel::kOpenLeft)
      .def_readonly_static("OPEN_RIGHT", &TigerModel::kOpenRight)
      .def_readonly_static("HEAR_LEFT", &TigerModel::kHearLeft)
      .def_readonly_static("HEAR_RIGHT", &TigerModel::kHearRight);

  py::class_<VrMap>(m, "VrMap")
      .def_static("default_map", &VrMap::default_map)
      .def_static("from_json_text", &VrMap::from_json_text, py::arg("text"))
      .def_static("from_json_file", &VrMap::from_json_file, py::arg("path"))
      .def("to_json_text", &VrMap::to_json_text)
      .def_readwrite("segment_subsegment_lengths", &VrMap::segment_subsegment_lengths)
      .def_readwrite("collision_penalty", &VrMap::collision_penalty)
      .def_readwrite("difficulties", &VrMap::difficulties);

  py::class_<VelocityRegulationModel, Model>(m, "VelocityRegulationModel")
      .def(py::init<VrMap>(), py::arg("map") = VrMap::default_map())
      .def("total_subsegments", &VelocityRegulationModel::total_subsegments)
      .def("num_segments", &VelocityRegulationModel::num_segments);

  py::class_<ParticleBelief>(m, "ParticleBelief")
      .def_static("initial", &ParticleBelief::initial, py::arg("model"), py::arg("capacity"),
                  py::arg("rng"))
      .def("particles", &ParticleBelief::particles)
      .def("size", &ParticleBelief::size)
      .def("marginal", &ParticleBelief::marginal, py::arg("model"), py::arg("selector"))
      .def("marginals", &ParticleBelief::marginals, py::arg("model"));

  m.def("belief_update", &belief_update, py::arg("prior"), py::arg("model"), py::arg("action"),
        py::arg("obs"), py::arg("capacity"), py::arg("rng"));

  py::class_<PlannerConfig>(m, "PlannerConfig")
      .def(py::init<>())
      .def_readwrite("num_simulations", &PlannerConfig::num_simulations)
      .def_readwrite("uct_c", &PlannerConfig::uct_c)
      .def_readwrite("gamma", &PlannerConfig::gamma)
      .def_readwrite("max_depth", &PlannerConfig::max_depth);

  py::class_<RootEdge>(m, "RootEdge")
      .def_readonly("action", &RootEdge::action)
      .def_readonly("visits", &RootEdge::visits)
      .def_readonly("value", &RootEdge::value);

  py::class_<SearchTree>(m, "SearchTree")
      .def(py::init<const Model&, PlannerConfig>(), py::arg("model"), py::arg("config"),
           py::keep_alive<1, 2>())
      .def("search", &SearchTree::search, py::arg("belief"), py::arg("legal"), py::arg("rng"))
      .def("advance", &SearchTree::advance, py::arg("action"), py::arg("observation"))
      .def("reset", &SearchTree::reset)
      .def("unrestricted_root_argmax", &SearchTree::unrestricted_root_argmax)
      .def("root_edges", &SearchTree::root_edges)
      .def("root_visits", &SearchTree::root_visits);

  py::class_<Step>(m, "Step")
      .def(py::init<>())
      .def_readwrite("beliefs", &Step::beliefs)
      .def_readwrite("action", &Step::action)
      .def_readwrite("observation", &Step::observation)
      .def_readwrite("raw_particles", &Step::raw_particles);

  py::class_<Trace>(m, "Trace")
      .def(py::init<>())
      .def_readwrite("domain", &Trace::domain)
      .def_readwrite("particles", &Trace::particles)
      .def_readwrite("c", &Trace::c)
      .def_readwrite("seed", &Trace::seed)
      .def_readwrite("runs", &Trace::runs)
      .def("total_steps", &Trace::total_steps)
      .def("__eq__", [](const Trace& a, const Trace& b) { return a == b; });

  m.def("write_xes_file", &write_xes_file, py::arg("trace"), py::arg("model"), py::arg("path"));
  m.def("read_xes_file", &read_xes_file, py::arg("path"), py::arg("model"));

  py::class_<RuleTemplate>(m, "RuleTemplate")
      .def_readonly("free_vars", &RuleTemplate::free_vars)
      .def("__str__", [](const RuleTemplate& t) { return pretty_print(t); });

  m.def("parse_template",
        [](const std::string& text, const Model* model) { return parse_template(text, model); },
        py::arg("text"), py::arg("model") = nullptr);
  m.def("pretty_print", &pretty_print, py::arg("template"));
  m.def("print_instantiated", &print_instantiated, py::arg("template"), py::arg("assignment"));
  m.def("format_number", &format_number, py::arg("value"));

  py::class_<MaxSmtProblem>(m, "MaxSmtProblem")
      .def_property_readonly("num_clauses",
                             [](const MaxSmtProblem& p) { return p.clauses.size(); });

  py::class_<LearnedRule>(m, "LearnedRule")
      .def_readonly("assignment", &LearnedRule::assignment)
      .def_readonly("objective_value", &LearnedRule::objective_value)
      .def_readonly("violated", &LearnedRule::violated)
      .def_property_readonly("template",
                             [](const LearnedRule& r) { return r.tmpl; })
      .def("__str__",
           [](const LearnedRule& r) { return print_instantiated(r.tmpl, r.assignment); });

  py::enum_<TightenMode>(m, "TightenMode")
      .value("MOST_RESTRICTIVE", TightenMode::MostRestrictive)
      .value("MOST_PERMISSIVE", TightenMode::MostPermissive)
      .value("NONE", TightenMode::None);

  m.def("encode", &encode, py::arg("trace"), py::arg("template"), py::arg("model"));
  m.def("solve_maxsmt", &solve_maxsmt, py::arg("problem"),
        py::arg("mode") = TightenMode::MostRestrictive);
  m.def("brute_force_oracle", &brute_force_oracle, py::arg("problem"),
        py::arg("mode") = TightenMode::MostRestrictive, py::arg("max_vars") = 3);

  py::class_<Legality>(m, "Legality")
      .def_readonly("actions", &Legality::actions)
      .def_readonly("fallback_used", &Legality::fallback_used);

  py::class_<Shield>(m, "Shield")
      .def_static("from_template", &Shield::from_template, py::arg("instantiated"),
                  py::arg("model"), py::arg("tau"), py::arg("safe_action"),
                  py::arg("representatives"), py::arg("seed"))
      .def_static("from_learned", &Shield::from_learned, py::arg("learned"), py::arg("model"),
                  py::arg("tau"), py::arg("safe_action"), py::arg("representatives"),
                  py::arg("seed"))
      .def_static("load_file", &Shield::load_file, py::arg("path"), py::arg("model"))
      .def("save_file", &Shield::save_file, py::arg("path"), py::arg("model"))
      .def("legal_actions", &Shield::legal_actions, py::arg("action_count"),
           py::arg("context_probs"), py::arg("labels"))
      .def("hellinger_margin", &Shield::hellinger_margin, py::arg("action"), py::arg("probs"))
      .def("tau", &Shield::tau)
      .def("safe_action", &Shield::safe_action);

  py::class_<EpisodeConfig>(m, "EpisodeConfig")
      .def(py::init<>())
      .def_readwrite("particles", &EpisodeConfig::particles)
      .def_readwrite("num_simulations", &EpisodeConfig::num_simulations)
      .def_readwrite("runs", &EpisodeConfig::runs)
      .def_readwrite("max_steps", &EpisodeConfig::max_steps)
      .def_readwrite("uct_c", &EpisodeConfig::uct_c)
      .def_readwrite("gamma", &EpisodeConfig::gamma)
      .def_readwrite("seed", &EpisodeConfig::seed)
      .def_readwrite("sa_proxy", &EpisodeConfig::sa_proxy)
      .def_readwrite("record_raw_particles", &EpisodeConfig::record_raw_particles);

  py::class_<RunResult>(m, "RunResult")
      .def_readonly("ret", &RunResult::ret)
      .def_readonly("seconds", &RunResult::seconds)
      .def_readonly("steps", &RunResult::steps)
      .def_readonly("interventions", &RunResult::interventions)
      .def_readonly("failed", &RunResult::failed);

  py::class_<EpisodeStats>(m, "EpisodeStats")
      .def_readonly("runs", &EpisodeStats::runs)
      .def_readonly("interventions", &EpisodeStats::interventions)
      .def("completed_returns", &EpisodeStats::completed_returns)
      .def("total_seconds", &EpisodeStats::total_seconds)
      .def("total_steps", &EpisodeStats::total_steps);

  m.def(
      "run_episodes",
      [](const Model& model, const EpisodeConfig& cfg, const Shield* shield, bool collect_trace) {
        Trace trace;
        EpisodeStats stats = run_episodes(model, cfg, shield, collect_trace ? &trace : nullptr);
        return py::make_tuple(stats, collect_trace ? py::cast(trace) : py::none());
      },
      py::arg("model"), py::arg("config"), py::arg("shield") = nullptr,
      py::arg("collect_trace") = false);

  py::class_<EvalRow>(m, "EvalRow")
      .def_readonly("c", &EvalRow::c)
      .def_readonly("pairs", &EvalRow::pairs)
      .def_readonly("unshielded_mean", &EvalRow::unshielded_mean)
      .def_readonly("unshielded_sd", &EvalRow::unshielded_sd)
      .def_readonly("shielded_mean", &EvalRow::shielded_mean)
      .def_readonly("shielded_sd", &EvalRow::shielded_sd)
      .def_readonly("relative_increase", &EvalRow::relative_increase)
      .def_readonly("interventions", &EvalRow::interventions)
      .def_readonly("t_stat", &EvalRow::t_stat)
      .def_readonly("significant", &EvalRow::significant);

  m.def(
      "evaluate_pair",
      [](const Model& model, const EpisodeConfig& cfg, const Shield& shield, double c) {
        return evaluate_pair(model, cfg, shield, c);
      },
      py::arg("model"), py::arg("config"), py::arg("shield"), py::arg("c"));
  m.def("format_table", &format_table, py::arg("rows"));
  m.def("format_csv", &format_csv, py::arg("rows"), py::arg("with_times") = false);

  m.def("paired_t_test", &paired_t_test, py::arg("a"), py::arg("b"));
  py::class_<PairedTResult>(m, "PairedTResult")
      .def_readonly("t", &PairedTResult::t)
      .def_readonly("significant", &PairedTResult::significant)
      .def_readonly("n", &PairedTResult::n);
}
