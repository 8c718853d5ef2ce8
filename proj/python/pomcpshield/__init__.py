"""POMCP planning with a rule-based action shield.

The heavy lifting lives in the compiled `_core` module; this package
re-exports its public names.
"""

from pomcpshield._core import (  # noqa: F401
    EpisodeConfig,
    EpisodeStats,
    EvalRow,
    Legality,
    LearnedRule,
    MaxSmtProblem,
    Model,
    PairedTResult,
    ParticleBelief,
    ParticleDeprivationError,
    PlannerConfig,
    RandomStream,
    RootEdge,
    RunResult,
    RuleTemplate,
    SearchTree,
    Shield,
    Step,
    TigerModel,
    TightenMode,
    Trace,
    UnsatError,
    VelocityRegulationModel,
    VrMap,
    belief_update,
    brute_force_oracle,
    encode,
    evaluate_pair,
    format_csv,
    format_number,
    format_table,
    hellinger,
    is_prob_vector,
    paired_t_test,
    parse_template,
    pretty_print,
    print_instantiated,
    read_xes_file,
    run_episodes,
    solve_maxsmt,
    write_xes_file,
)

__all__ = [name for name in dir() if not name.startswith("_")]
