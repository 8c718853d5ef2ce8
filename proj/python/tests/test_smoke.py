import math

import pytest

import pomcpshield as ps


def test_hellinger_values():
    assert ps.hellinger([0.5, 0.5], [0.5, 0.5]) == pytest.approx(0.0, abs=1e-12)
    assert ps.hellinger([1.0, 0.0], [0.0, 1.0]) == pytest.approx(1.0, abs=1e-12)
    expected = math.sqrt(1.0 - math.sqrt(0.5))
    assert ps.hellinger([0.5, 0.5], [1.0, 0.0]) == pytest.approx(expected, abs=1e-9)


def test_belief_update_posterior():
    tiger = ps.TigerModel()
    rng = ps.RandomStream(7)
    belief = ps.ParticleBelief.initial(tiger, 1 << 13, rng)
    belief = ps.belief_update(belief, tiger, ps.TigerModel.LISTEN, ps.TigerModel.HEAR_RIGHT,
                              1 << 13, rng)
    marginal = belief.marginal(tiger, 0)
    assert marginal[0] == pytest.approx(0.85, abs=0.02)


def test_search_listens_at_uniform_belief():
    tiger = ps.TigerModel()
    rng = ps.RandomStream(3)
    belief = ps.ParticleBelief.initial(tiger, 512, rng)
    cfg = ps.PlannerConfig()
    cfg.num_simulations = 2048
    cfg.uct_c = tiger.reward_range()
    tree = ps.SearchTree(tiger, cfg)
    action = tree.search(belief, [0, 1, 2], rng)
    assert action == ps.TigerModel.LISTEN


def test_learn_and_shield_pipeline(tmp_path):
    tiger = ps.TigerModel()
    cfg = ps.EpisodeConfig()
    cfg.particles = 1 << 10
    cfg.runs = 30
    cfg.max_steps = 10
    cfg.seed = 11
    stats, trace = ps.run_episodes(tiger, cfg, collect_trace=True)
    assert trace.total_steps() == stats.total_steps()

    template = ps.parse_template(
        "rL: select Listen when p_left <= x1 and p_right <= x1;\n"
        "rOL: select OpenLeft when p_left >= x3;\n"
        "rOR: select OpenRight when p_right >= x4;\n"
        "where x3 = x4;\n",
        tiger,
    )
    problem = ps.encode(trace, template, tiger)
    learned = ps.solve_maxsmt(problem)
    assert learned.objective_value >= 0
    assert learned.assignment["x3"] == learned.assignment["x4"]

    shield = ps.Shield.from_learned(learned, tiger, 0.10, ps.TigerModel.LISTEN, 200, 5)
    uncertain = shield.legal_actions(3, [0.5, 0.5], tiger.category_labels(0))
    assert uncertain.actions == [ps.TigerModel.LISTEN]

    path = tmp_path / "tiger.shield"
    shield.save_file(str(path), tiger)
    reloaded = ps.Shield.load_file(str(path), tiger)
    assert reloaded.tau() == pytest.approx(shield.tau())
    again = reloaded.legal_actions(3, [0.5, 0.5], tiger.category_labels(0))
    assert again.actions == uncertain.actions

    shielded_stats, _ = ps.run_episodes(tiger, cfg, shield)
    assert len(shielded_stats.runs) == cfg.runs


def test_xes_roundtrip(tmp_path):
    vr = ps.VelocityRegulationModel(ps.VrMap.default_map())
    cfg = ps.EpisodeConfig()
    cfg.particles = 256
    cfg.runs = 2
    cfg.seed = 21
    _, trace = ps.run_episodes(vr, cfg, collect_trace=True)
    path = tmp_path / "vr.xes"
    ps.write_xes_file(trace, vr, str(path))
    back = ps.read_xes_file(str(path), vr)
    assert back == trace


def test_evaluate_pair_and_csv():
    tiger = ps.TigerModel()
    cfg = ps.EpisodeConfig()
    cfg.particles = 256
    cfg.runs = 6
    cfg.max_steps = 5
    cfg.seed = 31
    template = ps.parse_template(
        "rL: select Listen when p_left <= 0.9 and p_right <= 0.9;\n", tiger)
    shield = ps.Shield.from_template(template, tiger, 0.10, ps.TigerModel.LISTEN, 100, 5)
    row = ps.evaluate_pair(tiger, cfg, shield, 110.0)
    assert row.pairs == 6
    csv = ps.format_csv([row])
    assert csv.startswith("c,pairs,")
    assert "110," in csv
