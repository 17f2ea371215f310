import os
import pathlib

import numpy as np
import pytest

import ehnopt

CONFIG_DIR = pathlib.Path(os.environ.get("EHN_CONFIG_DIR", pathlib.Path(__file__).parents[2] / "configs"))


def tiny():
    p = ehnopt.ModelParams()
    p.e_max, p.q_lp_max, p.q_hp_max, p.k_tx = 2, 1, 1, 1
    p.mu = 0.9
    p.harvest = [(1, 0.8), (0, 0.2)]
    p.arrival_lp = [0.7, 0.3]
    p.arrival_hp = [0.6, 0.4]
    p.weight_lp, p.weight_hp = 0.4, 0.6
    return p


def test_shipped_config_parses():
    cfg = ehnopt.parse_config((CONFIG_DIR / "paper.cfg").read_text())
    assert cfg.model.e_max == 50
    assert cfg.model.loss_limit_hp == pytest.approx(0.1)
    assert cfg.model.loss_limit_lp is None
    assert len(ehnopt.states(cfg.model)) == 1275


def test_bad_config_raises_value_error():
    with pytest.raises(ValueError, match="missing required keys"):
        ehnopt.parse_config("")


def test_transition_rows_sum_to_one():
    p = tiny()
    for s in ehnopt.states(p):
        for a in range(3):
            assert sum(pr for _, pr in ehnopt.transition(p, s, a)) == pytest.approx(1.0, abs=1e-12)


def test_solve_evaluate_simulate_roundtrip():
    p = tiny()
    out = ehnopt.solve(p)
    assert out["status"] == "optimal"
    policy = out["policy"]
    assert policy.shape == (12, 3)
    np.testing.assert_allclose(policy.sum(axis=1), 1.0, atol=1e-12)
    metrics = ehnopt.evaluate(p, policy)
    assert metrics["objective"] == pytest.approx(out["objective"], abs=1e-9)
    sim = ehnopt.simulate(p, policy, slots=200_000, seed=7, warmup=1_000)
    assert abs(sim["objective"]["mean"] - metrics["objective"]) < 5 * sim["objective"]["se"] + 1e-3
    assert sim["generator"] == "mt19937_64"


def test_infeasible_limit_reported():
    p = tiny()
    p.loss_limit_hp = 0.0
    out = ehnopt.solve(p)
    assert out["status"] == "infeasible"
    assert out["policy"] is None


def test_static_policy_uniform():
    pol = ehnopt.static_policy(tiny())
    np.testing.assert_allclose(pol, 1.0 / 3.0)
