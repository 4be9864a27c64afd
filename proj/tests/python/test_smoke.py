import math

import numpy as np
import pytest

import palab


def test_geometry_round_trip():
    assert palab.wrap(7 * math.pi / 2, 2 * math.pi) == pytest.approx(3 * math.pi / 2)
    assert palab.arc(0.1, 2 * math.pi - 0.1) == pytest.approx(0.2)
    a = np.array([1.0, 2.5])
    v = palab.spherical_embed(a)
    assert np.linalg.norm(v) == pytest.approx(1.0)
    assert np.allclose(palab.inverse_embed(v), a)


def test_lp_star_single_type():
    status, value, mech = palab.solve_lp_star(
        np.ones(1), np.array([[1.0, 2.0, 3.0]]), np.array([[2**-0.5, -(2**-0.5), 0.0]])
    )
    assert status == "optimal"
    assert value == pytest.approx(3.0)
    assert mech[0, 2] == pytest.approx(1.0)


def test_instance_and_reward_vectors():
    inst = palab.generate_instance(n_types=2, d=3, gamma=0.5, seed=42)
    v, u, vbar, c0 = palab.reward_vectors(inst)
    assert vbar.shape == (2, 3)
    assert np.allclose(vbar.sum(axis=1), 0.0)
    assert np.allclose(np.linalg.norm(vbar, axis=1), 1.0)
    assert c0 > 0


def test_config_validation():
    cfg = palab.normalize_config({"T": [1024], "replications": 2})
    assert cfg["replications"] == 2
    with pytest.raises(ValueError):
        palab.normalize_config({"replication": 2})


def test_small_experiment_is_deterministic(tmp_path):
    cfg = {
        "instance": {"n_types": 2, "d": 3, "gamma": 0.5, "seed": 42},
        "T": [1024],
        "replications": 2,
        "bandit": {"T_sec": 20, "noise_scale": 1.0, "tail_rule": "greedy"},
        "out_dir": str(tmp_path / "run"),
    }
    report, runs = palab.run_experiment(cfg, write_outputs=True)
    again, runs2 = palab.run_experiment(cfg)
    assert [r["regret"] for r in runs] == [r["regret"] for r in runs2]
    assert len(report["per_T"]) == 1
    assert (tmp_path / "run" / "summary.csv").exists()
    rebuilt = palab.report_from_dir(tmp_path / "run")
    assert rebuilt["per_T"][0]["runs"] == 2


def test_oracles_run():
    out = palab.oracle_suite({"instance": {"gamma": 0.5}, "oracles": ["revelation"],
                              "oracle_sizes": {"revelation_instances": 10}})
    assert out[0]["name"] == "revelation"
    assert out[0]["passed"]
