"""Python access to the principal-agent learning laboratory."""

import json

from . import _palab
from ._palab import (
    arc,
    default_rd,
    episode_length,
    inverse_embed,
    solve_lp_star,
    spherical_embed,
    split_horizon,
    wrap,
)

__all__ = [
    "arc",
    "default_rd",
    "episode_length",
    "generate_instance",
    "inverse_embed",
    "normalize_config",
    "oracle_suite",
    "report_from_dir",
    "reward_vectors",
    "run_experiment",
    "solve_lp_star",
    "spherical_embed",
    "split_horizon",
    "wrap",
]


def generate_instance(**params):
    """Instance as a dict, with the same fields as the JSON files the CLI writes."""
    return json.loads(_palab.generate_instance_json(**params))


def reward_vectors(instance):
    """(v, u, vbar, C0) for an instance dict."""
    return _palab.reward_vectors(json.dumps(instance))


def normalize_config(config):
    """Config dict with every default filled in; raises ValueError on unknown keys."""
    return json.loads(_palab.normalize_config(json.dumps(config)))


def run_experiment(config, write_outputs=False):
    """Runs every (T, replication) pair and returns (report, runs)."""
    report, runs = _palab.run_experiment(json.dumps(config), write_outputs)
    return json.loads(report), runs


def oracle_suite(config):
    """List of oracle outcomes as dicts with name, passed, checked, failures and detail."""
    return json.loads(_palab.oracle_suite(json.dumps(config)))


def report_from_dir(path):
    return json.loads(_palab.report_from_dir(str(path)))
