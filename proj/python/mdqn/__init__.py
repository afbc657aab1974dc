"""Python access to the mdqn training core."""

import json as _json

from ._core import *  # noqa: F401,F403
from ._core import evaluate as _evaluate, train as _train


def _as_text(config):
    return config if isinstance(config, str) else _json.dumps(config)


def train(config, output_dir=None, on_report=None):
    """Train from a config dict (or JSON text). Returns (reports, networks)."""
    return _train(_as_text(config), output_dir, on_report)


def evaluate(config, networks, episodes=100, seed=0):
    return _evaluate(_as_text(config), networks, episodes, seed)
