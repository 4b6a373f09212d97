"""Python access to the vessel tracking simulator, trainer and checks."""

import json

from . import _mrrl
from ._mrrl import CheckpointError, Environment as _Environment, OBSERVATION_WIDTH, closest_approach, content_hash

__all__ = [
    "CheckpointError",
    "Environment",
    "OBSERVATION_WIDTH",
    "closest_approach",
    "content_hash",
    "evaluate",
    "preset",
    "resolve",
    "train",
    "verify",
]


def _text(config):
    return config if isinstance(config, str) else json.dumps(config)


def preset(scenario, desk_scale=False):
    return json.loads(_mrrl.preset(scenario, desk_scale))


def resolve(config):
    """Full configuration for a partial one, filled in from its scenario preset."""
    return json.loads(_mrrl.resolve(_text(config)))


def verify(seed=1):
    return _mrrl.verify(seed)


def train(config, out):
    return _mrrl.train(_text(config), str(out))


def evaluate(config, out, checkpoint=None):
    return json.loads(_mrrl.evaluate(_text(config), None if checkpoint is None else str(checkpoint), str(out)))


def Environment(config=None, evaluation=False):
    return _Environment(_text(config or {}), evaluation)
