"""Recurrent autoencoder embeddings for dynamic networks.

Configs are plain dicts with the same layout as the CLI's JSON files; keys
left out take their defaults.
"""

import json

from . import _rnne
from ._rnne import (
    CapacityError,
    IoError,
    RnneError,
    SequencingError,
    TrainingError,
    ValidationError,
    f1_scores,
    feature_matrix,
    grubbs_critical,
    grubbs_outliers,
    precision_at_k,
    read_embeddings,
    synth_community_graph,
)

__all__ = [
    "CapacityError",
    "IoError",
    "RnneError",
    "SequencingError",
    "TrainingError",
    "ValidationError",
    "default_config",
    "evaluate",
    "f1_scores",
    "feature_matrix",
    "generate",
    "grubbs_critical",
    "grubbs_outliers",
    "inspect_checkpoint",
    "precision_at_k",
    "read_embeddings",
    "synth_community_graph",
    "train",
]


def default_config():
    return json.loads(_rnne.default_config())


def generate(config):
    _rnne.generate(json.dumps(config))


def train(config):
    """Returns a dict with iterations, final_loss and temporal_variance."""
    iterations, final_loss, variance = _rnne.train(json.dumps(config))
    return {"iterations": iterations, "final_loss": final_loss, "temporal_variance": variance}


def evaluate(config, task="reconstruct"):
    """Metric rows as dicts keyed like the metrics CSV columns."""
    keys = ("task", "snapshot", "k_or_fraction", "metric", "value")
    return [dict(zip(keys, row)) for row in _rnne.evaluate(json.dumps(config), task)]


def inspect_checkpoint(path):
    return json.loads(_rnne.inspect_checkpoint(str(path)))
