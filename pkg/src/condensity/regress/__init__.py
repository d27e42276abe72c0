"""Regressor backends behind a common fit/predict protocol.

Each backend provides a config dataclass, a trainer (``train_round``,
``model``, ``add_eval_set``, ``eval_predictions``) and an immutable model
with ``predict``.
"""

import dataclasses

from ..errors import WidthMismatch
from .knn import KnnConfig, KnnModel, KnnTrainer
from .mlp import MlpConfig, MlpModel, MlpTrainer
from .tree import TreeConfig, TreeEnsemble, TreeTrainer

CONFIGS = {"tree": TreeConfig, "mlp": MlpConfig, "knn": KnnConfig}
TRAINERS = {"tree": TreeTrainer, "mlp": MlpTrainer, "knn": KnnTrainer}
MODELS = {"tree": TreeEnsemble, "mlp": MlpModel, "knn": KnnModel}


def fit_init(config, design, seed=0, expected_width=None):
    if design.n_rows == 0:
        raise ValueError("cannot train on an empty design")
    if design.targets.shape[0] != design.n_rows:
        raise ValueError("design features and targets disagree in length")
    if expected_width is not None and design.width != expected_width:
        raise WidthMismatch(f"design has {design.width} columns, expected {expected_width}")
    return TRAINERS[config.variant](config, design, seed)


def train_round(state):
    return state.train_round()


def predict(model, features):
    return model.predict(features)


def config_to_dict(config):
    return {"variant": config.variant, **dataclasses.asdict(config)}


def config_from_dict(d):
    d = dict(d)
    variant = d.pop("variant", "tree")
    if variant not in CONFIGS:
        raise ValueError(f"unknown regressor variant {variant!r}; expected one of {sorted(CONFIGS)}")
    cls = CONFIGS[variant]
    known = {f.name for f in dataclasses.fields(cls)}
    unknown = set(d) - known
    if unknown:
        raise ValueError(f"unknown {variant} regressor options: {sorted(unknown)}")
    return cls(**d)


__all__ = [
    "KnnConfig", "KnnModel", "KnnTrainer", "MlpConfig", "MlpModel", "MlpTrainer",
    "TreeConfig", "TreeEnsemble", "TreeTrainer", "fit_init", "train_round", "predict",
    "config_to_dict", "config_from_dict", "CONFIGS", "MODELS",
]
