"""Shared model records: centering, linear projections, and the hash model.

A trained HashModel is everything needed to encode a new point:
subtract the training mean, apply the (possibly identity) projection,
rotate, and take signs.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

METHODS = ("itq", "itq+", "lapitq+", "lsh", "cca-itq")
PROJECTION_KINDS = ("pca", "cca-left", "cca-right", "lsh", "identity")

HYPERPARAM_KEYS = ("lambda1", "lambda2", "k_graph", "iters", "seed")


@dataclass(frozen=True, eq=False)
class CenteringInfo:
    """Column means removed from the training data; reused for queries."""

    mean: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "mean", np.asarray(self.mean, dtype=np.float64))

    def apply(self, x):
        return np.asarray(x, dtype=np.float64) - self.mean


@dataclass(frozen=True, eq=False)
class LinearProjection:
    """A d_in x d_out projection applied before rotation learning."""

    matrix: np.ndarray
    kind: str = "identity"

    def __post_init__(self):
        if self.kind not in PROJECTION_KINDS:
            raise ValueError(f"unknown projection kind {self.kind!r}")
        object.__setattr__(self, "matrix", np.asarray(self.matrix, dtype=np.float64))

    @property
    def d_in(self) -> int:
        return self.matrix.shape[0]

    @property
    def d_out(self) -> int:
        return self.matrix.shape[1]

    @classmethod
    def identity(cls, d: int) -> "LinearProjection":
        return cls(np.eye(d), "identity")


def default_hyperparams(**overrides):
    params = dict.fromkeys(HYPERPARAM_KEYS)
    for key, value in overrides.items():
        if key not in params:
            raise ValueError(f"unknown hyperparameter {key!r}")
        params[key] = value
    return params


@dataclass(frozen=True, eq=False)
class HashModel:
    """A trained encoder: centering, projection, rotation, and code length."""

    method: str
    centering: CenteringInfo
    preprocessing: LinearProjection
    rotation: np.ndarray
    bits: int
    hyperparams: dict = field(default_factory=default_hyperparams)

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}")
        rotation = np.asarray(self.rotation, dtype=np.float64)
        object.__setattr__(self, "rotation", rotation)
        if self.preprocessing.d_out != rotation.shape[0]:
            raise ValueError(
                f"projection output dim {self.preprocessing.d_out} does not match "
                f"rotation input dim {rotation.shape[0]}"
            )
        if self.bits != rotation.shape[1]:
            raise ValueError(
                f"bits={self.bits} but rotation has {rotation.shape[1]} columns"
            )

    @property
    def input_dim(self) -> int:
        return self.centering.mean.shape[0]


def with_pipeline(model: HashModel, centering: CenteringInfo,
                  preprocessing: LinearProjection | None = None) -> HashModel:
    """Attach real centering (and optionally a projection) to a trained model."""
    if preprocessing is None:
        preprocessing = model.preprocessing
    return replace(model, centering=centering, preprocessing=preprocessing)
