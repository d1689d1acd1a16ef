"""Privileged-information quantization: codes regularized by a source-side slack.

The trainer alternates three block updates: a balanced code step driven by
blended target/source scores, a target rotation step, and a slack rotation
step fitting the quantization error from the privileged view.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .codes import BinaryCodeMatrix, sgn
from .itq import (
    DEFAULT_ITERS,
    DEFAULT_STEP_ITERS,
    DEFAULT_TOL,
    balanced_signs,
    procrustes,
    random_orthonormal,
)
from .model import CenteringInfo, HashModel, LinearProjection, default_hyperparams

DEFAULT_LAMBDA1 = 0.01
LAMBDA1_GRID = (0.0, 0.001, 0.005, 0.01, 0.05, 0.1, 0.5, 1.0, 2.0)


@dataclass
class ItqPlusState:
    """Final blocks of the alternating solve plus the per-sweep objective."""

    codes: BinaryCodeMatrix
    rotation: np.ndarray
    slack_rotation: np.ndarray
    lambda1: float
    objective_trace: list = field(default_factory=list)


def itq_plus_objective(codes, rotation, slack_rotation, x_t, x_sc, lambda1) -> float:
    """||E||_F^2 + lambda1 ||E - X_sc P||_F^2 with E = B - X_t R.

    This is the functional every block update is exactly optimal for, so
    the alternating solve descends it monotonically.  At lambda1 = 0 it
    equals the plain quantization loss.
    """
    signs = codes.signs if isinstance(codes, BinaryCodeMatrix) else np.asarray(codes)
    x_t = np.asarray(x_t, dtype=np.float64)
    x_sc = np.asarray(x_sc, dtype=np.float64)
    err = signs - x_t @ rotation
    if err.shape != (x_sc.shape[0], np.asarray(slack_rotation).shape[1]):
        raise ValueError("shape mismatch between codes, data, and rotations")
    slack = err - x_sc @ slack_rotation
    return float(np.sum(err * err)) + float(lambda1) * float(np.sum(slack * slack))


def blend_scores(x_t, rotation, x_sc, slack_rotation, lambda1) -> np.ndarray:
    """The n x c score matrix (1+lambda1) X_t R + lambda1 X_sc P.

    Columns of the maximizing code matrix are read off this matrix; it is
    the transpose of both the sorting matrix of the balanced step and the
    linear term of the relaxed step.
    """
    scores = (1.0 + lambda1) * (np.asarray(x_t) @ rotation)
    if lambda1 != 0.0:
        scores = scores + lambda1 * (np.asarray(x_sc) @ slack_rotation)
    return scores


def update_b_balanced(scores) -> BinaryCodeMatrix:
    """Balanced code matrix maximizing the per-entry score sum.

    Per column the ceil(n/2) largest scores get +1 and the rest -1, ties
    broken by ascending row index; |column sum| <= 1, and 0 for even n.
    """
    scores = np.asarray(scores, dtype=np.float64)
    if scores.shape[0] < 2:
        raise ValueError("balanced code update needs at least 2 rows")
    return BinaryCodeMatrix(balanced_signs(scores))


def update_r(codes, x_t, x_sc, slack_rotation, lambda1, previous=None,
             step_iters: int = DEFAULT_STEP_ITERS) -> np.ndarray:
    """Target-rotation step: procrustes toward B - lambda1/(lambda1+1) X_sc P."""
    if lambda1 < 0:
        raise ValueError("lambda1 must be >= 0")
    signs = codes.signs if isinstance(codes, BinaryCodeMatrix) else np.asarray(codes)
    target = signs.astype(np.float64)
    if lambda1 > 0:
        target = target - (lambda1 / (lambda1 + 1.0)) * (np.asarray(x_sc) @ slack_rotation)
    return procrustes(target, x_t, previous, max_iter=step_iters)


def update_p(codes, x_t, rotation, x_sc, previous=None,
             step_iters: int = DEFAULT_STEP_ITERS) -> np.ndarray:
    """Slack-rotation step: procrustes fit of the quantization error from X_sc.

    When the error matrix or X_sc is numerically zero the SVD target is 0, so
    the previous rotation (if given) is kept to preserve monotonicity.
    """
    signs = codes.signs if isinstance(codes, BinaryCodeMatrix) else np.asarray(codes)
    x_sc = np.asarray(x_sc, dtype=np.float64)
    c = np.asarray(rotation).shape[1]
    if x_sc.shape[1] < c:
        raise ValueError(
            f"privileged dimension {x_sc.shape[1]} smaller than code length {c}"
        )
    err = signs - np.asarray(x_t) @ rotation
    cross = x_sc.T @ err
    if previous is not None and not np.any(cross):
        return previous
    return procrustes(err, x_sc, previous, max_iter=step_iters)


def itq_plus_train(x_t, x_sc, c: int, lambda1: float = DEFAULT_LAMBDA1,
                   iters: int = DEFAULT_ITERS, seed=0, *,
                   tol: float = DEFAULT_TOL, b_step: str = "balanced",
                   step_iters: int = DEFAULT_STEP_ITERS):
    """Alternating optimization over codes, target rotation, and slack rotation.

    x_t and x_sc are centered, row-aligned views of the n training instances.
    Updates run in the fixed order code step, rotation step, slack step; the
    objective is recorded after each full sweep.  b_step selects "balanced"
    (sorting) or "sign" codes; the latter matches the relaxed trainer at
    zero graph weight.

    Returns (HashModel, ItqPlusState).
    """
    x_t = np.asarray(x_t, dtype=np.float64)
    x_sc = np.asarray(x_sc, dtype=np.float64)
    n, d_t = x_t.shape
    if x_sc.shape[0] != n:
        raise ValueError(f"row mismatch: target {n} vs privileged {x_sc.shape[0]}")
    if n < 2:
        raise ValueError("need at least 2 training rows")
    d_s = x_sc.shape[1]
    if c > min(d_t, d_s):
        raise ValueError(f"code length {c} exceeds min dimension {min(d_t, d_s)}")
    if lambda1 < 0:
        raise ValueError("lambda1 must be >= 0")
    if b_step not in ("balanced", "sign"):
        raise ValueError(f"unknown b_step {b_step!r}")

    rotation = random_orthonormal(d_t, c, seed)
    slack_rotation = random_orthonormal(d_s, c, seed)

    codes = None
    trace: list[float] = []
    for _ in range(iters):
        scores = blend_scores(x_t, rotation, x_sc, slack_rotation, lambda1)
        codes = update_b_balanced(scores) if b_step == "balanced" else BinaryCodeMatrix(sgn(scores))
        rotation = update_r(codes, x_t, x_sc, slack_rotation, lambda1,
                            previous=rotation, step_iters=step_iters)
        slack_rotation = update_p(codes, x_t, rotation, x_sc,
                                  previous=slack_rotation, step_iters=step_iters)
        trace.append(itq_plus_objective(codes, rotation, slack_rotation, x_t, x_sc, lambda1))
        if tol > 0 and len(trace) >= 2:
            prev, cur = trace[-2], trace[-1]
            if abs(prev - cur) < tol * max(abs(prev), 1e-30):
                break

    state = ItqPlusState(codes, rotation, slack_rotation, lambda1, trace)
    model = HashModel(
        method="itq+",
        centering=CenteringInfo(np.zeros(d_t)),
        preprocessing=LinearProjection.identity(d_t),
        rotation=rotation,
        bits=c,
        hyperparams=default_hyperparams(lambda1=lambda1, iters=iters, seed=seed),
    )
    return model, state
