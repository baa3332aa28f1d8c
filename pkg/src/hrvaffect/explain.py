"""Exact Shapley attribution of the tree ensemble's per-class probability.

The value of a coalition S is the interventional expectation over a background
set: background rows with the features in S overwritten by the explained
instance's values, pushed through the model, averaged.  With 13 features the
full 2^13 coalition table is cheap enough to enumerate exactly, which keeps
the attribution axiomatics testable instead of approximated.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import STREAM_BACKGROUND, STREAM_EXPLAIN, derive_rng
from .learn import DimensionMismatchError, ExtraTreesModel

DEFAULT_BACKGROUND_SIZE = 100
DEFAULT_MAX_INSTANCES = 200
_MASK_CHUNK = 256


class EmptyBackgroundError(ValueError):
    pass


@dataclass(frozen=True)
class ShapExplanation:
    """Per-feature attribution of one instance's class probability."""

    instance_id: object
    class_label: str
    base_value: float  # mean model output over the background set
    phi: np.ndarray  # one attribution per feature, model-output units

    @property
    def prediction(self) -> float:
        return self.base_value + float(self.phi.sum())


@dataclass(frozen=True)
class ImportanceReport:
    feature_names: tuple[str, ...]
    global_mean_abs: np.ndarray
    per_state_mean_abs: dict[str, np.ndarray]
    ranking: tuple[str, ...]  # descending global mean |phi|, ties by feature index
    points: tuple  # (instance_id, state, feature, phi, feature_value)
    n_explained: int


def _shapley_weights(n_features: int) -> np.ndarray:
    fact = math.factorial
    return np.array(
        [fact(s) * fact(n_features - 1 - s) / fact(n_features) for s in range(n_features)]
    )


def _coalition_values(
    model: ExtraTreesModel,
    x: np.ndarray,
    background: np.ndarray,
    class_index: int,
) -> np.ndarray:
    """v(S) for every bitmask S: mean class probability over composite rows.

    Composite rows take the coalition's features from x and the rest from a
    background row.  Masks are processed in chunks so the composite matrix for
    a chunk stays cache-sized; within a chunk the coalition bit pattern
    selects between x and the tiled background in one vectorized step.
    """
    n_features = x.size
    n_masks = 1 << n_features
    n_bg = background.shape[0]
    feature_ids = np.arange(n_features, dtype=np.int64)
    tiled_bg = np.tile(background, (_MASK_CHUNK, 1))

    values = np.empty(n_masks)
    for start in range(0, n_masks, _MASK_CHUNK):
        chunk = np.arange(start, min(start + _MASK_CHUNK, n_masks), dtype=np.int64)
        from_x = np.repeat(((chunk[:, None] >> feature_ids) & 1).astype(bool), n_bg, axis=0)
        composite = np.where(from_x, x, tiled_bg[: chunk.size * n_bg])
        proba = model.predict_class_proba(composite, class_index)
        values[start : start + chunk.size] = proba.reshape(chunk.size, n_bg).mean(axis=1)
    return values


def shapley_explain(
    model: ExtraTreesModel,
    x: np.ndarray,
    background: np.ndarray,
    class_label: str,
    instance_id: object = None,
) -> ShapExplanation:
    """Exact Shapley attributions for one instance and one class.

    phi_i sums the weighted marginal contributions v(S u {i}) - v(S) over all
    coalitions S not containing i; base_value is v(empty set).  By the Shapley
    identity, base_value + sum(phi) equals the model's probability on x.
    """
    x = np.asarray(x, dtype=np.float64).ravel()
    background = np.asarray(background, dtype=np.float64)
    if background.ndim != 2 or background.shape[0] == 0:
        raise EmptyBackgroundError("background must be a non-empty (n, features) matrix")
    n_features = len(model.feature_names)
    if x.size != n_features or background.shape[1] != n_features:
        raise DimensionMismatchError(
            f"instance/background must have {n_features} features"
        )
    class_index = model.classes.index(class_label)

    values = _coalition_values(model, x, background, class_index)
    weights = _shapley_weights(n_features)
    masks = np.arange(1 << n_features, dtype=np.int64)
    sizes = np.zeros(masks.size, dtype=np.int64)
    for i in range(n_features):
        sizes += (masks >> i) & 1

    phi = np.empty(n_features)
    for i in range(n_features):
        without = masks[(masks >> i) & 1 == 0]
        phi[i] = float(
            np.sum(weights[sizes[without]] * (values[without | (1 << i)] - values[without]))
        )
    return ShapExplanation(
        instance_id=instance_id,
        class_label=class_label,
        base_value=float(values[0]),
        phi=phi,
    )


def sample_background(X: np.ndarray, size: int = DEFAULT_BACKGROUND_SIZE, seed: int = 0) -> np.ndarray:
    """Seeded background subsample; all rows when fewer than `size`."""
    X = np.asarray(X, dtype=np.float64)
    if X.shape[0] == 0:
        raise EmptyBackgroundError("no rows to sample background from")
    if X.shape[0] <= size:
        return X.copy()
    rng = derive_rng(seed, STREAM_BACKGROUND)
    return X[rng.choice(X.shape[0], size=size, replace=False)]


def global_importance(
    model: ExtraTreesModel,
    X: np.ndarray,
    y,
    instance_ids,
    background: np.ndarray,
    seed: int = 0,
    max_instances: int = DEFAULT_MAX_INSTANCES,
) -> ImportanceReport:
    """Mean |phi| per feature, globally and per state, over sampled instances.

    Each instance is explained for its own true label so the per-state
    grouping reflects what drives that state's probability.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y)
    instance_ids = list(instance_ids)
    if X.shape[0] == 0:
        raise EmptyBackgroundError("no instances to explain")
    indices = np.arange(X.shape[0])
    if indices.size > max_instances:
        rng = derive_rng(seed, STREAM_EXPLAIN)
        indices = np.sort(rng.choice(indices, size=max_instances, replace=False))

    n_features = len(model.feature_names)
    abs_sum = np.zeros(n_features)
    state_sums: dict[str, np.ndarray] = {}
    state_counts: dict[str, int] = {}
    points = []
    for idx in indices:
        explanation = shapley_explain(
            model, X[idx], background, str(y[idx]), instance_id=instance_ids[idx]
        )
        abs_phi = np.abs(explanation.phi)
        abs_sum += abs_phi
        state = str(y[idx])
        state_sums.setdefault(state, np.zeros(n_features))
        state_sums[state] += abs_phi
        state_counts[state] = state_counts.get(state, 0) + 1
        for f, name in enumerate(model.feature_names):
            points.append(
                (instance_ids[idx], state, name, float(explanation.phi[f]), float(X[idx, f]))
            )

    global_mean = abs_sum / indices.size
    order = sorted(range(n_features), key=lambda i: (-global_mean[i], i))
    return ImportanceReport(
        feature_names=model.feature_names,
        global_mean_abs=global_mean,
        per_state_mean_abs={
            state: state_sums[state] / state_counts[state] for state in sorted(state_sums)
        },
        ranking=tuple(model.feature_names[i] for i in order),
        points=tuple(points),
        n_explained=int(indices.size),
    )
