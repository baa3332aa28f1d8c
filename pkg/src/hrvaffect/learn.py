"""Classifiers, cross-validation and one-versus-rest ROC analysis.

The primary model is an extremely-randomized-trees ensemble built here rather
than borrowed: each tree trains on the full training set (no bootstrap), draws
k candidate features per node with one uniform threshold each inside that
feature's node-local range, and keeps the split with the largest Gini decrease.
Two simple baselines (kNN on z-scored features, Gaussian naive Bayes) share
the predict_proba contract for model selection.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import STREAM_FOLDS, STREAM_SPLIT, STREAM_TREES, derive_rng

DEFAULT_N_TREES = 100
DEFAULT_MIN_SAMPLES_LEAF = 2
DEFAULT_KNN_K = 5
DEFAULT_CV_FOLDS = 5
DEFAULT_HOLDOUT_FRACTION = 0.2
FAMILY_NAMES = ("extra_trees", "knn", "gaussian_nb")


class SingleClassInputError(ValueError):
    pass


class EmptyMatrixError(ValueError):
    pass


class DimensionMismatchError(ValueError):
    pass


class ClassSmallerThanKError(ValueError):
    pass


def _check_matrix(X: np.ndarray, y: np.ndarray):
    if X.size == 0 or X.shape[0] == 0:
        raise EmptyMatrixError("feature matrix is empty")
    if X.shape[0] != y.shape[0]:
        raise DimensionMismatchError(f"X has {X.shape[0]} rows, y has {y.shape[0]}")
    if not np.isfinite(X).all():
        raise ValueError("feature matrix contains non-finite values; drop those rows first")


def _encode_labels(y) -> tuple[tuple[str, ...], np.ndarray]:
    classes = tuple(sorted(set(y)))
    if len(classes) < 2:
        raise SingleClassInputError(f"need >= 2 classes, got {classes}")
    index = {c: i for i, c in enumerate(classes)}
    return classes, np.array([index[v] for v in y], dtype=np.int64)


# ---------------------------------------------------------------------------
# Extremely randomized trees
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Tree:
    """One tree in flat arrays; feature[i] == -1 marks node i as a leaf."""

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    probs: np.ndarray  # (n_nodes, n_classes); class distribution at every node

    def leaf_ids(self, X: np.ndarray) -> np.ndarray:
        """Leaf node id per row; X must be C-contiguous float64."""
        n, n_features = X.shape
        flat = X.reshape(-1)
        # children[2i] = right child of node i, children[2i+1] = left child,
        # so the boolean go_left indexes the pair directly.
        children = np.empty(2 * self.feature.size, dtype=np.int64)
        children[0::2] = self.right
        children[1::2] = self.left
        internal = self.feature >= 0
        out = np.zeros(n, dtype=np.int64)
        rows = np.arange(n, dtype=np.int64)
        nodes = np.zeros(n, dtype=np.int64)
        alive = internal[nodes]
        rows, nodes = rows[alive], nodes[alive]
        while rows.size:
            go_left = flat[rows * n_features + self.feature[nodes]] <= self.threshold[nodes]
            nodes = children[2 * nodes + go_left]
            alive = internal[nodes]
            if not alive.all():
                done = ~alive
                out[rows[done]] = nodes[done]
                rows, nodes = rows[alive], nodes[alive]
        return out

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        return self.probs[self.leaf_ids(X)]


@dataclass(frozen=True)
class ExtraTreesParams:
    n_trees: int = DEFAULT_N_TREES
    k_features: int | None = None  # None -> ceil(sqrt(n_features))
    min_samples_leaf: int = DEFAULT_MIN_SAMPLES_LEAF


@dataclass(frozen=True)
class ExtraTreesModel:
    trees: tuple[Tree, ...]
    params: ExtraTreesParams
    seed: int
    classes: tuple[str, ...]
    feature_names: tuple[str, ...]

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        X = np.ascontiguousarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != len(self.feature_names):
            raise DimensionMismatchError(
                f"expected (n, {len(self.feature_names)}) matrix, got {X.shape}"
            )
        total = np.zeros((X.shape[0], len(self.classes)))
        for tree in self.trees:
            total += tree.predict_proba(X)
        return total / len(self.trees)

    def predict_class_proba(self, X: np.ndarray, class_index: int) -> np.ndarray:
        """Probability column for one class; avoids materializing all classes."""
        X = np.ascontiguousarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != len(self.feature_names):
            raise DimensionMismatchError(
                f"expected (n, {len(self.feature_names)}) matrix, got {X.shape}"
            )
        total = np.zeros(X.shape[0])
        for tree in self.trees:
            total += tree.probs[tree.leaf_ids(X), class_index]
        return total / len(self.trees)

    def predict(self, X: np.ndarray) -> np.ndarray:
        proba = self.predict_proba(X)
        return np.array([self.classes[i] for i in np.argmax(proba, axis=1)])


def _gini(counts: np.ndarray) -> float:
    total = counts.sum()
    p = counts / total
    return 1.0 - float(np.dot(p, p))


def _build_tree(
    X: np.ndarray, y_enc: np.ndarray, n_classes: int, k: int, min_leaf: int,
    rng: np.random.Generator,
) -> Tree:
    n_features = X.shape[1]
    feature, threshold, left, right, probs = [], [], [], [], []

    def new_node(rows: np.ndarray) -> int:
        idx = len(feature)
        feature.append(-1)
        threshold.append(math.nan)
        left.append(-1)
        right.append(-1)
        counts = np.bincount(y_enc[rows], minlength=n_classes).astype(np.float64)
        probs.append(counts / counts.sum())
        return idx

    # Explicit stack keeps deep trees clear of the recursion limit.
    root_rows = np.arange(X.shape[0])
    stack = [(new_node(root_rows), root_rows)]
    while stack:
        node_id, rows = stack.pop()
        labels = y_enc[rows]
        if labels.size < 2 * min_leaf or (labels == labels[0]).all():
            continue
        parent_gini = _gini(np.bincount(labels, minlength=n_classes))

        candidates = rng.choice(n_features, size=min(k, n_features), replace=False)
        best = None  # (decrease, feature, threshold, left_mask)
        for f in candidates:
            col = X[rows, f]
            lo, hi = float(col.min()), float(col.max())
            if lo == hi:
                continue
            thr = float(rng.uniform(lo, hi))
            if not lo < thr < hi:
                continue
            left_mask = col <= thr
            n_left = int(left_mask.sum())
            if n_left < min_leaf or rows.size - n_left < min_leaf:
                continue
            gini_left = _gini(np.bincount(labels[left_mask], minlength=n_classes))
            gini_right = _gini(np.bincount(labels[~left_mask], minlength=n_classes))
            decrease = parent_gini - (
                n_left * gini_left + (rows.size - n_left) * gini_right
            ) / rows.size
            if best is None or decrease > best[0]:
                best = (decrease, int(f), thr, left_mask)
        if best is None:
            continue
        _, f, thr, left_mask = best
        feature[node_id] = f
        threshold[node_id] = thr
        left_id = new_node(rows[left_mask])
        right_id = new_node(rows[~left_mask])
        left[node_id] = left_id
        right[node_id] = right_id
        stack.append((right_id, rows[~left_mask]))
        stack.append((left_id, rows[left_mask]))

    return Tree(
        feature=np.array(feature, dtype=np.int64),
        threshold=np.array(threshold, dtype=np.float64),
        left=np.array(left, dtype=np.int64),
        right=np.array(right, dtype=np.int64),
        probs=np.array(probs, dtype=np.float64),
    )


def train_extra_trees(
    X: np.ndarray,
    y,
    feature_names: tuple[str, ...],
    params: ExtraTreesParams = ExtraTreesParams(),
    seed: int = 0,
) -> ExtraTreesModel:
    """Train the ensemble; deterministic given (X, y, params, seed).

    Every tree owns an independent random stream derived from the seed and its
    index, so trees are reproducible regardless of build order.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y)
    _check_matrix(X, y)
    classes, y_enc = _encode_labels(y)
    k = params.k_features or math.ceil(math.sqrt(X.shape[1]))
    trees = tuple(
        _build_tree(
            X, y_enc, len(classes), k, params.min_samples_leaf,
            derive_rng(seed, STREAM_TREES, t),
        )
        for t in range(params.n_trees)
    )
    return ExtraTreesModel(
        trees=trees, params=params, seed=seed, classes=classes,
        feature_names=tuple(feature_names),
    )


def _tree_to_nested(tree: Tree, node: int = 0) -> dict:
    if tree.feature[node] < 0:
        return {"probs": [float(p) for p in tree.probs[node]]}
    return {
        "feature": int(tree.feature[node]),
        "threshold": float(tree.threshold[node]),
        "left": _tree_to_nested(tree, int(tree.left[node])),
        "right": _tree_to_nested(tree, int(tree.right[node])),
    }


def _tree_from_nested(doc: dict, n_classes: int) -> Tree:
    feature, threshold, left, right, probs = [], [], [], [], []

    def add(node_doc: dict) -> int:
        idx = len(feature)
        feature.append(-1)
        threshold.append(math.nan)
        left.append(-1)
        right.append(-1)
        probs.append([0.0] * n_classes)
        if "probs" in node_doc:
            probs[idx] = [float(p) for p in node_doc["probs"]]
        else:
            feature[idx] = int(node_doc["feature"])
            threshold[idx] = float(node_doc["threshold"])
            left[idx] = add(node_doc["left"])
            right[idx] = add(node_doc["right"])
        return idx

    add(doc)
    return Tree(
        feature=np.array(feature, dtype=np.int64),
        threshold=np.array(threshold, dtype=np.float64),
        left=np.array(left, dtype=np.int64),
        right=np.array(right, dtype=np.int64),
        probs=np.array(probs, dtype=np.float64),
    )


def model_to_dict(model: ExtraTreesModel) -> dict:
    """Self-describing JSON-ready document with trees as nested nodes."""
    return {
        "model_type": "extra_trees",
        "n_trees": model.params.n_trees,
        "k_features": model.params.k_features,
        "min_samples_leaf": model.params.min_samples_leaf,
        "seed": model.seed,
        "classes": list(model.classes),
        "feature_names": list(model.feature_names),
        "trees": [_tree_to_nested(tree) for tree in model.trees],
    }


def model_from_dict(doc: dict) -> ExtraTreesModel:
    if doc.get("model_type") != "extra_trees":
        raise ValueError(f"unsupported model_type {doc.get('model_type')!r}")
    classes = tuple(doc["classes"])
    return ExtraTreesModel(
        trees=tuple(_tree_from_nested(t, len(classes)) for t in doc["trees"]),
        params=ExtraTreesParams(
            n_trees=int(doc["n_trees"]),
            k_features=doc["k_features"],
            min_samples_leaf=int(doc["min_samples_leaf"]),
        ),
        seed=int(doc["seed"]),
        classes=classes,
        feature_names=tuple(doc["feature_names"]),
    )


# ---------------------------------------------------------------------------
# Baselines
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class KnnModel:
    X_train: np.ndarray  # z-scored
    y_enc: np.ndarray
    mean: np.ndarray
    std: np.ndarray
    k: int
    classes: tuple[str, ...]

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != self.X_train.shape[1]:
            raise DimensionMismatchError(f"expected (n, {self.X_train.shape[1]}), got {X.shape}")
        Xz = (X - self.mean) / self.std
        out = np.zeros((X.shape[0], len(self.classes)))
        for i, row in enumerate(Xz):
            dist = np.sqrt(((self.X_train - row) ** 2).sum(axis=1))
            neighbors = np.argsort(dist, kind="stable")[: self.k]
            counts = np.bincount(self.y_enc[neighbors], minlength=len(self.classes))
            out[i] = counts / counts.sum()
        return out


def zscore_fit(X: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Per-feature mean/std; zero-variance features get std 1 to stay inert."""
    mean = X.mean(axis=0)
    std = np.std(X, axis=0)
    std = np.where(std > 0, std, 1.0)
    return mean, std


def train_knn(X: np.ndarray, y, k: int = DEFAULT_KNN_K) -> KnnModel:
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y)
    _check_matrix(X, y)
    classes, y_enc = _encode_labels(y)
    mean, std = zscore_fit(X)
    return KnnModel(
        X_train=(X - mean) / std, y_enc=y_enc, mean=mean, std=std,
        k=min(k, X.shape[0]), classes=classes,
    )


@dataclass(frozen=True)
class GaussianNbModel:
    class_log_prior: np.ndarray
    means: np.ndarray  # (n_classes, n_features)
    variances: np.ndarray
    classes: tuple[str, ...]

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != self.means.shape[1]:
            raise DimensionMismatchError(f"expected (n, {self.means.shape[1]}), got {X.shape}")
        log_post = np.empty((X.shape[0], len(self.classes)))
        for c in range(len(self.classes)):
            log_like = -0.5 * (
                np.log(2.0 * np.pi * self.variances[c])
                + (X - self.means[c]) ** 2 / self.variances[c]
            ).sum(axis=1)
            log_post[:, c] = self.class_log_prior[c] + log_like
        log_post -= log_post.max(axis=1, keepdims=True)
        post = np.exp(log_post)
        return post / post.sum(axis=1, keepdims=True)


def train_gaussian_nb(X: np.ndarray, y) -> GaussianNbModel:
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y)
    _check_matrix(X, y)
    classes, y_enc = _encode_labels(y)
    n_classes = len(classes)
    means = np.empty((n_classes, X.shape[1]))
    variances = np.empty((n_classes, X.shape[1]))
    priors = np.empty(n_classes)
    # Variance smoothing keeps degenerate (constant) features finite.
    eps = 1e-9 * max(float(np.var(X, axis=0).max()), 1e-12)
    for c in range(n_classes):
        rows = X[y_enc == c]
        means[c] = rows.mean(axis=0)
        variances[c] = np.var(rows, axis=0) + eps
        priors[c] = rows.shape[0] / X.shape[0]
    return GaussianNbModel(
        class_log_prior=np.log(priors), means=means, variances=variances, classes=classes
    )


def train_family(family: str, X, y, feature_names, params, seed: int, knn_k: int = DEFAULT_KNN_K):
    if family == "extra_trees":
        return train_extra_trees(X, y, feature_names, params, seed)
    if family == "knn":
        return train_knn(X, y, knn_k)
    if family == "gaussian_nb":
        return train_gaussian_nb(X, y)
    raise ValueError(f"unknown model family {family!r}; known: {FAMILY_NAMES}")


# ---------------------------------------------------------------------------
# Splits
# ---------------------------------------------------------------------------

def stratified_kfold(y, k: int = DEFAULT_CV_FOLDS, seed: int = 0) -> np.ndarray:
    """Fold assignment per row; per-class counts across folds differ by <= 1."""
    y = np.asarray(y)
    rng = derive_rng(seed, STREAM_FOLDS)
    folds = np.full(y.shape[0], -1, dtype=np.int64)
    for c in sorted(set(y)):
        idx = np.flatnonzero(y == c)
        if idx.size < k:
            raise ClassSmallerThanKError(f"class {c!r} has {idx.size} rows < k={k}")
        idx = rng.permutation(idx)
        base, extra = divmod(idx.size, k)
        start = 0
        for fold in range(k):
            size = base + (1 if fold < extra else 0)
            folds[idx[start : start + size]] = fold
            start += size
    return folds


def holdout_split(y, fraction: float = DEFAULT_HOLDOUT_FRACTION, seed: int = 0):
    """Stratified (train_ids, test_ids); deterministic in seed."""
    y = np.asarray(y)
    rng = derive_rng(seed, STREAM_SPLIT)
    test_idx = []
    for c in sorted(set(y)):
        idx = rng.permutation(np.flatnonzero(y == c))
        n_test = min(int(round(fraction * idx.size)), idx.size - 1)
        test_idx.extend(idx[:n_test])
    test = np.array(sorted(test_idx), dtype=np.int64)
    train = np.setdiff1d(np.arange(y.shape[0]), test)
    return train, test


def subject_holdout_split(y, subjects, fraction: float = DEFAULT_HOLDOUT_FRACTION, seed: int = 0):
    """Hold out whole subjects until roughly `fraction` of rows are reserved."""
    subjects = np.asarray(subjects)
    uniq = sorted(set(subjects))
    if len(uniq) < 2:
        raise ValueError("subject-wise split needs at least 2 subjects")
    rng = derive_rng(seed, STREAM_SPLIT)
    order = rng.permutation(len(uniq))
    target = fraction * subjects.shape[0]
    held, held_rows = [], 0
    for i in order:
        if held_rows >= target and held:
            break
        held.append(uniq[i])
        held_rows += int((subjects == uniq[i]).sum())
    if len(held) == len(uniq):
        held = held[:-1]
    mask = np.isin(subjects, held)
    return np.flatnonzero(~mask), np.flatnonzero(mask)


def subject_kfold(subjects, k: int = DEFAULT_CV_FOLDS, seed: int = 0) -> np.ndarray:
    """Fold assignment keeping each subject's rows together."""
    subjects = np.asarray(subjects)
    uniq = sorted(set(subjects))
    if len(uniq) < k:
        raise ClassSmallerThanKError(f"{len(uniq)} subjects < k={k} folds")
    rng = derive_rng(seed, STREAM_FOLDS)
    order = rng.permutation(len(uniq))
    folds = np.full(subjects.shape[0], -1, dtype=np.int64)
    for pos, i in enumerate(order):
        folds[subjects == uniq[i]] = pos % k
    return folds


# ---------------------------------------------------------------------------
# ROC / AUC
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RocCurve:
    label: str
    fpr: np.ndarray
    tpr: np.ndarray
    auc: float


def roc_binary(scores: np.ndarray, positives: np.ndarray) -> tuple[np.ndarray, np.ndarray, float]:
    """ROC points and trapezoidal AUC for one binary problem.

    Thresholds sweep the distinct score values from high to low; tied scores
    fall at a single threshold, producing diagonal segments whose trapezoids
    count tied pairs one half, matching the Mann-Whitney statistic.
    """
    scores = np.asarray(scores, dtype=np.float64)
    positives = np.asarray(positives, dtype=bool)
    n_pos = int(positives.sum())
    n_neg = positives.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise SingleClassInputError("ROC needs at least one positive and one negative")
    order = np.argsort(-scores, kind="stable")
    sorted_scores = scores[order]
    sorted_pos = positives[order]
    # Indices where a run of tied scores ends.
    boundary = np.flatnonzero(np.diff(sorted_scores) != 0)
    ends = np.concatenate([boundary, [scores.size - 1]])
    tp = np.concatenate([[0], np.cumsum(sorted_pos)[ends]])
    fp = np.concatenate([[0], np.cumsum(~sorted_pos)[ends]])
    tpr = tp / n_pos
    fpr = fp / n_neg
    auc = float(np.trapezoid(tpr, fpr))
    return fpr, tpr, auc


def roc_ovr(scores: np.ndarray, y, classes: tuple[str, ...]) -> dict[str, RocCurve]:
    """One-versus-rest ROC per class from a (n, n_classes) score matrix."""
    scores = np.asarray(scores, dtype=np.float64)
    y = np.asarray(y)
    curves = {}
    for i, label in enumerate(classes):
        positives = y == label
        if positives.all() or not positives.any():
            continue
        fpr, tpr, auc = roc_binary(scores[:, i], positives)
        curves[label] = RocCurve(label=label, fpr=fpr, tpr=tpr, auc=auc)
    return curves


# ---------------------------------------------------------------------------
# Evaluation protocol
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FamilyCvResult:
    family: str
    fold_accuracies: tuple[float, ...]
    mean_accuracy: float
    std_accuracy: float


@dataclass(frozen=True)
class EvalReport:
    folds: int
    families: dict[str, FamilyCvResult]
    selected_family: str
    holdout_accuracy: float
    confusion_labels: tuple[str, ...]
    confusion_matrix: np.ndarray
    roc: dict[str, RocCurve]
    n_train: int
    n_holdout: int
    train_ids: np.ndarray
    holdout_ids: np.ndarray
    dropped_rows: int = 0


def accuracy(y_true, y_pred) -> float:
    y_true = np.asarray(y_true)
    y_pred = np.asarray(y_pred)
    return float((y_true == y_pred).mean())


def _predict_labels(model, X) -> np.ndarray:
    proba = model.predict_proba(X)
    return np.array([model.classes[i] for i in np.argmax(proba, axis=1)])


def evaluate(
    X: np.ndarray,
    y,
    feature_names: tuple[str, ...],
    families: tuple[str, ...] = FAMILY_NAMES,
    params: ExtraTreesParams = ExtraTreesParams(),
    seed: int = 0,
    folds: int = DEFAULT_CV_FOLDS,
    holdout_fraction: float = DEFAULT_HOLDOUT_FRACTION,
    knn_k: int = DEFAULT_KNN_K,
    subjects=None,
    subject_wise: bool = False,
) -> tuple[EvalReport, dict]:
    """Hold out 20%, cross-validate each family on the rest, refit the winner.

    Selection is highest mean CV accuracy, ties broken by lower standard
    deviation then family order.  The winner refits on the full training
    partition and scores the holdout once, including per-class OVR ROC.
    Returns the report plus the fitted models (always including extra_trees,
    which downstream explanation requires).
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y)
    _check_matrix(X, y)
    if subject_wise:
        if subjects is None:
            raise ValueError("subject_wise evaluation requires subjects")
        train_ids, holdout_ids = subject_holdout_split(y, subjects, holdout_fraction, seed)
        fold_of = subject_kfold(np.asarray(subjects)[train_ids], folds, seed)
    else:
        train_ids, holdout_ids = holdout_split(y, holdout_fraction, seed)
        fold_of = stratified_kfold(y[train_ids], folds, seed)
    X_train, y_train = X[train_ids], y[train_ids]
    X_hold, y_hold = X[holdout_ids], y[holdout_ids]

    cv_results: dict[str, FamilyCvResult] = {}
    for family in families:
        fold_acc = []
        for fold in range(folds):
            val = fold_of == fold
            model = train_family(
                family, X_train[~val], y_train[~val], feature_names, params,
                seed=seed * folds + fold, knn_k=knn_k,
            )
            fold_acc.append(accuracy(y_train[val], _predict_labels(model, X_train[val])))
        cv_results[family] = FamilyCvResult(
            family=family,
            fold_accuracies=tuple(fold_acc),
            mean_accuracy=float(np.mean(fold_acc)),
            std_accuracy=float(np.std(fold_acc)),
        )

    selected = min(
        cv_results.values(),
        key=lambda r: (-r.mean_accuracy, r.std_accuracy, families.index(r.family)),
    ).family

    fitted = {
        family: train_family(family, X_train, y_train, feature_names, params, seed, knn_k)
        for family in sorted(set(families) | {"extra_trees"})
    }
    best_model = fitted[selected]
    holdout_proba = best_model.predict_proba(X_hold)
    y_pred = np.array([best_model.classes[i] for i in np.argmax(holdout_proba, axis=1)])

    classes = best_model.classes
    confusion = np.zeros((len(classes), len(classes)), dtype=np.int64)
    class_index = {c: i for i, c in enumerate(classes)}
    for true, pred in zip(y_hold, y_pred):
        confusion[class_index[true], class_index[pred]] += 1

    report = EvalReport(
        folds=folds,
        families=cv_results,
        selected_family=selected,
        holdout_accuracy=accuracy(y_hold, y_pred),
        confusion_labels=classes,
        confusion_matrix=confusion,
        roc=roc_ovr(holdout_proba, y_hold, classes),
        n_train=int(train_ids.size),
        n_holdout=int(holdout_ids.size),
        train_ids=train_ids,
        holdout_ids=holdout_ids,
    )
    return report, fitted
