"""Regression tree over the three water features, plus C export.

The tree is grown greedily by variance reduction on 0/1 labels, so the
leaf means are Good-class probabilities and thresholding at 0.5 turns
the regressor into the deployed classifier.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any, Union

import numpy as np

from .labeling import Dataset
from .model import Condition


class EmptyDataset(ValueError):
    """fit/evaluate called with no rows."""


class InvalidIdentifier(ValueError):
    """Requested C function name is not a legal identifier."""


class Feature(Enum):
    TEMPERATURE = 0
    PH = 1
    TDS = 2


# Short names double as C parameter names and JSON feature tags.
_FEATURE_TAG = {Feature.TEMPERATURE: "temp", Feature.PH: "ph", Feature.TDS: "tds"}
_TAG_FEATURE = {tag: feature for feature, tag in _FEATURE_TAG.items()}

_C_KEYWORDS = frozenset(
    """auto break case char const continue default do double else enum extern
    float for goto if inline int long register restrict return short signed
    sizeof static struct switch typedef union unsigned void volatile while""".split()
)


@dataclass(frozen=True)
class TreeHyperparams:
    max_depth: int = 8
    min_samples_split: int = 2
    min_impurity_decrease: float = 0.0

    def __post_init__(self):
        if self.max_depth < 1:
            raise ValueError("max_depth must be >= 1")
        if self.min_samples_split < 2:
            raise ValueError("min_samples_split must be >= 2")
        if self.min_impurity_decrease < 0.0:
            raise ValueError("min_impurity_decrease must be >= 0")


@dataclass(frozen=True)
class Leaf:
    value: float
    n_samples: int


@dataclass(frozen=True)
class Internal:
    feature: Feature
    threshold: float
    left: "Node"
    right: "Node"
    n_samples: int


Node = Union[Leaf, Internal]


def _route(node: Node, x: tuple[float, float, float]) -> Leaf:
    while isinstance(node, Internal):
        node = node.left if x[node.feature.value] <= node.threshold else node.right
    return node


@dataclass(frozen=True)
class DecisionTree:
    root: Node
    hyperparams: TreeHyperparams = field(default_factory=TreeHyperparams)

    def predict(self, x: tuple[float, float, float]) -> float:
        """Leaf mean for one (temperature, ph, tds) triple."""
        return _route(self.root, x).value

    def predict_condition(self, x: tuple[float, float, float]) -> Condition:
        """Good iff the leaf mean is at least 0.5."""
        return Condition.from_value(self.predict(x))


def predict(tree: DecisionTree | Node, temp_c: float, ph: float, tds_mg_l: float) -> tuple[float, Condition]:
    """(leaf value, thresholded condition); accepts a tree or a bare node."""
    root = tree.root if isinstance(tree, DecisionTree) else tree
    value = _route(root, (temp_c, ph, tds_mg_l)).value
    return value, Condition.from_value(value)


@dataclass(frozen=True)
class EvalReport:
    """Accuracy plus 2x2 confusion counts; Good is the positive class."""

    n: int
    accuracy: float
    tp: int
    tn: int
    fp: int
    fn: int

    def to_json_dict(self) -> dict[str, Any]:
        return {"n": self.n, "accuracy": self.accuracy, "tp": self.tp, "tn": self.tn, "fp": self.fp, "fn": self.fn}


def _node_sse(y: np.ndarray) -> float:
    total = float(y.sum())
    return float((y * y).sum()) - total * total / y.size


def _best_split(X: np.ndarray, y: np.ndarray) -> tuple[float, Feature, float] | None:
    """Lowest-SSE (children) split, or None when no feature has two values.

    Candidate thresholds are midpoints between consecutive distinct
    sorted values. Ties go to the lowest feature index, then to the
    smallest threshold (argmin keeps the first, i.e. leftmost, optimum).
    """
    n = y.size
    best: tuple[float, Feature, float] | None = None
    for feature in Feature:
        x = X[:, feature.value]
        order = np.argsort(x, kind="stable")
        xs = x[order]
        ys = y[order]
        cuts = np.nonzero(xs[:-1] < xs[1:])[0]
        if cuts.size == 0:
            continue
        cum_y = np.cumsum(ys)
        cum_y2 = np.cumsum(ys * ys)
        total_y = cum_y[-1]
        total_y2 = cum_y2[-1]
        n_left = cuts + 1.0
        n_right = n - n_left
        sse = (cum_y2[cuts] - cum_y[cuts] ** 2 / n_left) + (
            (total_y2 - cum_y2[cuts]) - (total_y - cum_y[cuts]) ** 2 / n_right
        )
        k = int(np.argmin(sse))
        pos = int(cuts[k])
        candidate = (float(sse[k]), feature, float((xs[pos] + xs[pos + 1]) / 2.0))
        if best is None or candidate[0] < best[0]:
            best = candidate
    return best


def _build(X: np.ndarray, y: np.ndarray, depth: int, hp: TreeHyperparams) -> Node:
    n = y.size
    mean = float(y.mean())
    if n < hp.min_samples_split or depth >= hp.max_depth or y.min() == y.max():
        return Leaf(mean, n)
    found = _best_split(X, y)
    if found is None:
        return Leaf(mean, n)
    children_sse, feature, threshold = found
    if _node_sse(y) - children_sse < hp.min_impurity_decrease:
        return Leaf(mean, n)
    mask = X[:, feature.value] <= threshold
    if mask.all() or not mask.any():
        # Midpoint rounded onto a data value (adjacent floats); unsplittable.
        return Leaf(mean, n)
    left = _build(X[mask], y[mask], depth + 1, hp)
    right = _build(X[~mask], y[~mask], depth + 1, hp)
    return Internal(feature, threshold, left, right, n)


def fit(dataset: Dataset, hyperparams: TreeHyperparams | None = None) -> DecisionTree:
    if len(dataset) == 0:
        raise EmptyDataset("cannot fit on an empty dataset")
    hp = hyperparams or TreeHyperparams()
    X = np.ascontiguousarray(dataset.features, dtype=np.float64)
    y = np.ascontiguousarray(dataset.labels, dtype=np.float64)
    return DecisionTree(root=_build(X, y, 0, hp), hyperparams=hp)


def evaluate(tree: DecisionTree, dataset: Dataset) -> EvalReport:
    if len(dataset) == 0:
        raise EmptyDataset("cannot evaluate on an empty dataset")
    tp = tn = fp = fn = 0
    for features, label in zip(dataset.features, dataset.labels):
        predicted_good = tree.predict(tuple(features)) >= 0.5
        actual_good = label >= 0.5
        if predicted_good and actual_good:
            tp += 1
        elif not predicted_good and not actual_good:
            tn += 1
        elif predicted_good:
            fp += 1
        else:
            fn += 1
    n = len(dataset)
    return EvalReport(n, (tp + tn) / n, tp, tn, fp, fn)


def tree_depth(tree: DecisionTree) -> int:
    def walk(node: Node) -> int:
        if isinstance(node, Leaf):
            return 0
        return 1 + max(walk(node.left), walk(node.right))

    return walk(tree.root)


def tree_size(tree: DecisionTree) -> int:
    def walk(node: Node) -> int:
        if isinstance(node, Leaf):
            return 1
        return 1 + walk(node.left) + walk(node.right)

    return walk(tree.root)


def export_classifier(tree: DecisionTree, name: str = "classify") -> str:
    """Standalone C function: ``int <name>(float temp, float ph, float tds)``.

    Pure nested if/else on ``<=`` with no includes or globals; thresholds
    are emitted as double literals via repr so the compiled comparisons
    match predict() exactly for float-representable inputs. Output text
    is a deterministic function of the tree.
    """
    if not re.fullmatch(r"[A-Za-z_][A-Za-z0-9_]*", name) or name in _C_KEYWORDS:
        raise InvalidIdentifier(f"not a usable C function name: {name!r}")

    lines = [f"int {name}(float temp, float ph, float tds) {{"]

    def emit(node: Node, depth: int) -> None:
        pad = "    " * depth
        if isinstance(node, Leaf):
            lines.append(f"{pad}return {1 if node.value >= 0.5 else 0};")
            return
        lines.append(f"{pad}if ({_FEATURE_TAG[node.feature]} <= {node.threshold!r}) {{")
        emit(node.left, depth + 1)
        lines.append(f"{pad}}} else {{")
        emit(node.right, depth + 1)
        lines.append(f"{pad}}}")

    emit(tree.root, 1)
    lines.append("}")
    return "\n".join(lines) + "\n"


TREE_FORMAT = "aquafloc-tree-v1"


def _node_to_dict(node: Node) -> dict[str, Any]:
    if isinstance(node, Leaf):
        return {"value": node.value, "n": node.n_samples}
    return {
        "feature": _FEATURE_TAG[node.feature],
        "threshold": node.threshold,
        "left": _node_to_dict(node.left),
        "right": _node_to_dict(node.right),
    }


def _node_from_dict(data: dict[str, Any]) -> Node:
    if "value" in data:
        return Leaf(float(data["value"]), int(data["n"]))
    left = _node_from_dict(data["left"])
    right = _node_from_dict(data["right"])
    # Internal counts are recomputable: every row lands in exactly one child.
    return Internal(_TAG_FEATURE[data["feature"]], float(data["threshold"]), left, right, left.n_samples + right.n_samples)


def save_tree(tree: DecisionTree, path: str | Path) -> None:
    hp = tree.hyperparams
    doc = {
        "format": TREE_FORMAT,
        "hyperparams": {
            "max_depth": hp.max_depth,
            "min_samples_split": hp.min_samples_split,
            "min_impurity_decrease": hp.min_impurity_decrease,
        },
        "root": _node_to_dict(tree.root),
    }
    Path(path).write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")


def reference_tree() -> DecisionTree:
    """Deterministic default classifier: fit on clean synthetic data.

    Used wherever a command needs a model but none was supplied (the
    live server, scenario runs). Same seed every time, so two processes
    built this way classify identically.
    """
    from .labeling import generate_dataset

    return fit(generate_dataset(4000, seed=0, noise_rate=0.0))


def load_tree(path: str | Path) -> DecisionTree:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    if not isinstance(doc, dict) or doc.get("format") != TREE_FORMAT:
        raise ValueError(f"not a {TREE_FORMAT} file: {path}")
    hp_doc = doc.get("hyperparams", {})
    hp = TreeHyperparams(
        max_depth=int(hp_doc.get("max_depth", 8)),
        min_samples_split=int(hp_doc.get("min_samples_split", 2)),
        min_impurity_decrease=float(hp_doc.get("min_impurity_decrease", 0.0)),
    )
    return DecisionTree(root=_node_from_dict(doc["root"]), hyperparams=hp)
