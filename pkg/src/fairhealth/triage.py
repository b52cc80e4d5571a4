"""Dengue severity triage with a from-scratch CART tree.

The tree is trained on five demographic features (age, gender, area type,
house type, district) with Gini impurity. Age is split on midpoints between
sorted distinct values; categorical features are split one-vs-rest. When the
leaf's majority-class probability is below 0.70 the patient is rerouted to a
doctor instead of receiving an automated recommendation. Recommendations are
available in English and Bangla.

Trees serialize to a line-oriented text format (see :func:`dumps_tree`)
so that trained trees can be bundled and diffed.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import InvalidConfigError, InvalidInputError

__all__ = [
    "CLASSES",
    "FEATURES",
    "REROUTE_THRESHOLD",
    "TriageRecord",
    "Node",
    "DecisionTree",
    "TriageResult",
    "gini_impurity",
    "train_tree",
    "predict_proba",
    "gini_feature_importance",
    "dumps_tree",
    "loads_tree",
    "load_tree",
    "reference_tree",
    "messages",
    "assess_dengue_risk",
]

CLASSES = ("Mild", "Severe")
# (name, kind) in declaration order; this order also breaks split ties
FEATURES = (
    ("age", "numeric"),
    ("gender", "categorical"),
    ("area_type", "categorical"),
    ("house_type", "categorical"),
    ("district", "categorical"),
)
GENDERS = ("male", "female")
AREA_TYPES = ("urban", "rural")
HOUSE_TYPES = ("building", "tinshed", "other")
LANGUAGES = ("english", "bangla")
REROUTE_THRESHOLD = 0.70


@dataclass(frozen=True)
class TriageRecord:
    age: float
    gender: str
    area_type: str
    house_type: str
    district: str

    def __post_init__(self):
        if not (isinstance(self.age, (int, float)) and 0 <= self.age <= 120):
            raise InvalidInputError(f"age must be a number in [0, 120], got {self.age!r}")
        if self.gender not in GENDERS:
            raise InvalidInputError(f"gender must be one of {GENDERS}, got {self.gender!r}")
        if self.area_type not in AREA_TYPES:
            raise InvalidInputError(f"area_type must be one of {AREA_TYPES}, got {self.area_type!r}")
        if self.house_type not in HOUSE_TYPES:
            raise InvalidInputError(f"house_type must be one of {HOUSE_TYPES}, got {self.house_type!r}")
        if not isinstance(self.district, str) or not self.district.strip() or "\t" in self.district:
            raise InvalidInputError(f"district must be a non-empty name, got {self.district!r}")

    def value(self, feature: str):
        return getattr(self, feature)


@dataclass
class Node:
    counts: tuple  # per class, in CLASSES order
    impurity: float
    feature: str | None = None
    threshold: float | None = None  # numeric: value <= threshold goes left
    category: str | None = None  # categorical: value == category goes left
    left: "Node | None" = None
    right: "Node | None" = None
    majority: str = "left"  # branch holding more training samples

    @property
    def is_leaf(self) -> bool:
        return self.feature is None

    @property
    def n_samples(self) -> int:
        return sum(self.counts)


@dataclass
class DecisionTree:
    root: Node
    max_depth: int
    min_leaf: int
    vocabulary: dict  # categorical feature -> sorted categories seen in training
    house_type_mode: str

    def depth(self) -> int:
        def walk(node):
            return 0 if node.is_leaf else 1 + max(walk(node.left), walk(node.right))

        return walk(self.root)

    def leaf_for(self, record: TriageRecord) -> Node:
        node = self.root
        while not node.is_leaf:
            value = record.value(node.feature)
            if node.threshold is not None:
                go_left = value <= node.threshold
            elif value in self.vocabulary[node.feature]:
                go_left = value == node.category
            else:
                go_left = node.majority == "left"
            node = node.left if go_left else node.right
        return node


@dataclass(frozen=True)
class TriageResult:
    prediction: str
    confidence: float
    recommendation: str
    rerouted: bool
    language: str

    def as_dict(self) -> dict:
        return {
            "prediction": self.prediction,
            "confidence": self.confidence,
            "recommendation": self.recommendation,
            "rerouted": self.rerouted,
            "language": self.language,
        }


def gini_impurity(class_counts: Sequence[int]) -> float:
    counts = np.asarray(class_counts, dtype=np.float64)
    if counts.size == 0 or np.any(counts < 0) or counts.sum() <= 0:
        raise InvalidInputError("class counts must be non-negative with a positive total")
    p = counts / counts.sum()
    return float(1.0 - np.sum(p * p))


def _counts(y: np.ndarray) -> tuple:
    return tuple(int(np.sum(y == k)) for k in range(len(CLASSES)))


def _candidate_splits(column, kind):
    """Yield (threshold, category, left mask) for every allowed split."""
    if kind == "numeric":
        values = np.unique(column)
        for lo, hi in zip(values[:-1], values[1:]):
            threshold = float((lo + hi) / 2.0)
            yield threshold, None, column <= threshold
    else:
        for cat in sorted(set(column.tolist())):
            yield None, cat, column == cat


def _best_split(X: dict, y: np.ndarray, min_leaf: int):
    n = y.size
    parent = gini_impurity(_counts(y))
    best = None
    best_gain = 1e-12
    for name, kind in FEATURES:
        for threshold, category, mask in _candidate_splits(X[name], kind):
            n_left = int(mask.sum())
            if n_left < min_leaf or n - n_left < min_leaf:
                continue
            child = (n_left * gini_impurity(_counts(y[mask])) + (n - n_left) * gini_impurity(_counts(y[~mask]))) / n
            gain = parent - child
            if gain > best_gain:
                best_gain = gain
                best = (name, threshold, category, mask)
    return best


def _grow(X: dict, y: np.ndarray, depth: int, max_depth: int, min_leaf: int) -> Node:
    counts = _counts(y)
    node = Node(counts, gini_impurity(counts))
    if depth >= max_depth or node.impurity == 0.0 or y.size < 2 * min_leaf:
        return node
    split = _best_split(X, y, min_leaf)
    if split is None:
        return node
    name, threshold, category, mask = split
    node.feature, node.threshold, node.category = name, threshold, category
    node.majority = "left" if mask.sum() >= (~mask).sum() else "right"
    node.left = _grow({k: v[mask] for k, v in X.items()}, y[mask], depth + 1, max_depth, min_leaf)
    node.right = _grow({k: v[~mask] for k, v in X.items()}, y[~mask], depth + 1, max_depth, min_leaf)
    return node


def _columns(records: Sequence[TriageRecord]) -> dict:
    cols = {}
    for name, kind in FEATURES:
        values = [r.value(name) for r in records]
        cols[name] = np.array(values, dtype=np.float64 if kind == "numeric" else object)
    return cols


def train_tree(
    records: Sequence[TriageRecord],
    labels: Sequence[str],
    max_depth: int = 4,
    min_leaf: int = 5,
    seed: int = 0,
) -> DecisionTree:
    """Grow a CART tree greedily on Gini impurity decrease.

    Growth stops at ``max_depth``, when a node is pure, or when no split
    leaves ``min_leaf`` samples on both sides. Ties go to the earlier feature
    in :data:`FEATURES`, then the lower threshold or alphabetically first
    category. The search is exhaustive, so ``seed`` has no effect; it is kept
    for interface symmetry with randomized learners.
    """
    records = list(records)
    if max_depth < 0 or min_leaf < 1:
        raise InvalidConfigError("max_depth must be >= 0 and min_leaf >= 1")
    if len(records) != len(labels):
        raise InvalidInputError(f"{len(records)} records but {len(labels)} labels")
    if not records:
        raise InvalidInputError("no training records")
    try:
        y = np.array([CLASSES.index(lab) for lab in labels])
    except ValueError:
        raise InvalidInputError(f"labels must be one of {CLASSES}") from None
    X = _columns(records)
    vocabulary = {name: sorted(set(X[name].tolist())) for name, kind in FEATURES if kind == "categorical"}
    houses = [r.house_type for r in records]
    # most frequent house type, alphabetical on ties
    mode = min(set(houses), key=lambda h: (-houses.count(h), h))
    root = _grow(X, y, 0, max_depth, min_leaf)
    return DecisionTree(root, max_depth, min_leaf, vocabulary, mode)


def predict_proba(tree: DecisionTree, record: TriageRecord) -> dict:
    if not isinstance(record, TriageRecord):
        raise InvalidInputError("predict_proba expects a TriageRecord")
    counts = tree.leaf_for(record).counts
    total = sum(counts)
    return {cls: c / total for cls, c in zip(CLASSES, counts)}


def gini_feature_importance(tree: DecisionTree, training_size: int | None = None) -> dict:
    """Sample-weighted impurity decrease per feature, normalized to sum to 1.

    A single-leaf tree has no splits and gets all-zero importances.
    """
    total = training_size or tree.root.n_samples
    raw = {name: 0.0 for name, _ in FEATURES}

    def walk(node):
        if node.is_leaf:
            return
        n, nl, nr = node.n_samples, node.left.n_samples, node.right.n_samples
        decrease = node.impurity - (nl * node.left.impurity + nr * node.right.impurity) / n
        raw[node.feature] += n / total * decrease
        walk(node.left)
        walk(node.right)

    walk(tree.root)
    s = sum(raw.values())
    if s == 0.0:
        return raw
    return {k: v / s for k, v in raw.items()}


# -- serialization -----------------------------------------------------------
#
# fairhealth-tree 1
# max_depth<TAB>4
# min_leaf<TAB>5
# house_type_mode<TAB>building
# vocab<TAB>district<TAB>Barishal<TAB>Dhaka...
# node lines, pre-order, indented two spaces per depth:
#   split<TAB>age<TAB><=<TAB>14.5<TAB>counts=a,b<TAB>impurity=x<TAB>majority=left
#   split<TAB>district<TAB>==<TAB>Dhaka<TAB>...
#   leaf<TAB>counts=a,b<TAB>impurity=x
# floats are written with repr() (shortest round-trip form).

_HEADER = "fairhealth-tree 1"


def dumps_tree(tree: DecisionTree) -> str:
    lines = [
        _HEADER,
        f"max_depth\t{tree.max_depth}",
        f"min_leaf\t{tree.min_leaf}",
        f"house_type_mode\t{tree.house_type_mode}",
    ]
    for name, cats in tree.vocabulary.items():
        lines.append("\t".join(["vocab", name, *cats]))

    def walk(node, depth):
        pad = "  " * depth
        stats = f"counts={','.join(map(str, node.counts))}\timpurity={node.impurity!r}"
        if node.is_leaf:
            lines.append(f"{pad}leaf\t{stats}")
            return
        if node.threshold is not None:
            test = f"{node.feature}\t<=\t{node.threshold!r}"
        else:
            test = f"{node.feature}\t==\t{node.category}"
        lines.append(f"{pad}split\t{test}\t{stats}\tmajority={node.majority}")
        walk(node.left, depth + 1)
        walk(node.right, depth + 1)

    walk(tree.root, 0)
    return "\n".join(lines) + "\n"


def loads_tree(text: str) -> DecisionTree:
    lines = text.splitlines()
    if not lines or lines[0] != _HEADER:
        raise InvalidInputError("not a fairhealth tree file")
    meta, vocabulary = {}, {}
    body = []
    for line in lines[1:]:
        if not line.strip():
            continue
        if line.startswith(" ") or line.startswith(("split\t", "leaf\t")):
            body.append(line)
            continue
        cells = line.split("\t")
        if cells[0] == "vocab":
            vocabulary[cells[1]] = cells[2:]
        else:
            meta[cells[0]] = cells[1]

    pos = 0

    def parse():
        nonlocal pos
        cells = body[pos].strip(" ").split("\t")
        pos += 1
        fields = dict(c.split("=", 1) for c in cells if "=" in c and not c.startswith(("<=", "==")))
        counts = tuple(int(c) for c in fields["counts"].split(","))
        node = Node(counts, float(fields["impurity"]))
        if cells[0] == "split":
            node.feature = cells[1]
            if cells[2] == "<=":
                node.threshold = float(cells[3])
            else:
                node.category = cells[3]
            node.majority = fields["majority"]
            node.left = parse()
            node.right = parse()
        return node

    try:
        root = parse()
        return DecisionTree(root, int(meta["max_depth"]), int(meta["min_leaf"]), vocabulary, meta["house_type_mode"])
    except (KeyError, IndexError, ValueError) as exc:
        raise InvalidInputError(f"malformed tree file: {exc}") from None


def load_tree(path) -> DecisionTree:
    return loads_tree(Path(path).read_text(encoding="utf-8"))


@lru_cache(maxsize=1)
def reference_tree() -> DecisionTree:
    """Tree bundled with the package, trained on ``synth_dengue(seed=2023)``."""
    text = resources.files("fairhealth").joinpath("data/dengue_reference_tree.txt").read_text(encoding="utf-8")
    return loads_tree(text)


@lru_cache(maxsize=1)
def messages() -> dict:
    """Localized recommendation strings: ``{message_id: {language: text}}``."""
    text = resources.files("fairhealth").joinpath("data/triage_messages.tsv").read_text(encoding="utf-8")
    table = {}
    for line in text.splitlines():
        if not line.strip() or line.startswith("#"):
            continue
        key, english, bangla = line.split("\t")
        table[key] = {"english": english, "bangla": bangla}
    return table


def assess_dengue_risk(
    age,
    gender,
    area_type,
    district,
    language: str = "english",
    model: DecisionTree | None = None,
    house_type: str | None = None,
) -> TriageResult:
    """Triage one patient.

    ``house_type`` may be omitted, in which case the most common house type
    in the model's training data is assumed. Low-confidence predictions
    (below 0.70) are rerouted to a doctor.
    """
    if language not in LANGUAGES:
        raise InvalidInputError(f"language must be one of {LANGUAGES}, got {language!r}")
    model = model or reference_tree()
    record = TriageRecord(age, gender, area_type, house_type or model.house_type_mode, district)
    proba = predict_proba(model, record)
    # ties resolve to Severe: the cautious reading
    prediction = max(reversed(CLASSES), key=lambda c: proba[c])
    confidence = proba[prediction]
    rerouted = confidence < REROUTE_THRESHOLD
    key = "reroute" if rerouted else prediction.lower()
    return TriageResult(prediction, confidence, messages()[key][language], rerouted, language)
