"""Adversarially debiased aid-priority ranking for flood-affected upazilas.

A small network maps each upazila's standardized numeric features to a hidden
representation ``h = tanh(W1 x + b1)``. Two logistic heads read ``h``:

* the predictor outputs a priority score in [0, 1] and is trained on MSE;
* the adversary tries to recover the region (Haor vs non-Haor) and is trained
  on binary cross-entropy.

Between ``h`` and the adversary sits a gradient reversal layer: identity on
the forward pass, ``-lambda * grad`` on the backward pass. The adversary
still learns to detect region, while the encoder is pushed to make region
undetectable. With ``lambda = 0`` this is the plain regression baseline.

All gradients are written out by hand; :func:`loss_terms` exposes the two
scalar losses so they can be checked by finite differences.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from .errors import InsufficientGroupsError, InvalidConfigError, InvalidInputError, TrainingDivergedError

__all__ = [
    "HAOR",
    "NON_HAOR",
    "UpazilaRecord",
    "DebiasConfig",
    "FairModel",
    "RankEntry",
    "PriorityRanking",
    "grl_forward",
    "grl_backward",
    "upazila_features",
    "composite_priority",
    "loss_terms",
    "backprop",
    "train_fair_regressor",
    "statistical_parity_difference",
    "regional_fairness_gap",
    "generate_priority_ranking",
    "ranking_shift",
    "reference_model",
]

HAOR = "Haor"
NON_HAOR = "non-Haor"
PARAM_NAMES = ("W1", "b1", "wp", "bp", "wa", "ba")


@dataclass(frozen=True)
class UpazilaRecord:
    name: str
    district: str
    region_type: str
    poverty_rate: float
    damage_usd_m: float
    affected_population: int

    def __post_init__(self):
        if self.region_type not in (HAOR, NON_HAOR):
            raise InvalidInputError(f"{self.name}: region_type must be {HAOR!r} or {NON_HAOR!r}")
        if not (0.0 <= self.poverty_rate <= 1.0):
            raise InvalidInputError(f"{self.name}: poverty_rate {self.poverty_rate} outside [0, 1]")
        if not (self.damage_usd_m >= 0.0):
            raise InvalidInputError(f"{self.name}: damage_usd_m must be non-negative")
        if self.affected_population < 0:
            raise InvalidInputError(f"{self.name}: affected_population must be non-negative")


@dataclass(frozen=True)
class DebiasConfig:
    """Training settings.

    ``mse_weight`` scales the predictor loss against the adversary's
    cross-entropy. Priority targets span a narrow range, so unweighted MSE
    is tiny next to the BCE and any ``lam > 0`` would flatten the predictor.
    """

    lam: float = 1.0
    hidden_width: int = 8
    epochs: int = 5000
    learning_rate: float = 0.2
    mse_weight: float = 8.0
    seed: int = 0

    def __post_init__(self):
        if not (self.lam >= 0.0):
            raise InvalidConfigError("lambda must be non-negative")
        if self.hidden_width < 1 or self.epochs < 1:
            raise InvalidConfigError("hidden_width and epochs must be >= 1")
        if not (self.learning_rate > 0.0) or not (self.mse_weight > 0.0):
            raise InvalidConfigError("learning_rate and mse_weight must be positive")


def grl_forward(h):
    return h


def grl_backward(upstream_gradient, lam: float):
    """Backward pass of the gradient reversal layer: ``-lam * grad``."""
    return -lam * np.asarray(upstream_gradient, dtype=np.float64)


def upazila_features(records: Sequence[UpazilaRecord]) -> np.ndarray:
    """Raw feature matrix: poverty rate, log1p damage, log1p affected people."""
    return np.array(
        [[r.poverty_rate, math.log1p(r.damage_usd_m), math.log1p(r.affected_population)] for r in records],
        dtype=np.float64,
    )


def composite_priority(records: Sequence[UpazilaRecord]) -> np.ndarray:
    """Reference priority target in [0, 1].

    ``0.5 * damage + 0.3 * poverty + 0.2 * affected``, where each term is the
    min-max normalized column of :func:`upazila_features`.
    """
    raw = upazila_features(records)
    lo, hi = raw.min(axis=0), raw.max(axis=0)
    span = np.where(hi > lo, hi - lo, 1.0)
    norm = (raw - lo) / span
    return 0.3 * norm[:, 0] + 0.5 * norm[:, 1] + 0.2 * norm[:, 2]


def _sigmoid(z):
    return 0.5 * (1.0 + np.tanh(0.5 * z))


def _forward(params, X):
    hidden = np.tanh(X @ params["W1"] + params["b1"])
    zp = hidden @ params["wp"] + params["bp"]
    za = grl_forward(hidden) @ params["wa"] + params["ba"]
    return hidden, zp, za


def loss_terms(params: dict, X, y, region) -> tuple[float, float]:
    """Predictor MSE and adversary BCE for parameters ``params``."""
    _, zp, za = _forward(params, X)
    mse = float(np.mean((_sigmoid(zp) - y) ** 2))
    bce = float(np.mean(np.logaddexp(0.0, za) - region * za))
    return mse, bce


def backprop(params: dict, X, y, region, lam: float, mse_weight: float = 1.0) -> dict:
    """Gradients used for one descent step.

    With ``L = mse_weight * MSE``: predictor parameters follow dL, adversary
    parameters follow d(BCE), and the encoder receives dL plus the reversed
    adversary gradient, i.e. dL - lam * d(BCE).
    """
    n = X.shape[0]
    hidden, zp, za = _forward(params, X)
    p = _sigmoid(zp)
    a = _sigmoid(za)

    d_zp = mse_weight * 2.0 * (p - y) * p * (1.0 - p) / n
    d_za = (a - region) / n
    grads = {
        "wp": hidden.T @ d_zp,
        "bp": np.array(d_zp.sum()),
        "wa": hidden.T @ d_za,
        "ba": np.array(d_za.sum()),
    }
    d_hidden = np.outer(d_zp, params["wp"]) + grl_backward(np.outer(d_za, params["wa"]), lam)
    d_z1 = d_hidden * (1.0 - hidden**2)
    grads["W1"] = X.T @ d_z1
    grads["b1"] = d_z1.sum(axis=0)
    return grads


def init_params(n_features: int, hidden_width: int, seed: int) -> dict:
    rng = np.random.default_rng(seed)
    return {
        "W1": rng.standard_normal((n_features, hidden_width)) / math.sqrt(n_features),
        "b1": np.zeros(hidden_width),
        "wp": rng.standard_normal(hidden_width) / math.sqrt(hidden_width),
        "bp": np.array(0.0),
        "wa": rng.standard_normal(hidden_width) / math.sqrt(hidden_width),
        "ba": np.array(0.0),
    }


def _region_flags(regions) -> np.ndarray:
    flags = []
    for r in regions:
        if isinstance(r, (bool, np.bool_)):
            flags.append(float(r))
        elif r in (HAOR, NON_HAOR):
            flags.append(1.0 if r == HAOR else 0.0)
        else:
            raise InvalidInputError(f"unknown region flag {r!r}")
    return np.array(flags)


@dataclass
class FairModel:
    params: dict
    feature_mean: np.ndarray
    feature_std: np.ndarray
    config: DebiasConfig
    history: list = field(default_factory=list)  # (mse, bce) per epoch

    def _inputs(self, records):
        return (upazila_features(records) - self.feature_mean) / self.feature_std

    def predict(self, records: Sequence[UpazilaRecord]) -> np.ndarray:
        _, zp, _ = _forward(self.params, self._inputs(records))
        return _sigmoid(zp)

    def adversary_accuracy(self, records: Sequence[UpazilaRecord]) -> float:
        _, _, za = _forward(self.params, self._inputs(records))
        truth = _region_flags(r.region_type for r in records)
        return float(np.mean((za > 0) == (truth == 1.0)))

    def to_json(self) -> str:
        doc = {
            "config": asdict(self.config),
            "feature_mean": self.feature_mean.tolist(),
            "feature_std": self.feature_std.tolist(),
            "params": {k: np.asarray(self.params[k]).tolist() for k in PARAM_NAMES},
        }
        return json.dumps(doc, indent=1, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "FairModel":
        doc = json.loads(text)
        return cls(
            params={k: np.array(v, dtype=np.float64) for k, v in doc["params"].items()},
            feature_mean=np.array(doc["feature_mean"]),
            feature_std=np.array(doc["feature_std"]),
            config=DebiasConfig(**doc["config"]),
        )


def train_fair_regressor(records: Sequence[UpazilaRecord], targets, config: DebiasConfig = DebiasConfig()) -> FairModel:
    """Full-batch joint training of encoder, predictor and adversary."""
    records = list(records)
    y = np.asarray(targets, dtype=np.float64)
    if len(records) < 4:
        raise InvalidInputError("need at least 4 records")
    if y.shape != (len(records),):
        raise InvalidInputError(f"expected {len(records)} targets, got shape {y.shape}")
    if not np.all((y >= 0.0) & (y <= 1.0)):
        raise InvalidInputError("targets must lie in [0, 1]")
    raw = upazila_features(records)
    mean = raw.mean(axis=0)
    std = raw.std(axis=0)
    std = np.where(std > 0, std, 1.0)
    X = (raw - mean) / std
    region = _region_flags(r.region_type for r in records)

    params = init_params(X.shape[1], config.hidden_width, config.seed)
    history = []
    # divergence is reported via TrainingDivergedError, not numpy warnings
    with np.errstate(over="ignore", invalid="ignore"):
        for epoch in range(config.epochs):
            mse, bce = loss_terms(params, X, y, region)
            if not (math.isfinite(mse) and math.isfinite(bce)):
                raise TrainingDivergedError(epoch, mse + bce)
            history.append((mse, bce))
            grads = backprop(params, X, y, region, config.lam, config.mse_weight)
            params = {k: params[k] - config.learning_rate * grads[k] for k in PARAM_NAMES}
    return FairModel(params, mean, std, config, history)


def _two_regions(region_flags):
    flags = _region_flags(region_flags)
    haor = flags == 1.0
    if haor.all() or not haor.any():
        raise InsufficientGroupsError("both Haor and non-Haor records are required")
    return haor


def statistical_parity_difference(scores, region_flags) -> float:
    """Absolute gap in mean priority score between Haor and non-Haor units."""
    s = np.asarray(scores, dtype=np.float64)
    haor = _two_regions(region_flags)
    if s.shape != haor.shape:
        raise InvalidInputError("scores and region flags differ in length")
    return float(abs(s[haor].mean() - s[~haor].mean()))


def regional_fairness_gap(scores, targets, region_flags) -> float:
    """Absolute gap in mean absolute residual between the two regions."""
    s = np.asarray(scores, dtype=np.float64)
    t = np.asarray(targets, dtype=np.float64)
    haor = _two_regions(region_flags)
    if s.shape != haor.shape or t.shape != haor.shape:
        raise InvalidInputError("scores, targets and region flags differ in length")
    residual = np.abs(s - t)
    return float(abs(residual[haor].mean() - residual[~haor].mean()))


class RankEntry(NamedTuple):
    rank: int
    name: str
    priority: float
    region_type: str


@dataclass(frozen=True)
class PriorityRanking:
    entries: tuple
    verbose: bool = False

    def __str__(self):
        lines = []
        for e in self.entries:
            note = f", {e.region_type} region" if self.verbose else ""
            lines.append(f"Rank {e.rank}: {e.name} (priority={e.priority:.4f}{note})")
        return "\n".join(lines)

    def ranks(self) -> dict:
        return {e.name: e.rank for e in self.entries}

    def as_records(self) -> list[dict]:
        return [e._asdict() for e in self.entries]


def generate_priority_ranking(records=None, model: FairModel | None = None, verbose: bool = False) -> PriorityRanking:
    """Score every upazila and rank them, highest priority first.

    Equal scores are ordered alphabetically by name. Without arguments the
    bundled PDNA fixture is ranked with the bundled reference model.
    """
    if records is None:
        from .data_io import load_pdna_fixture

        records, _ = load_pdna_fixture()
    records = list(records)
    if not records:
        raise InvalidInputError("no records to rank")
    model = model or reference_model()
    scores = model.predict(records)
    order = sorted(range(len(records)), key=lambda i: (-scores[i], records[i].name))
    entries = tuple(
        RankEntry(rank, records[i].name, float(scores[i]), records[i].region_type)
        for rank, i in enumerate(order, 1)
    )
    return PriorityRanking(entries, verbose)


def ranking_shift(baseline: PriorityRanking, fair: PriorityRanking) -> tuple[float, dict]:
    """Share of upazilas whose rank changed, and ``baseline - fair`` per name.

    A positive delta means the upazila moved up (towards rank 1).
    """
    before, after = baseline.ranks(), fair.ranks()
    if set(before) != set(after) or len(before) != len(baseline.entries):
        raise InvalidInputError("rankings cover different upazilas")
    deltas = {name: before[name] - after[name] for name in before}
    changed = sum(1 for d in deltas.values() if d != 0)
    return changed / len(deltas), deltas


def reference_model() -> FairModel:
    """The bundled debiased model trained on the bundled PDNA fixture."""
    from importlib import resources

    text = resources.files("fairhealth").joinpath("data/pdna_reference_model.json").read_text(encoding="utf-8")
    return FairModel.from_json(text)
