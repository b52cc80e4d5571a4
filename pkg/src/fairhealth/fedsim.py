"""Deterministic federated-learning simulation with logistic regression.

Clients hold shards of a seeded two-class Gaussian problem. Each round every
client runs full-batch gradient descent from the current global weights and
sends back its weight delta; the coordinator aggregates the deltas in client
order and evaluates macro-F1 on a held-out test split.

Three aggregation modes are compared:

``dense``
    clipped mean of the raw deltas, no noise.
``sparse``
    deltas are top-k sparsified (and densified again) before the clipped mean.
``sparse_dp``
    as ``sparse`` but aggregated by :func:`~fairhealth.privacy.dp_fedavg_aggregate`
    with the configured (epsilon, delta).

Weights are laid out as ``[w_1, ..., w_d, bias]``.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .errors import InvalidConfigError, InvalidInputError
from .privacy import (
    PrivacyBudget,
    comm_cost,
    densify,
    dp_fedavg_aggregate,
    keep_count,
    sparsify,
)

__all__ = [
    "ClientDataset",
    "FederatedConfig",
    "RoundMetrics",
    "MODES",
    "partition_synthetic",
    "holdout_split",
    "logistic_loss",
    "logistic_gradient",
    "per_sample_losses",
    "local_train",
    "predict",
    "macro_f1",
    "run_federated",
    "mia_loss_threshold_attack",
    "membership_attack_scenario",
]

MODES = ("dense", "sparse", "sparse_dp")


@dataclass(frozen=True)
class ClientDataset:
    features: np.ndarray
    labels: np.ndarray
    client_id: int

    def __post_init__(self):
        if self.features.ndim != 2 or self.features.shape[0] != self.labels.shape[0]:
            raise InvalidInputError("features must be N x d with one label per row")
        if self.labels.shape[0] < 1:
            raise InvalidInputError("client dataset is empty")


@dataclass(frozen=True)
class FederatedConfig:
    num_clients: int = 4
    rounds: int = 30
    local_epochs: int = 5
    learning_rate: float = 0.5
    sparsity: float = 0.9
    epsilon: float = math.inf
    delta: float = 1e-5
    clip_norm: float = 1.0
    seed: int = 0
    samples_per_client: int = 500
    num_features: int = 10
    heterogeneity: float = 0.0
    class_separation: float = 0.4
    test_samples: int = 1000

    def __post_init__(self):
        for name in ("num_clients", "rounds", "samples_per_client", "num_features", "test_samples"):
            if getattr(self, name) < 1:
                raise InvalidConfigError(f"{name} must be >= 1")
        if self.local_epochs < 0:
            raise InvalidConfigError("local_epochs must be >= 0")
        if not (self.learning_rate > 0):
            raise InvalidConfigError("learning_rate must be positive")
        if not (0.0 <= self.sparsity < 1.0):
            raise InvalidConfigError(f"sparsity must lie in [0, 1), got {self.sparsity}")
        if not (0.0 <= self.heterogeneity <= 1.0):
            raise InvalidConfigError("heterogeneity must lie in [0, 1]")
        if not (self.clip_norm > 0):
            raise InvalidConfigError("clip_norm must be positive")
        PrivacyBudget(self.epsilon, self.delta)

    @property
    def budget(self) -> PrivacyBudget:
        return PrivacyBudget(self.epsilon, self.delta)


@dataclass(frozen=True)
class RoundMetrics:
    round: int
    macro_f1: float
    bytes_sent: int
    cumulative_bytes: int
    global_weights_norm: float

    def as_dict(self) -> dict:
        return {
            "round": self.round,
            "macro_f1": self.macro_f1,
            "bytes_sent": self.bytes_sent,
            "cumulative_bytes": self.cumulative_bytes,
            "global_weights_norm": self.global_weights_norm,
        }


def _streams(seed: int):
    # independent child streams: class centres, client shards, test split, noise
    return np.random.SeedSequence(seed).spawn(4)


def _centre(config: FederatedConfig) -> np.ndarray:
    ss = _streams(config.seed)[0]
    direction = np.random.default_rng(ss).standard_normal(config.num_features)
    direction /= np.linalg.norm(direction)
    return config.class_separation * math.sqrt(config.num_features) * direction


def _draw(rng, labels, centre):
    noise = rng.standard_normal((labels.size, centre.size))
    sign = np.where(labels == 1, 1.0, -1.0)[:, None]
    return noise + sign * centre


def partition_synthetic(config: FederatedConfig) -> list[ClientDataset]:
    """Split a seeded two-blob problem across ``config.num_clients`` clients.

    Client ``i`` is dominated by class ``i % 2``. The dominant share is
    ``0.5 + 0.5 * heterogeneity`` (rounded to whole samples), so
    ``heterogeneity=0`` gives balanced i.i.d. shards and ``1`` gives
    single-class shards.
    """
    centre = _centre(config)
    rng = np.random.default_rng(_streams(config.seed)[1])
    n = config.samples_per_client
    n_major = int(round(n * (0.5 + 0.5 * config.heterogeneity)))
    clients = []
    for cid in range(config.num_clients):
        major = cid % 2
        labels = np.array([major] * n_major + [1 - major] * (n - n_major), dtype=np.int64)
        labels = rng.permutation(labels)
        clients.append(ClientDataset(_draw(rng, labels, centre), labels, cid))
    return clients


def holdout_split(config: FederatedConfig) -> ClientDataset:
    """Held-out balanced evaluation data from its own seed stream."""
    centre = _centre(config)
    rng = np.random.default_rng(_streams(config.seed)[2])
    labels = rng.integers(0, 2, config.test_samples)
    return ClientDataset(_draw(rng, labels, centre), labels, -1)


def _design(features):
    return np.hstack([features, np.ones((features.shape[0], 1))])


def _sigmoid(z):
    return 0.5 * (1.0 + np.tanh(0.5 * z))


def per_sample_losses(weights, data: ClientDataset) -> np.ndarray:
    """Binary cross-entropy of each sample under ``weights``."""
    z = _design(data.features) @ np.asarray(weights, dtype=np.float64)
    # log(1 + e^z) - y z, computed stably
    return np.logaddexp(0.0, z) - data.labels * z


def logistic_loss(weights, data: ClientDataset) -> float:
    return float(per_sample_losses(weights, data).mean())


def logistic_gradient(weights, data: ClientDataset) -> np.ndarray:
    X = _design(data.features)
    residual = _sigmoid(X @ weights) - data.labels
    return X.T @ residual / X.shape[0]


def local_train(weights, data: ClientDataset, epochs: int, learning_rate: float, seed: int = 0) -> np.ndarray:
    """Run ``epochs`` full-batch gradient steps and return the weight delta.

    Full-batch descent has no randomness; ``seed`` is accepted so callers can
    pass a per-client seed uniformly.
    """
    w0 = np.asarray(weights, dtype=np.float64)
    if w0.shape != (data.features.shape[1] + 1,):
        raise InvalidInputError(
            f"expected {data.features.shape[1] + 1} weights (features + bias), got {w0.shape}"
        )
    w = w0.copy()
    for _ in range(epochs):
        w = w - learning_rate * logistic_gradient(w, data)
    return w - w0


def predict(weights, features) -> np.ndarray:
    return (_design(np.asarray(features)) @ weights > 0).astype(np.int64)


def macro_f1(predictions, truths) -> float:
    """Unweighted mean F1 over classes 0 and 1.

    A class that appears in neither predictions nor truths scores F1 = 1.
    """
    p = np.asarray(predictions)
    t = np.asarray(truths)
    if p.shape != t.shape or p.ndim != 1 or p.size == 0:
        raise InvalidInputError("predictions and truths must be equal-length non-empty vectors")
    scores = []
    for cls in (0, 1):
        tp = int(np.sum((p == cls) & (t == cls)))
        fp = int(np.sum((p == cls) & (t != cls)))
        fn = int(np.sum((p != cls) & (t == cls)))
        denom = 2 * tp + fp + fn
        scores.append(1.0 if denom == 0 else 2 * tp / denom)
    return sum(scores) / 2


def _client_bytes(n: int, sparsity: float, mode: str) -> int:
    if mode == "dense" or keep_count(n, sparsity) == n:
        # nothing dropped: the update goes out as a plain dense vector
        return comm_cost(n, 0.0).dense_bytes
    return comm_cost(n, sparsity, mode="value_plus_index").sparse_bytes


def run_federated(
    config: FederatedConfig,
    mode: str = "dense",
    clients: list[ClientDataset] | None = None,
    max_workers: int = 1,
) -> tuple[list[RoundMetrics], np.ndarray]:
    """Simulate ``config.rounds`` rounds of FedAvg in the given mode.

    Client training may run on a thread pool (``max_workers > 1``); updates
    are always aggregated in client order, so the history is identical to a
    sequential run.
    """
    if mode not in MODES:
        raise InvalidConfigError(f"mode must be one of {MODES}, got {mode!r}")
    clients = partition_synthetic(config) if clients is None else clients
    test = holdout_split(config)
    dim = clients[0].features.shape[1] + 1
    weights = np.zeros(dim)
    epsilon = config.epsilon if mode == "sparse_dp" else math.inf
    noise_seeds = np.random.default_rng(_streams(config.seed)[3]).integers(0, 2**63, config.rounds)
    per_client = _client_bytes(dim, config.sparsity, mode)

    history = []
    cumulative = 0
    pool = ThreadPoolExecutor(max_workers) if max_workers > 1 else None
    try:
        for rnd in range(config.rounds):
            def train(c, w=weights):
                return local_train(w, c, config.local_epochs, config.learning_rate, config.seed + c.client_id)

            updates = list(pool.map(train, clients) if pool else map(train, clients))
            if mode != "dense":
                updates = [densify(sparsify(u, config.sparsity)[0]) for u in updates]
            weights = weights + dp_fedavg_aggregate(
                updates, config.clip_norm, epsilon, config.delta, int(noise_seeds[rnd])
            )
            sent = per_client * len(clients)
            cumulative += sent
            history.append(
                RoundMetrics(
                    round=rnd + 1,
                    macro_f1=macro_f1(predict(weights, test.features), test.labels),
                    bytes_sent=sent,
                    cumulative_bytes=cumulative,
                    global_weights_norm=float(np.linalg.norm(weights)),
                )
            )
    finally:
        if pool:
            pool.shutdown()
    return history, weights


def mia_loss_threshold_attack(member_losses, nonmember_losses) -> float:
    """Best balanced accuracy of a loss-threshold membership attack.

    The attacker guesses "member" when a sample's loss is below a threshold.
    Every midpoint between consecutive distinct pooled losses is tried (plus
    the two trivial thresholds), and an attacker may flip its rule, so the
    result is never below 0.5.
    """
    m = np.asarray(member_losses, dtype=np.float64)
    nm = np.asarray(nonmember_losses, dtype=np.float64)
    if m.size == 0 or nm.size == 0:
        raise InvalidInputError("member and non-member loss lists must be non-empty")
    pooled = np.unique(np.concatenate([m, nm]))
    thresholds = np.concatenate([[-np.inf], (pooled[:-1] + pooled[1:]) / 2, [np.inf]])
    m_sorted, nm_sorted = np.sort(m), np.sort(nm)
    tpr = np.searchsorted(m_sorted, thresholds, side="left") / m.size
    tnr = 1.0 - np.searchsorted(nm_sorted, thresholds, side="left") / nm.size
    balanced = (tpr + tnr) / 2
    return float(np.max(np.maximum(balanced, 1.0 - balanced)))


def membership_attack_scenario(
    seed: int,
    epsilon: float = math.inf,
    samples_per_client: int = 20,
    local_epochs: int = 200,
    **overrides,
) -> float:
    """Attack accuracy against a deliberately overfit federated model.

    Tiny clients with many local epochs let the model memorise its training
    data. Members are the pooled training samples; non-members are an equal
    number of fresh samples from the same distribution.
    """
    params = dict(
        num_clients=4,
        rounds=20,
        local_epochs=local_epochs,
        learning_rate=0.5,
        sparsity=0.0,
        clip_norm=4.0,
        num_features=80,
        class_separation=0.1,
        samples_per_client=samples_per_client,
        epsilon=epsilon,
        seed=seed,
    )
    params.update(overrides)
    config = FederatedConfig(**params)
    config = replace(config, test_samples=config.num_clients * config.samples_per_client)
    mode = "dense" if math.isinf(epsilon) else "sparse_dp"
    clients = partition_synthetic(config)
    _, weights = run_federated(config, mode, clients)
    members = np.concatenate([per_sample_losses(weights, c) for c in clients])
    nonmembers = per_sample_losses(weights, holdout_split(config))
    return mia_loss_threshold_attack(members, nonmembers)
