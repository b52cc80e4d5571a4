"""Differential-privacy and communication primitives for model updates.

Pipeline for one federated round::

    clipped = clip_weights(update, clip_norm=1.0)
    sparse, rate = sparsify(clipped, sparsity=0.975)     # keep top 2.5%
    dense = densify(sparse)
    noisy = add_gaussian_noise(dense, epsilon=1.0, delta=1e-5, seed=7)

Noise is calibrated with the classic Gaussian mechanism,
``sigma = C * sqrt(2 ln(1.25 / delta)) / epsilon``, which is only a valid
(epsilon, delta) guarantee for epsilon <= 1. Passing ``epsilon=math.inf``
disables noise entirely.

Random normals come from :func:`standard_normal`: raw 64-bit words of the
PCG64 generator (a fixed, published algorithm whose output stream numpy
keeps stable) mapped to uniforms with 53-bit precision and transformed by
Box-Muller. Golden values therefore do not depend on numpy's sampler
implementation.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import CorruptUpdateError, InvalidConfigError, InvalidInputError

__all__ = [
    "PrivacyBudget",
    "SparseUpdate",
    "CommCost",
    "standard_normal",
    "clip_weights",
    "gaussian_sigma",
    "add_gaussian_noise",
    "keep_count",
    "sparsify",
    "densify",
    "dp_fedavg_aggregate",
    "comm_cost",
]


@dataclass(frozen=True)
class PrivacyBudget:
    """An (epsilon, delta) pair; ``epsilon=math.inf`` means noise is off."""

    epsilon: float = math.inf
    delta: float = 1e-5

    def __post_init__(self):
        if not (self.epsilon > 0):
            raise InvalidConfigError(f"epsilon must be positive, got {self.epsilon}")
        if not (0.0 < self.delta < 1.0):
            raise InvalidConfigError(f"delta must lie in (0, 1), got {self.delta}")

    @property
    def disabled(self) -> bool:
        return math.isinf(self.epsilon)


@dataclass(frozen=True)
class SparseUpdate:
    """Positions and values of the coordinates kept by :func:`sparsify`."""

    indices: np.ndarray
    values: np.ndarray
    original_len: int

    def __post_init__(self):
        idx = np.asarray(self.indices)
        if idx.ndim != 1 or idx.size == 0 or idx.size != np.asarray(self.values).size:
            raise CorruptUpdateError("indices and values must be equal-length, non-empty vectors")
        if np.any(np.diff(idx) <= 0):
            raise CorruptUpdateError("indices must be strictly increasing")
        if idx[0] < 0 or idx[-1] >= self.original_len:
            raise CorruptUpdateError(
                f"index out of range for original length {self.original_len}"
            )


class CommCost(NamedTuple):
    dense_bytes: int
    sparse_bytes: int
    reduction: float


def _vector(w, name="weights") -> np.ndarray:
    arr = np.asarray(w, dtype=np.float64)
    if arr.ndim != 1 or arr.size == 0:
        raise InvalidInputError(f"{name} must be a non-empty flat vector")
    if not np.isfinite(arr).all():
        raise InvalidInputError(f"{name} contains non-finite values")
    return arr


def _check_clip(clip_norm):
    if not (clip_norm > 0) or not math.isfinite(clip_norm):
        raise InvalidConfigError(f"clip_norm must be a positive finite number, got {clip_norm}")


def standard_normal(seed: int, size: int) -> np.ndarray:
    """``size`` i.i.d. N(0, 1) draws, reproducible for a given seed."""
    n_pairs = (size + 1) // 2
    raw = np.random.PCG64(seed).random_raw(2 * n_pairs)
    # 53-bit uniforms on (0, 1]; the +1 keeps log() away from zero
    u = ((raw >> np.uint64(11)).astype(np.float64) + 1.0) * 2.0**-53
    u1, u2 = u[:n_pairs], u[n_pairs:]
    radius = np.sqrt(-2.0 * np.log(u1))
    angle = 2.0 * np.pi * u2
    return np.concatenate([radius * np.cos(angle), radius * np.sin(angle)])[:size]


def clip_weights(weights, clip_norm: float = 1.0) -> np.ndarray:
    """Scale ``weights`` down so their L2 norm is at most ``clip_norm``.

    Vectors already inside the ball are returned unchanged (as a copy), which
    makes clipping idempotent bit-for-bit.
    """
    _check_clip(clip_norm)
    w = _vector(weights)
    norm = float(np.linalg.norm(w))
    if norm <= clip_norm:
        return w.copy()
    scale = clip_norm / norm
    out = w * scale
    # rounding can leave the norm an ulp above the bound
    while np.linalg.norm(out) > clip_norm:
        scale = math.nextafter(scale, 0.0)
        out = w * scale
    return out


def gaussian_sigma(clip_norm: float, epsilon: float, delta: float = 1e-5) -> float:
    """Noise standard deviation for sensitivity ``clip_norm`` at (epsilon, delta)."""
    budget = PrivacyBudget(epsilon, delta)
    _check_clip(clip_norm)
    if budget.disabled:
        return 0.0
    if epsilon > 1.0:
        warnings.warn(
            f"epsilon={epsilon} > 1: the classic Gaussian-mechanism bound is not guaranteed",
            stacklevel=2,
        )
    return clip_norm * math.sqrt(2.0 * math.log(1.25 / delta)) / epsilon


def add_gaussian_noise(
    weights,
    epsilon: float = 1.0,
    delta: float = 1e-5,
    clip_norm: float = 1.0,
    seed: int = 0,
) -> np.ndarray:
    """Add calibrated Gaussian noise to an update that is already clipped.

    Clipping is the caller's job; the noise scale assumes sensitivity
    ``clip_norm``. With ``epsilon=math.inf`` the input is returned unchanged.
    """
    w = _vector(weights)
    sigma = gaussian_sigma(clip_norm, epsilon, delta)
    if sigma == 0.0:
        return w.copy()
    return w + sigma * standard_normal(seed, w.size)


def _check_sparsity(sparsity):
    if not (0.0 <= sparsity < 1.0):
        raise InvalidConfigError(f"sparsity must lie in [0, 1), got {sparsity}")


def keep_count(n: int, sparsity: float) -> int:
    """Number of coordinates kept: ``max(1, ceil((1 - sparsity) * n))``.

    Products within 1e-9 of an integer are snapped first, so that e.g.
    ``(1 - 0.975) * 1000 = 25.00000000000002`` keeps 25, not 26.
    """
    _check_sparsity(sparsity)
    if n < 1:
        raise InvalidInputError(f"vector length must be >= 1, got {n}")
    exact = (1.0 - sparsity) * n
    nearest = round(exact)
    k = nearest if abs(exact - nearest) <= 1e-9 * max(1.0, exact) else math.ceil(exact)
    return max(1, min(n, int(k)))


def sparsify(weights, sparsity: float = 0.975) -> tuple[SparseUpdate, float]:
    """Keep the largest-magnitude coordinates of ``weights``.

    Returns the sparse update and the achieved sparsity (fraction of
    coordinates dropped). Equal magnitudes are ranked by position, lower
    index first, so the result is fully deterministic.
    """
    w = _vector(weights)
    n = w.size
    k = keep_count(n, sparsity)
    order = np.argsort(-np.abs(w), kind="stable")
    kept = np.sort(order[:k])
    return SparseUpdate(kept, w[kept].copy(), n), (n - k) / n


def densify(update: SparseUpdate) -> np.ndarray:
    idx = np.asarray(update.indices)
    if idx.size and (idx.min() < 0 or idx.max() >= update.original_len):
        raise CorruptUpdateError(f"index out of range for original length {update.original_len}")
    out = np.zeros(update.original_len)
    out[idx] = update.values
    return out


def dp_fedavg_aggregate(
    client_updates,
    clip_norm: float = 1.0,
    epsilon: float = 1.0,
    delta: float = 1e-5,
    seed: int = 0,
) -> np.ndarray:
    """Clip each client update, average in input order, then add noise.

    The mean of ``m`` updates clipped to ``clip_norm`` has sensitivity
    ``clip_norm / m``, so that is the scale used for the noise.
    """
    updates = [_vector(u, "client update") for u in client_updates]
    if not updates:
        raise InvalidInputError("need at least one client update")
    n = updates[0].size
    if any(u.size != n for u in updates):
        raise InvalidInputError("client updates differ in length")
    _check_clip(clip_norm)
    total = np.zeros(n)
    for u in updates:
        total = total + clip_weights(u, clip_norm)
    mean = total / len(updates)
    return add_gaussian_noise(mean, epsilon, delta, clip_norm / len(updates), seed)


def comm_cost(
    n: int,
    sparsity: float,
    value_bytes: int = 4,
    index_bytes: int = 4,
    mode: str = "value_only",
) -> CommCost:
    """Bytes for sending one update densely vs. sparsified.

    ``value_only`` counts just the kept values; ``value_plus_index`` also
    pays for each kept position, which is what a real wire format needs.
    """
    if mode not in ("value_only", "value_plus_index"):
        raise InvalidConfigError(f"unknown accounting mode {mode!r}")
    k = keep_count(n, sparsity)
    dense = n * value_bytes
    per_entry = value_bytes if mode == "value_only" else value_bytes + index_bytes
    sparse = k * per_entry
    return CommCost(dense, sparse, (dense - sparse) / dense)
