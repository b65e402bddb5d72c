"""Private selection primitives.

Exponential mechanism, Laplace / truncated Laplace / Gaussian noise, and a
GAP-MAX selector that pays only for the number of near-maximal candidates.
Every function takes an explicit ``numpy.random.Generator``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import special

from .errors import EmptyInputError, InvalidParameterError


@dataclass(frozen=True)
class PrivacyBudget:
    """``(epsilon, delta)``; ``delta == 0`` is pure DP."""

    epsilon: float
    delta: float = 0.0

    def __post_init__(self):
        if not self.epsilon > 0:
            raise InvalidParameterError("epsilon must be positive")
        if not 0 <= self.delta < 1:
            raise InvalidParameterError("delta must lie in [0, 1)")

    def __le__(self, other: PrivacyBudget) -> bool:
        return self.epsilon <= other.epsilon and self.delta <= other.delta


@dataclass(frozen=True)
class Laplace:
    scale: float

    def __post_init__(self):
        if not self.scale > 0:
            raise InvalidParameterError("scale must be positive")


@dataclass(frozen=True)
class TruncatedLaplace:
    """Laplace density restricted to ``[-truncation, truncation]``."""

    scale: float
    truncation: float

    def __post_init__(self):
        if not (self.scale > 0 and self.truncation > 0):
            raise InvalidParameterError("scale and truncation must be positive")


@dataclass(frozen=True)
class Gaussian:
    std: float

    def __post_init__(self):
        if not self.std > 0:
            raise InvalidParameterError("std must be positive")


NoiseSpec = Laplace | TruncatedLaplace | Gaussian


def sample_noise(spec: NoiseSpec, rng: np.random.Generator, size=None):
    """Draw from a noise distribution.

    The truncated Laplace uses the inverse CDF of the magnitude restricted to
    ``[0, t]``, so it never rejects.
    """
    if isinstance(spec, Laplace):
        return rng.laplace(0.0, spec.scale, size)
    if isinstance(spec, TruncatedLaplace):
        b, t = spec.scale, spec.truncation
        u = rng.random(size)
        # |Z| has cdf (1 - e^{-x/b}) / (1 - e^{-t/b}) on [0, t]
        mag = -b * np.log1p(u * np.expm1(-t / b))
        sign = np.where(rng.random(size) < 0.5, -1.0, 1.0)
        out = np.minimum(mag, t) * sign
        return float(out) if size is None else out
    if isinstance(spec, Gaussian):
        return rng.normal(0.0, spec.std, size)
    raise InvalidParameterError(f"unknown noise spec {spec!r}")


def exponential_mechanism_probs(scores: Sequence[float], sensitivity: float,
                                epsilon: float) -> np.ndarray:
    """Output law ``P[i] ∝ exp(epsilon * scores[i] / (2 * sensitivity))``."""
    s = np.asarray(scores, dtype=float)
    if s.size == 0:
        raise EmptyInputError("exponential mechanism needs at least one score")
    if not np.all(np.isfinite(s) | (s == -np.inf)):
        raise InvalidParameterError("scores must be finite")
    if not (sensitivity > 0 and epsilon > 0):
        raise InvalidParameterError("sensitivity and epsilon must be positive")
    logits = epsilon * s / (2.0 * sensitivity)
    return np.exp(logits - special.logsumexp(logits))


def exponential_mechanism(scores: Sequence[float], sensitivity: float, epsilon: float,
                          rng: np.random.Generator) -> int:
    probs = exponential_mechanism_probs(scores, sensitivity, epsilon)
    cdf = np.cumsum(probs)
    idx = int(np.searchsorted(cdf, rng.random() * cdf[-1], side="right"))
    return min(idx, len(probs) - 1)


@dataclass(frozen=True)
class GapMaxParams:
    """``k`` bounds the number of near-maximal candidates.

    ``variant`` is ``"approximate-dp"`` or ``"concentrated-dp"``.
    """

    k: int
    beta: float
    budget: PrivacyBudget
    variant: str = "approximate-dp"

    def __post_init__(self):
        if self.k < 1:
            raise InvalidParameterError("k must be >= 1")
        if not 0 < self.beta < 1:
            raise InvalidParameterError("beta must lie in (0, 1)")
        if self.variant not in ("approximate-dp", "concentrated-dp"):
            raise InvalidParameterError(f"unknown variant {self.variant!r}")

    @property
    def buckets(self) -> int:
        return max(1, math.ceil(self.k**2 / self.beta - 1e-12))

    def noise(self) -> NoiseSpec:
        """Noise giving ``(eps/4, delta/2)``-DP, or the Gaussian for zCDP."""
        eps, delta = self.budget.epsilon, self.budget.delta
        if self.variant == "concentrated-dp":
            return Gaussian(math.sqrt(3) / eps)
        if delta == 0:
            return Laplace(4 / eps)
        return TruncatedLaplace(4 / eps, 4 * (1 + math.log(1 / delta)) / eps)


def assign_buckets(num_candidates: int, buckets: int, rng: np.random.Generator) -> np.ndarray:
    """A uniformly random map from candidates to ``range(buckets)``."""
    return rng.integers(0, buckets, size=num_candidates)


def top_two(values: np.ndarray) -> tuple[int, int | None]:
    """Positions of the largest and second largest entries; ties -> lowest index."""
    order = np.lexsort((np.arange(len(values)), -values))
    return int(order[0]), (int(order[1]) if len(values) > 1 else None)


def gap_max(scores: Sequence[float], params: GapMaxParams, rng: np.random.Generator,
            diagnostics: dict | None = None) -> int:
    """Select a near-maximal candidate index from sensitivity-1 scores.

    Steps: hash candidates into ``ceil(k^2 / beta)`` buckets, pick a bucket
    with the exponential mechanism at ``eps/4`` on the bucket maxima, then
    inside the bucket add noise to the halved gap to the runner-up and return
    the noisy argmax (ties to the lowest index).
    """
    s = np.asarray(scores, dtype=float)
    if s.size == 0:
        raise EmptyInputError("gap_max needs at least one candidate")
    m = params.buckets
    g = assign_buckets(len(s), m, rng)
    bucket_max = np.full(m, -np.inf)
    np.maximum.at(bucket_max, g, s)
    b = exponential_mechanism(bucket_max, 1.0, params.budget.epsilon / 4, rng)
    members = np.flatnonzero(g == b)
    ms = s[members]
    first, second = top_two(ms)
    runner_up = ms[second] if second is not None else ms[first]
    gap = 0.5 * np.maximum(0.0, ms - runner_up)
    noise = sample_noise(params.noise(), rng, size=len(members))
    noisy = gap + noise
    winner = int(members[int(np.argmax(noisy))])
    if diagnostics is not None:
        diagnostics.update(buckets=m, chosen_bucket=int(b), bucket_size=len(members),
                           bucket_top=int(members[first]))
    return winner
