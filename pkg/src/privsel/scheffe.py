"""Pairwise Scheffé contests and the sensitivity-1 scores built on them.

Scores are computed from a :class:`PairTable`, a write-once table of the
hypothesis-side masses for every ordered pair. The table depends only on the
hypotheses, so it can be reused across datasets and selection stages; only
the per-pair empirical counts depend on the data.

The table arithmetic is dtype-agnostic: building it from pmfs of
:class:`fractions.Fraction` (see :meth:`PairTable.from_pmfs`) gives exact
rational scores, which is how the sensitivity property is checked.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from scipy import special, stats

from .distributions import (
    Dataset,
    EstimatorConfig,
    Hypothesis,
    SphericalGaussian,
    UnivariateGaussian,
    enumerable_support,
    region_counts,
    region_mass,
    univariate_scheffe_regions,
    scheffe_mass,
    tv_distance,
)
from .errors import DomainError, InvalidParameterError

_CHUNK = 2**24


@dataclass(frozen=True)
class ScheffeStats:
    """Masses of the Scheffé set ``W = {H > H'}`` of an ordered pair.

    ``p1 = H(W)``, ``p2 = H'(W)`` and ``tau_hat`` is the fraction of the ``n``
    dataset points that fall in ``W``.
    """

    p1: float
    p2: float
    tau_hat: float
    n: int

    def __post_init__(self):
        for name in ("p1", "p2", "tau_hat"):
            v = getattr(self, name)
            if not 0 <= v <= 1:
                raise InvalidParameterError(f"{name} must lie in [0, 1], got {v}")
        if self.p1 < self.p2:
            raise InvalidParameterError("p1 >= p2 by orientation of the Scheffé set")
        if self.n < 1:
            raise InvalidParameterError("n must be >= 1")


@dataclass(frozen=True)
class ContestParams:
    alpha: float
    zeta: float = 1.0

    def __post_init__(self):
        if not 0 < self.alpha < 1:
            raise InvalidParameterError("alpha must lie in (0, 1)")
        if not self.zeta > 0:
            raise InvalidParameterError("zeta must be positive")


class ContestOutcome(enum.Enum):
    WINNER_FIRST = "winner-first"
    WINNER_SECOND = "winner-second"
    DRAW = "draw"


def pairwise_contest(stats: ScheffeStats, params: ContestParams) -> ContestOutcome:
    """Compare ``H`` against ``H'`` on their Scheffé set, allowing draws."""
    a, z = params.alpha, params.zeta
    if stats.p1 - stats.p2 <= (2 + z) * a:
        return ContestOutcome.DRAW
    if stats.tau_hat > stats.p1 - (1 + z / 2) * a:
        return ContestOutcome.WINNER_FIRST
    if stats.tau_hat < stats.p2 + (1 + z / 2) * a:
        return ContestOutcome.WINNER_SECOND
    return ContestOutcome.DRAW


def gamma(stats: ScheffeStats, params: ContestParams) -> float:
    """Roughly the number of points to change before ``H'`` beats ``H``.

    ``n`` when the pair is too close to ever produce a winner.
    """
    a, z, n = params.alpha, params.zeta, stats.n
    if stats.p1 - stats.p2 <= (2 + z) * a:
        return n
    return n * max(0, stats.tau_hat - (stats.p2 + (1 + z / 2) * a))


@dataclass(frozen=True, eq=False)
class PairTable:
    """Hypothesis-side quantities for every ordered pair ``(j, k)``.

    Attributes:
        p1: ``H_j(W_jk)``.
        p2: ``H_k(W_jk)``, the mass the second hypothesis puts on the set.
        tv: ``d_TV(H_j, H_k)``.
        hyps: the hypotheses, or None for tables built from raw pmfs.
    """

    p1: np.ndarray
    p2: np.ndarray
    tv: np.ndarray
    hyps: tuple | None = None
    _in_set: np.ndarray | None = None  # (m, m, support) membership, finite case
    _index_of: object = None
    _regions: tuple | None = None  # univariate Gaussian Scheffé intervals

    @property
    def m(self) -> int:
        return self.p1.shape[0]

    @classmethod
    def from_pmfs(cls, pmfs, index_of=None, hyps=None) -> PairTable:
        """Table over an enumerated support; ``pmfs`` has one row per hypothesis.

        Works for float arrays and for object arrays of exact rationals.
        """
        pmfs = np.asarray(pmfs)
        in_set = np.asarray(pmfs[:, None, :] > pmfs[None, :, :], dtype=bool)
        p1 = (in_set * pmfs[:, None, :]).sum(axis=2)
        p2 = (in_set * pmfs[None, :, :]).sum(axis=2)
        diff = pmfs[:, None, :] - pmfs[None, :, :]
        tv = (diff * (diff > 0)).sum(axis=2)
        if pmfs.dtype != object:
            p1, p2, tv = (np.clip(x, 0.0, 1.0) for x in (p1, p2, tv))
        return cls(p1, p2, tv, hyps=hyps, _in_set=in_set,
                   _index_of=index_of if index_of is not None else (lambda pts: pts))

    @classmethod
    def build(cls, hyps: Sequence[Hypothesis],
              cfg: EstimatorConfig = EstimatorConfig()) -> PairTable:
        """Compute the table once for a list of hypotheses.

        Finite and small product families are enumerated; spherical Gaussians
        use the closed form; anything else goes through
        :func:`~privsel.distributions.scheffe_mass` pair by pair.
        """
        hyps = tuple(hyps)
        if not hyps:
            raise InvalidParameterError("need at least one hypothesis")
        dom = hyps[0].domain
        if any(h.domain != dom for h in hyps):
            raise DomainError("hypotheses must share one domain")
        if cfg.mode != "monte-carlo":
            enum_ = enumerable_support(hyps)
            if enum_ is not None:
                pmfs, index_of = enum_
                if pmfs.shape[0] ** 2 * pmfs.shape[1] <= _CHUNK * 4:
                    return cls.from_pmfs(pmfs, index_of, hyps)
            if all(isinstance(h, SphericalGaussian) for h in hyps):
                return cls._spherical(hyps)
            if all(isinstance(h, UnivariateGaussian) for h in hyps):
                return cls._univariate(hyps)
        m = len(hyps)
        p1 = np.zeros((m, m))
        p2 = np.zeros((m, m))
        tv = np.zeros((m, m))
        for j in range(m):
            for k in range(m):
                if j == k:
                    continue
                p1[j, k] = scheffe_mass(hyps[j], hyps[k], hyps[j], cfg)
                p2[j, k] = scheffe_mass(hyps[j], hyps[k], hyps[k], cfg)
        for j in range(m):
            for k in range(j + 1, m):
                tv[j, k] = tv[k, j] = tv_distance(hyps[j], hyps[k], cfg)
        return cls(p1, p2, tv, hyps=hyps)

    @classmethod
    def _spherical(cls, hyps) -> PairTable:
        means = np.stack([h.mean for h in hyps])
        dist = np.linalg.norm(means[:, None, :] - means[None, :, :], axis=2)
        p1 = np.where(dist > 0, stats.norm.cdf(dist / 2), 0.0)
        p2 = np.where(dist > 0, stats.norm.cdf(-dist / 2), 0.0)
        tv = special.erf(dist / (2 * np.sqrt(2)))
        return cls(p1, p2, tv, hyps=tuple(hyps))

    @classmethod
    def _univariate(cls, hyps) -> PairTable:
        mu = np.array([h.mean for h in hyps])
        sd = np.array([h.std for h in hyps])
        mj, sj, mk, sk = mu[:, None], sd[:, None], mu[None, :], sd[None, :]
        inside, lo, hi = univariate_scheffe_regions(mj, sj, mk, sk)
        p1 = region_mass(inside, lo, hi, mj, sj)
        p2 = region_mass(inside, lo, hi, mk, sk)
        tv = np.clip(p1 - p2, 0.0, 1.0)
        return cls(p1, p2, tv, hyps=tuple(hyps), _regions=(inside, lo, hi))

    def counts(self, d: Dataset | np.ndarray) -> np.ndarray:
        """``count[j, k] = |{x in D : H_j(x) > H_k(x)}|``."""
        points = d.points if isinstance(d, Dataset) else np.asarray(d)
        if self._in_set is not None:
            idx = self._index_of(points)
            hist = np.bincount(idx, minlength=self._in_set.shape[2])
            return self._in_set.astype(np.int64) @ hist
        if self.hyps is None:
            raise InvalidParameterError("table has no hypotheses to evaluate")
        if self._regions is not None:
            return region_counts(*self._regions, np.sort(points[:, 0]))
        if all(isinstance(h, SphericalGaussian) for h in self.hyps):
            return self._spherical_counts(points)
        logd = np.stack([h.log_density(points) for h in self.hyps])
        return _pairwise_greater_counts(logd)

    def _spherical_counts(self, points):
        means = np.stack([h.mean for h in self.hyps])
        # H_j(x) > H_k(x)  <=>  |x - mu_j|^2 < |x - mu_k|^2
        sq = ((points[:, None, :] - means[None, :, :]) ** 2).sum(axis=2).T
        return _pairwise_greater_counts(-sq)

    def row(self, j: int) -> PairTable:
        """Single-row view used when scoring one hypothesis."""
        return PairTable(self.p1[j:j + 1], self.p2[j:j + 1], self.tv[j:j + 1])

    def subset(self, idx: Sequence[int]) -> PairTable:
        """Table restricted to the hypotheses at ``idx`` (in that order)."""
        idx = np.asarray(idx)
        sel = np.ix_(idx, idx)
        hyps = tuple(self.hyps[i] for i in idx) if self.hyps is not None else None
        in_set = self._in_set[sel] if self._in_set is not None else None
        regions = tuple(r[sel] for r in self._regions) if self._regions is not None else None
        return PairTable(self.p1[sel], self.p2[sel], self.tv[sel], hyps, in_set,
                         self._index_of, regions)


def _pairwise_greater_counts(values: np.ndarray) -> np.ndarray:
    """``out[j, k] = sum_i values[j, i] > values[k, i]`` computed in chunks."""
    m, n = values.shape
    out = np.zeros((m, m), dtype=np.int64)
    step = max(1, _CHUNK // max(1, m * n))
    for start in range(0, m, step):
        block = values[start:start + step]
        out[start:start + step] = (block[:, None, :] > values[None, :, :]).sum(axis=2)
    return out


def gamma_matrix(counts, table: PairTable, n: int, alpha, zeta) -> np.ndarray:
    """``Gamma_zeta(H_j, H_k, D)`` for every ordered pair.

    Uses ``count - n * offset`` instead of ``n * (tau_hat - offset)`` so that
    rational inputs stay exact.
    """
    close = (table.p1 - table.p2) <= (2 + zeta) * alpha
    margin = counts - n * (table.p2 + (1 + zeta / 2) * alpha)
    margin = np.where(margin > 0, margin, 0)
    return np.where(close, n, margin)


def scores_from_counts(counts, table: PairTable, n: int, alpha, zeta) -> np.ndarray:
    """Basic score of every hypothesis: row minima of the Gamma matrix."""
    return gamma_matrix(counts, table, n, alpha, zeta).min(axis=1)


def advanced_matrix(counts, table: PairTable, n: int, alpha) -> np.ndarray:
    """Per-pair terms ``max{count - n (p2 + 3 alpha), n [tv <= 6 alpha]}``."""
    first = counts - n * (table.p2 + 3 * alpha)
    second = np.where(table.tv <= 6 * alpha, n, 0)
    return np.where(first > second, first, second)


def advanced_scores_from_counts(counts, table: PairTable, n: int, alpha) -> np.ndarray:
    return advanced_matrix(counts, table, n, alpha).min(axis=1)


def score(j: int, hyps: Sequence[Hypothesis], d: Dataset, params: ContestParams,
          cfg: EstimatorConfig = EstimatorConfig(), table: PairTable | None = None) -> float:
    """``min_k Gamma_zeta(H_j, H_k, D)`` over all ``k`` including ``j`` itself."""
    table = table or PairTable.build(hyps, cfg)
    counts = table.counts(d)
    g = gamma_matrix(counts[j:j + 1], table.row(j), d.n, params.alpha, params.zeta)
    return float(g.min())


def basic_scores(hyps: Sequence[Hypothesis], d: Dataset, params: ContestParams,
                 cfg: EstimatorConfig = EstimatorConfig(),
                 table: PairTable | None = None) -> np.ndarray:
    table = table or PairTable.build(hyps, cfg)
    return scores_from_counts(table.counts(d), table, d.n, params.alpha, params.zeta)


def advanced_score(h: Hypothesis, hyps: Iterable[Hypothesis], d: Dataset, alpha: float,
                   cfg: EstimatorConfig = EstimatorConfig()) -> float:
    """Infimum over ``hyps`` of the per-pair advanced term for ``h``.

    For an implicit cover pass the candidate neighborhood as ``hyps``.
    """
    cands = [h, *hyps]
    table = PairTable.build(cands, cfg)
    row = advanced_matrix(table.counts(d)[:1], table.row(0), d.n, alpha)
    return float(row.min())


def advanced_scores(hyps: Sequence[Hypothesis], d: Dataset, alpha: float,
                    cfg: EstimatorConfig = EstimatorConfig(),
                    table: PairTable | None = None) -> np.ndarray:
    table = table or PairTable.build(hyps, cfg)
    return advanced_scores_from_counts(table.counts(d), table, d.n, alpha)

