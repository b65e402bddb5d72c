"""Constructive covers and packings of distribution families.

Explicit generators materialize a finite list of hypotheses and refuse to go
past a size cap. Implicit covers (:class:`LatticeCover`,
:class:`UnivariateGaussianCover`) are infinite but locally small: they answer
nearest-element queries and enumerate every element inside a TV ball.
"""
from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import special

from .distributions import (
    Categorical,
    Dataset,
    EstimatorConfig,
    Gaussian,
    Hypothesis,
    Mixture,
    ProductCategorical,
    SphericalGaussian,
    UnivariateGaussian,
    enumerable_support,
    hypothesis_from_dict,
    tv_distance,
    univariate_gaussian_tv,
)
from .errors import CoverSizeError, InvalidParameterError

DEFAULT_SIZE_CAP = 10**7
_EPS = 1e-12


@dataclass
class ExplicitCover:
    alpha: float
    elements: list
    diagnostics: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.elements:
            raise InvalidParameterError("explicit cover must be nonempty")
        dom = self.elements[0].domain
        if any(h.domain != dom for h in self.elements):
            raise InvalidParameterError("cover elements must share one domain")

    def __len__(self):
        return len(self.elements)

    def candidates_for(self, d: Dataset | None = None, alpha: float | None = None) -> list:
        return list(self.elements)

    def to_dict(self) -> dict:
        return {"alpha": self.alpha, "elements": [h.to_dict() for h in self.elements]}

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)

    @classmethod
    def from_dict(cls, doc: dict) -> ExplicitCover:
        return cls(float(doc["alpha"]), [hypothesis_from_dict(e) for e in doc["elements"]])


def _check_alpha(alpha):
    if not 0 < alpha < 1:
        raise InvalidParameterError("alpha must lie in (0, 1)")


def _check_cap(size: int, cap: int, formula: str):
    if size > cap:
        raise CoverSizeError(size, cap, formula)


def _compositions(total: int, parts: int):
    """Nonnegative integer tuples of length ``parts`` with sum <= ``total``."""
    if parts == 0:
        yield ()
        return
    for first in range(total + 1):
        for rest in _compositions(total - first, parts - 1):
            yield (first, *rest)


def simplex_grid(k: int, step: float) -> np.ndarray:
    """pmfs on ``k`` symbols whose first ``k-1`` entries are multiples of ``step``.

    The last entry absorbs the remainder; only rows with every entry >= 0 exist.
    """
    steps = math.floor(1 / step + 1e-9)
    rows = []
    for c in _compositions(steps, k - 1):
        head = [i * step for i in c]
        rows.append(head + [max(0.0, 1.0 - sum(head))])
    return np.array(rows)


def product_cover_size(k: int, d: int, alpha: float) -> int:
    steps = math.floor(2 * k * d / alpha + 1e-9)
    return math.comb(steps + k - 1, k - 1) ** d


def product_cover(k: int, d: int, alpha: float, cap: int = DEFAULT_SIZE_CAP) -> ExplicitCover:
    """alpha-cover of product distributions over ``[k]^d``.

    Each marginal is gridded at ``g = alpha / (2 k d)``: rounding the first
    ``k-1`` symbols down moves at most ``(k-1) g`` mass onto the last symbol,
    so each marginal is within ``(k-1) g < alpha / (2d)`` in TV and the
    product within ``alpha`` by subadditivity of TV over coordinates. With
    ``d == 1`` the elements are plain categoricals.
    """
    _check_alpha(alpha)
    if k < 2 or d < 1:
        raise InvalidParameterError("need k >= 2 and d >= 1")
    g = alpha / (2 * k * d)
    steps = math.floor(1 / g + 1e-9)
    size = product_cover_size(k, d, alpha)
    _check_cap(size, cap, f"C({steps}+{k - 1}, {k - 1})^{d}")
    grid = simplex_grid(k, g)
    if d == 1:
        elems = [Categorical(p / p.sum(), id=f"prod:{i}") for i, p in enumerate(grid)]
    else:
        elems = [
            ProductCategorical(tuple(grid[list(idx)]), id="prod:" + ",".join(map(str, idx)))
            for idx in itertools.product(range(len(grid)), repeat=d)
        ]
    return ExplicitCover(alpha, elems, {"granularity": g, "size_formula": size})


def _centered_grid(R: float, spacing: float) -> np.ndarray:
    half = max(0, math.ceil(R / spacing - 0.5 - 1e-12))
    return np.arange(-half, half + 1) * spacing


def gaussian_mean_cover(d: int, R: float, alpha: float,
                        cap: int = DEFAULT_SIZE_CAP) -> ExplicitCover:
    """alpha-cover of ``{N(mu, I) : |mu|_2 <= R}``.

    Coordinates are gridded at spacing ``s = 2 alpha sqrt(2 pi) / d`` around
    0; each coordinate is off by at most ``s/2``, worth at most
    ``(s/2)/sqrt(2 pi) = alpha/d`` of TV, so ``alpha`` in total.
    """
    _check_alpha(alpha)
    if d < 1 or R < 0:
        raise InvalidParameterError("need d >= 1 and R >= 0")
    s = 2 * alpha * math.sqrt(2 * math.pi) / d
    axis = _centered_grid(R, s)
    size = len(axis) ** d
    _check_cap(size, cap, f"{len(axis)}^{d}")
    elems = [SphericalGaussian(np.array(mu), id=f"mean:{i}")
             for i, mu in enumerate(itertools.product(axis, repeat=d))]
    return ExplicitCover(alpha, elems, {"spacing": s, "axis_points": len(axis)})


COV_TOLERANCE_FACTOR = 3.0


def gaussian_cov_cover(d: int, R: float, kappa: float, alpha: float,
                       cap: int = DEFAULT_SIZE_CAP) -> ExplicitCover:
    """alpha-cover of ``N(mu, Sigma)`` with ``|mu| <= R`` and ``I <= Sigma <= kappa I``.

    Covariances come from a grid over lower-triangular Cholesky factors:
    diagonal entries in ``[0, sqrt(kappa)]``, off-diagonal entries in
    ``[-sqrt(kappa), sqrt(kappa)]``, spacing ``alpha / (4 d^2 sqrt(kappa))``.
    A half-step error in every factor entry perturbs each covariance entry
    by at most ``d sqrt(kappa) * step + d step^2 / 4 <= gamma`` with
    ``gamma = alpha / (COV_TOLERANCE_FACTOR * 2 d)``; reading the entrywise
    bound ``d_TV <= O(d gamma)`` as ``3 d gamma`` leaves ``alpha / 2`` for
    the covariance and ``alpha / 2`` for the mean grid. Only factors whose
    covariance has eigenvalues in ``[1, kappa]`` are kept.
    """
    _check_alpha(alpha)
    if d < 1 or R < 0 or kappa < 1:
        raise InvalidParameterError("need d >= 1, R >= 0, kappa >= 1")
    means = gaussian_mean_cover(d, R, alpha / 2, cap).elements
    root = math.sqrt(kappa)
    step = alpha / (4 * d * d * root)

    def axis(lo, hi):
        num = max(1, math.ceil((hi - lo) / step - 1e-12)) + 1
        return np.linspace(lo, hi, num)

    diag_axis = axis(0.0, root) if kappa > 1 else np.array([1.0])
    off_axis = axis(-root, root) if kappa > 1 else np.array([0.0])
    n_off = d * (d - 1) // 2
    raw = len(diag_axis) ** d * len(off_axis) ** n_off
    _check_cap(raw * len(means), cap, f"{len(means)} * {len(diag_axis)}^{d} * {len(off_axis)}^{n_off}")
    tril = np.tril_indices(d, -1)
    covs = []
    for diag in itertools.product(diag_axis, repeat=d):
        if kappa > 1 and diag[0] < 1 - _EPS:
            continue  # Sigma_11 = L_11^2 must be >= 1
        for off in itertools.product(off_axis, repeat=n_off):
            L = np.diag(diag)
            L[tril] = off
            S = L @ L.T
            ev = np.linalg.eigvalsh(S)
            if ev[0] >= 1 - 1e-9 and ev[-1] <= kappa + 1e-9:
                covs.append(S)
    size = len(covs) * len(means)
    _check_cap(size, cap, f"{len(means)} * {len(covs)}")
    elems = [Gaussian(mu.mean, S, id=f"cov:{i}:{j}")
             for i, mu in enumerate(means) for j, S in enumerate(covs)]
    return ExplicitCover(alpha, elems, {
        "cholesky_step": step,
        "entry_tolerance": alpha / (COV_TOLERANCE_FACTOR * 2 * d),
        "tv_constant": COV_TOLERANCE_FACTOR,
        "num_covariances": len(covs),
    })


def mixture_cover(base: ExplicitCover, k: int, alpha: float,
                  cap: int = DEFAULT_SIZE_CAP) -> ExplicitCover:
    """Cover of ``k``-mixtures of a base-covered family.

    Ordered ``k``-tuples of base elements are crossed with weight vectors
    whose first ``k-1`` weights lie on the ``2 alpha / k`` grid. Rounding
    weights costs at most ``alpha`` and component errors add the base
    radius, so a mixture of base-family members is within
    ``alpha + base.alpha`` (``2 alpha`` when the base is an alpha-cover).
    Permutation-equivalent mixtures are not deduplicated.
    """
    _check_alpha(alpha)
    if k < 1:
        raise InvalidParameterError("k must be >= 1")
    if k == 1:
        return ExplicitCover(alpha, [Mixture([1.0], (h,), id=f"mix:{i}")
                                     for i, h in enumerate(base.elements)])
    weights = simplex_grid(k, 2 * alpha / k)
    size = len(base.elements) ** k * len(weights)
    _check_cap(size, cap, f"{len(base.elements)}^{k} * {len(weights)}")
    elems = []
    for combo in itertools.product(range(len(base.elements)), repeat=k):
        comps = tuple(base.elements[i] for i in combo)
        for wi, w in enumerate(weights):
            elems.append(Mixture(w / w.sum(), comps,
                                 id="mix:" + ",".join(map(str, combo)) + f":{wi}"))
    return ExplicitCover(alpha, elems, {"weight_grid": len(weights)})


def _tv_rows(candidates: Sequence[Hypothesis], cfg: EstimatorConfig):
    """Callable ``tv(i, js)`` returning TV from candidate ``i`` to each of ``js``."""
    enum_ = enumerable_support(candidates) if cfg.mode != "monte-carlo" else None
    if enum_ is not None:
        pmfs = enum_[0]

        def tv(i, js):
            return 0.5 * np.abs(pmfs[js] - pmfs[i]).sum(axis=1)
        return tv

    def tv(i, js):
        return np.array([tv_distance(candidates[i], candidates[j], cfg) for j in js])
    return tv


def greedy_packing(candidates: Sequence[Hypothesis], alpha: float,
                   cfg: EstimatorConfig = EstimatorConfig()) -> list:
    """Maximal alpha-packing of ``candidates``, scanned in order.

    A candidate is kept iff its TV to every kept element exceeds ``alpha``.
    Maximality makes the result an alpha-cover of the candidate list too.
    """
    tv = _tv_rows(candidates, cfg)
    kept: list[int] = []
    for i in range(len(candidates)):
        if not kept or np.all(tv(i, kept) > alpha):
            kept.append(i)
    return [candidates[i] for i in kept]


def is_cover(cover: Sequence[Hypothesis], family: Sequence[Hypothesis], alpha: float,
             cfg: EstimatorConfig = EstimatorConfig()) -> bool:
    allh = list(cover) + list(family)
    tv = _tv_rows(allh, cfg)
    ncov = len(cover)
    return all(np.min(tv(ncov + i, list(range(ncov)))) <= alpha for i in range(len(family)))


def is_packing(elems: Sequence[Hypothesis], alpha: float,
               cfg: EstimatorConfig = EstimatorConfig()) -> bool:
    tv = _tv_rows(elems, cfg)
    return all(np.all(tv(i, list(range(i))) > alpha) for i in range(1, len(elems)))


def packing_lower_bound_n(packing_size: int, epsilon: float) -> int:
    """Smallest-n threshold from the group-privacy packing argument.

    Any eps-DP learner that is ``alpha/2``-accurate w.p. 9/10 on every member
    of an alpha-packing needs ``1 >= size * e^{-eps n} * 9/10``, i.e.
    ``n >= ln(0.9 size) / eps``; returned rounded up, or 0 when negative.
    """
    if packing_size < 1 or not epsilon > 0:
        raise InvalidParameterError("need packing_size >= 1 and epsilon > 0")
    val = math.log(0.9 * packing_size) / epsilon
    return max(0, math.ceil(val - 1e-12))


# ---------------------------------------------------------------------------
# implicit covers


class ImplicitCover:
    """Infinite cover answering nearest-element and TV-ball queries."""

    alpha: float
    local_bound: int

    def nearest(self, h: Hypothesis) -> Hypothesis:
        raise NotImplementedError

    def ball(self, h: Hypothesis, radius: float) -> list:
        """Every cover element within TV ``radius`` of ``h``."""
        raise NotImplementedError

    def anchor(self, d: Dataset) -> Hypothesis:
        """Data-driven query point; computed without privacy protection."""
        raise NotImplementedError

    def candidates_for(self, d: Dataset, alpha: float | None = None) -> list:
        """Local ball of radius ``8 alpha`` around the anchor.

        Elements within ``7 alpha`` of the truth lie in it whenever the
        anchor is within ``alpha`` of the truth.
        """
        a = self.alpha if alpha is None else alpha
        return self.ball(self.anchor(d), min(8 * a, 1 - 1e-9))


class LatticeCover(ImplicitCover):
    """``{N(m * alpha sqrt(8 pi) / sqrt(d), I) : m in Z^d}``.

    Rounding ``mu`` coordinatewise moves it by at most ``sqrt(d)/2`` lattice
    units, i.e. TV at most ``alpha``. Elements within ``7 alpha`` of any
    query lie within ``13 sqrt(d)`` lattice units of its nearest element,
    giving the declared local bound ``2^{15 d}``.
    """

    def __init__(self, d: int, alpha: float):
        if d < 1:
            raise InvalidParameterError("d must be >= 1")
        if not 0 < alpha <= 1 / 30:
            raise InvalidParameterError("lattice cover needs alpha in (0, 1/30]")
        self.d = d
        self.alpha = alpha
        self.spacing = alpha * math.sqrt(8 * math.pi) / math.sqrt(d)
        self.local_bound = 2 ** (15 * d)

    def element(self, m) -> SphericalGaussian:
        m = np.asarray(m, dtype=np.int64)
        return SphericalGaussian(m * self.spacing, id="lattice:" + ",".join(map(str, m)))

    def nearest_index(self, mean) -> np.ndarray:
        return np.rint(np.asarray(mean, dtype=float) / self.spacing).astype(np.int64)

    def nearest(self, h: SphericalGaussian) -> SphericalGaussian:
        return self.element(self.nearest_index(h.mean))

    def ball_indices(self, mean, radius: float) -> np.ndarray:
        if not 0 <= radius < 1:
            raise InvalidParameterError("TV radius must lie in [0, 1)")
        mean = np.asarray(mean, dtype=float)
        # TV = erf(dist / (2 sqrt 2)) is increasing in dist
        dist = 2 * math.sqrt(2) * special.erfinv(radius)
        center = mean / self.spacing
        r = dist / self.spacing
        axes = [np.arange(math.floor(c - r), math.ceil(c + r) + 1) for c in center]
        grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, self.d)
        tv = special.erf(np.linalg.norm(grid * self.spacing - mean, axis=1) / (2 * math.sqrt(2)))
        return grid[tv <= radius + _EPS]

    def ball(self, h: SphericalGaussian, radius: float) -> list:
        return [self.element(m) for m in self.ball_indices(h.mean, radius)]

    def proof_window(self, m0) -> np.ndarray:
        """Lattice indices with ``|m - m0|_2 < 13 sqrt(d)``."""
        r = 13 * math.sqrt(self.d)
        m0 = np.asarray(m0)
        axes = [np.arange(c - math.floor(r), c + math.floor(r) + 1) for c in m0]
        grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, self.d)
        return grid[np.linalg.norm(grid - m0, axis=1) < r]

    def anchor(self, d: Dataset) -> SphericalGaussian:
        return SphericalGaussian(d.points.mean(axis=0))


class UnivariateGaussianCover(ImplicitCover):
    """``{N(beta e^{gamma n} m, e^{2 gamma n}) : n, m in Z}`` with
    ``beta = alpha`` and ``gamma = log(1 + alpha/2)``.

    The nearest element has ``e^{-gamma} <= var ratio <= e^{gamma}`` and a mean
    offset of at most ``beta/2`` standard deviations, so it is within
    ``(3/2)(e^gamma - 1) + beta/4 <= alpha`` in TV.
    """

    def __init__(self, alpha: float, max_alpha: float = 0.1, local_bound: int = 512):
        if not 0 < alpha <= max_alpha:
            raise InvalidParameterError(f"univariate cover needs alpha in (0, {max_alpha}]")
        self.alpha = alpha
        self.beta = alpha
        self.gamma = math.log1p(alpha / 2)
        self.local_bound = local_bound

    def element(self, n: int, m: int) -> UnivariateGaussian:
        scale = math.exp(self.gamma * n)
        return UnivariateGaussian(self.beta * scale * m, scale * scale, id=f"uni:{n},{m}")

    def nearest_index(self, mean: float, std: float) -> tuple[int, int]:
        n = int(np.rint(math.log(std) / self.gamma))
        m = int(np.rint(mean / (self.beta * math.exp(self.gamma * n))))
        return n, m

    def nearest(self, h: UnivariateGaussian) -> UnivariateGaussian:
        return self.element(*self.nearest_index(h.mean, h.std))

    def ball_indices(self, mean: float, std: float, radius: float) -> np.ndarray:
        """Index pairs ``(n, m)`` of elements within TV ``radius``.

        Candidates come from a window derived from ``TV >= 1 - BC`` (BC the
        Bhattacharyya coefficient), then each is checked with the exact TV.
        """
        if not 0 <= radius < 1:
            raise InvalidParameterError("TV radius must lie in [0, 1)")
        c = (1 - radius) ** 2
        # 2 rho / (1 + rho^2) >= c  with rho = sigma_tilde / sigma
        disc = math.sqrt(max(0.0, 1 - c * c))
        rho_lo, rho_hi = (1 - disc) / c, (1 + disc) / c
        n_lo = math.floor((math.log(std) + math.log(rho_lo)) / self.gamma) - 1
        n_hi = math.ceil((math.log(std) + math.log(rho_hi)) / self.gamma) + 1
        ns, ms = [], []
        for n in range(n_lo, n_hi + 1):
            sig = math.exp(self.gamma * n)
            ssum = std * std + sig * sig
            coef = math.sqrt(2 * std * sig / ssum)
            if coef < 1 - radius:
                continue
            dmu = math.sqrt(max(0.0, -4 * ssum * math.log((1 - radius) / coef)))
            step = self.beta * sig
            m_lo = math.floor((mean - dmu) / step) - 1
            m_hi = math.ceil((mean + dmu) / step) + 1
            m_range = np.arange(m_lo, m_hi + 1)
            ns.append(np.full(len(m_range), n))
            ms.append(m_range)
        if not ns:
            return np.zeros((0, 2), dtype=np.int64)
        n_arr, m_arr = np.concatenate(ns), np.concatenate(ms)
        scale = np.exp(self.gamma * n_arr)
        tv = univariate_gaussian_tv(mean, std, self.beta * scale * m_arr, scale)
        keep = tv <= radius + _EPS
        return np.stack([n_arr[keep], m_arr[keep]], axis=1)

    def ball(self, h: UnivariateGaussian, radius: float) -> list:
        return [self.element(int(n), int(m)) for n, m in self.ball_indices(h.mean, h.std, radius)]

    def anchor(self, d: Dataset) -> UnivariateGaussian:
        x = d.points[:, 0]
        var = float(x.var()) if len(x) > 1 else 1.0
        return UnivariateGaussian(float(x.mean()), max(var, 1e-12))
