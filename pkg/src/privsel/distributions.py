"""Candidate and ground-truth distributions.

Every hypothesis exposes vectorized log-densities and seeded sampling. The
module-level functions compute Scheffé-set masses, empirical masses and total
variation distances, exactly where the family admits it and by Monte Carlo
otherwise. Monte Carlo estimates only ever sample from the hypotheses, never
from a private dataset.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Any, Sequence

import numpy as np
from scipy import special, stats

from .errors import DomainError, InvalidParameterError, UnsupportedExactError

PMF_TOL = 1e-9
MAX_ENUMERABLE_SUPPORT = 10**6
DEFAULT_MC_SAMPLES = 100_000


@dataclass(frozen=True)
class Domain:
    """Sample space shared by a set of hypotheses.

    ``kind`` is ``"finite"`` (symbols ``0..size-1``), ``"lattice"``
    (``Z^dimension``) or ``"real"`` (``R^dimension``).
    """

    kind: str
    size: int | None = None
    dimension: int = 1

    def __post_init__(self):
        if self.kind == "finite":
            if self.size is None or self.size < 1:
                raise InvalidParameterError("finite domain needs size >= 1")
        elif self.kind in ("lattice", "real"):
            if self.dimension < 1:
                raise InvalidParameterError("dimension must be >= 1")
        else:
            raise InvalidParameterError(f"unknown domain kind {self.kind!r}")

    @classmethod
    def finite(cls, size: int) -> Domain:
        return cls("finite", size=int(size))

    @classmethod
    def lattice(cls, dimension: int) -> Domain:
        return cls("lattice", dimension=int(dimension))

    @classmethod
    def real(cls, dimension: int) -> Domain:
        return cls("real", dimension=int(dimension))

    def as_points(self, points) -> np.ndarray:
        """Validate a batch of points and return it in canonical array form.

        Finite domains use a 1-D integer array, lattice and real domains a
        2-D ``(n, dimension)`` array. A 1-D array is accepted for
        one-dimensional real domains.
        """
        arr = np.asarray(points)
        if self.kind == "finite":
            arr = arr.reshape(-1)
            if arr.size and not np.issubdtype(arr.dtype, np.integer):
                if not np.all(np.equal(np.mod(arr, 1), 0)):
                    raise DomainError("finite-domain points must be integers")
                arr = arr.astype(np.int64)
            if arr.size and (arr.min() < 0 or arr.max() >= self.size):
                raise DomainError(f"points outside finite domain of size {self.size}")
            return arr.astype(np.int64, copy=False)
        if arr.ndim == 1 and self.dimension == 1:
            arr = arr.reshape(-1, 1)
        if arr.ndim != 2 or arr.shape[1] != self.dimension:
            raise DomainError(
                f"expected points of dimension {self.dimension}, got shape {arr.shape}"
            )
        if self.kind == "lattice":
            if arr.size and not np.issubdtype(arr.dtype, np.integer):
                if not np.all(np.equal(np.mod(arr, 1), 0)):
                    raise DomainError("lattice points must be integer vectors")
            return arr.astype(np.int64)
        arr = arr.astype(np.float64)
        if not np.all(np.isfinite(arr)):
            raise DomainError("real points must be finite")
        return arr

    def as_point(self, x) -> np.ndarray:
        if self.kind == "finite":
            return self.as_points([x])
        arr = np.asarray(x, dtype=float if self.kind == "real" else None)
        return self.as_points(arr.reshape(1, -1))


@dataclass(frozen=True, eq=False)
class Dataset:
    """Ordered multiset of domain points."""

    points: np.ndarray
    domain: Domain

    def __post_init__(self):
        pts = self.domain.as_points(self.points)
        if len(pts) < 1:
            raise InvalidParameterError("a dataset needs at least one point")
        object.__setattr__(self, "points", pts)

    @property
    def n(self) -> int:
        return len(self.points)

    def __len__(self):
        return self.n

    def replace(self, index: int, x) -> Dataset:
        """Neighboring dataset with the point at ``index`` replaced by ``x``."""
        pts = self.points.copy()
        pts[index] = self.domain.as_point(x)[0]
        return Dataset(pts, self.domain)

    def to_json(self) -> list:
        return self.points.tolist()

    @classmethod
    def from_json(cls, data: Sequence, domain: Domain) -> Dataset:
        return cls(np.asarray(data), domain)


class Hypothesis:
    """A candidate distribution. Subclasses are immutable."""

    family: str = ""
    id: str
    domain: Domain

    def log_density(self, points: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def sample_points(self, n: int, rng: np.random.Generator) -> np.ndarray:
        raise NotImplementedError

    def params_dict(self) -> dict:
        raise NotImplementedError

    def to_dict(self) -> dict:
        return {"id": self.id, "family": self.family, "params": self.params_dict()}

    def __repr__(self):
        return f"{type(self).__name__}(id={self.id!r})"


def _pmf(values, what="pmf") -> np.ndarray:
    arr = np.asarray(values, dtype=float).reshape(-1)
    if arr.size == 0:
        raise InvalidParameterError(f"{what} must be nonempty")
    if np.any(~np.isfinite(arr)) or np.any(arr < 0):
        raise InvalidParameterError(f"{what} entries must be finite and >= 0")
    if abs(arr.sum() - 1.0) > PMF_TOL:
        raise InvalidParameterError(f"{what} must sum to 1 (got {arr.sum()!r})")
    return arr


def _log(p: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore"):
        return np.log(p)


@dataclass(frozen=True, eq=False, repr=False)
class Categorical(Hypothesis):
    pmf: np.ndarray
    id: str = ""
    family = "categorical"

    def __post_init__(self):
        object.__setattr__(self, "pmf", _pmf(self.pmf))
        object.__setattr__(self, "_logpmf", _log(self.pmf))

    @property
    def domain(self) -> Domain:
        return Domain.finite(len(self.pmf))

    def log_density(self, points):
        return self._logpmf[points]

    def sample_points(self, n, rng):
        cdf = np.cumsum(self.pmf)
        idx = np.searchsorted(cdf, rng.random(n) * cdf[-1], side="right")
        return np.minimum(idx, len(self.pmf) - 1)

    def params_dict(self):
        return {"pmf": self.pmf.tolist()}


@dataclass(frozen=True, eq=False, repr=False)
class ProductCategorical(Hypothesis):
    """Independent categorical coordinates over ``[k_1] x ... x [k_d]``."""

    pmfs: tuple
    id: str = ""
    family = "product-categorical"

    def __post_init__(self):
        pmfs = tuple(_pmf(p, "marginal pmf") for p in self.pmfs)
        if not pmfs:
            raise InvalidParameterError("product needs at least one coordinate")
        object.__setattr__(self, "pmfs", pmfs)
        object.__setattr__(self, "_logpmfs", tuple(_log(p) for p in pmfs))

    @property
    def domain(self) -> Domain:
        return Domain.lattice(len(self.pmfs))

    @property
    def support_shape(self) -> tuple:
        return tuple(len(p) for p in self.pmfs)

    def log_density(self, points):
        out = np.zeros(len(points))
        for i, lp in enumerate(self._logpmfs):
            col = points[:, i]
            inside = (col >= 0) & (col < len(lp))
            vals = np.full(len(points), -np.inf)
            vals[inside] = lp[col[inside]]
            out += vals
        return out

    def sample_points(self, n, rng):
        cols = [Categorical(p).sample_points(n, rng) for p in self.pmfs]
        return np.stack(cols, axis=1).astype(np.int64)

    def params_dict(self):
        return {"pmfs": [p.tolist() for p in self.pmfs]}


class _GaussianBase(Hypothesis):
    def gaussian_params(self) -> tuple[np.ndarray, np.ndarray]:
        raise NotImplementedError


@dataclass(frozen=True, eq=False, repr=False)
class SphericalGaussian(_GaussianBase):
    """``N(mean, I)``."""

    mean: np.ndarray
    id: str = ""
    family = "gaussian-spherical"

    def __post_init__(self):
        mean = np.atleast_1d(np.asarray(self.mean, dtype=float))
        if mean.ndim != 1 or not np.all(np.isfinite(mean)):
            raise InvalidParameterError("mean must be a finite vector")
        object.__setattr__(self, "mean", mean)

    @property
    def domain(self) -> Domain:
        return Domain.real(len(self.mean))

    def log_density(self, points):
        d = len(self.mean)
        sq = np.sum((points - self.mean) ** 2, axis=1)
        return -0.5 * sq - 0.5 * d * math.log(2 * math.pi)

    def sample_points(self, n, rng):
        return self.mean + rng.standard_normal((n, len(self.mean)))

    def gaussian_params(self):
        return self.mean, np.eye(len(self.mean))

    def params_dict(self):
        return {"mean": self.mean.tolist()}


@dataclass(frozen=True, eq=False, repr=False)
class Gaussian(_GaussianBase):
    """``N(mean, cov)`` with a symmetric positive definite covariance."""

    mean: np.ndarray
    cov: np.ndarray
    id: str = ""
    family = "gaussian-full"

    def __post_init__(self):
        mean = np.atleast_1d(np.asarray(self.mean, dtype=float))
        cov = np.atleast_2d(np.asarray(self.cov, dtype=float))
        if cov.shape != (len(mean), len(mean)):
            raise InvalidParameterError("covariance shape does not match mean")
        if not np.allclose(cov, cov.T, rtol=0, atol=1e-12):
            raise InvalidParameterError("covariance must be symmetric")
        try:
            chol = np.linalg.cholesky(cov)
        except np.linalg.LinAlgError:
            raise InvalidParameterError("covariance must be positive definite") from None
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)
        object.__setattr__(self, "_chol", chol)
        object.__setattr__(self, "_logdet", 2 * np.sum(np.log(np.diag(chol))))

    @property
    def domain(self) -> Domain:
        return Domain.real(len(self.mean))

    def log_density(self, points):
        from scipy.linalg import solve_triangular

        z = solve_triangular(self._chol, (points - self.mean).T, lower=True)
        d = len(self.mean)
        return -0.5 * np.sum(z**2, axis=0) - 0.5 * (self._logdet + d * math.log(2 * math.pi))

    def sample_points(self, n, rng):
        return self.mean + rng.standard_normal((n, len(self.mean))) @ self._chol.T

    def gaussian_params(self):
        return self.mean, self.cov

    def params_dict(self):
        return {"mean": self.mean.tolist(), "cov": self.cov.tolist()}


@dataclass(frozen=True, eq=False, repr=False)
class UnivariateGaussian(_GaussianBase):
    mean: float
    variance: float
    id: str = ""
    family = "gaussian-univariate"

    def __post_init__(self):
        if not (math.isfinite(self.mean) and self.variance > 0 and math.isfinite(self.variance)):
            raise InvalidParameterError("need finite mean and positive variance")
        object.__setattr__(self, "mean", float(self.mean))
        object.__setattr__(self, "variance", float(self.variance))

    @property
    def std(self) -> float:
        return math.sqrt(self.variance)

    @property
    def domain(self) -> Domain:
        return Domain.real(1)

    def log_density(self, points):
        x = points[:, 0]
        return -0.5 * (x - self.mean) ** 2 / self.variance - 0.5 * math.log(
            2 * math.pi * self.variance
        )

    def sample_points(self, n, rng):
        return (self.mean + self.std * rng.standard_normal(n)).reshape(-1, 1)

    def gaussian_params(self):
        return np.array([self.mean]), np.array([[self.variance]])

    def params_dict(self):
        return {"mean": self.mean, "variance": self.variance}


@dataclass(frozen=True, eq=False, repr=False)
class Mixture(Hypothesis):
    weights: np.ndarray
    components: tuple
    id: str = ""
    family = "mixture"

    def __post_init__(self):
        w = _pmf(self.weights, "mixture weights")
        comps = tuple(self.components)
        if len(comps) != len(w):
            raise InvalidParameterError("need one weight per component")
        dom = comps[0].domain
        if any(c.domain != dom for c in comps):
            raise DomainError("mixture components must share one domain")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "components", comps)

    @property
    def domain(self) -> Domain:
        return self.components[0].domain

    def log_density(self, points):
        logs = np.stack([c.log_density(points) for c in self.components])
        with np.errstate(divide="ignore"):
            logw = np.log(self.weights)[:, None]
        return special.logsumexp(logs + logw, axis=0)

    def sample_points(self, n, rng):
        labels = Categorical(self.weights).sample_points(n, rng)
        draws = [c.sample_points(n, rng) for c in self.components]
        out = draws[0].copy()
        for i in range(1, len(draws)):
            out[labels == i] = draws[i][labels == i]
        return out

    def params_dict(self):
        return {
            "weights": self.weights.tolist(),
            "components": [c.to_dict() for c in self.components],
        }


# ---------------------------------------------------------------------------
# (de)serialization

_FAMILIES = {
    "categorical": lambda p, i: Categorical(p["pmf"], id=i),
    "product-categorical": lambda p, i: ProductCategorical(tuple(p["pmfs"]), id=i),
    "gaussian-spherical": lambda p, i: SphericalGaussian(p["mean"], id=i),
    "gaussian-full": lambda p, i: Gaussian(p["mean"], p["cov"], id=i),
    "gaussian-univariate": lambda p, i: UnivariateGaussian(p["mean"], p["variance"], id=i),
    "mixture": lambda p, i: Mixture(
        p["weights"], tuple(hypothesis_from_dict(c) for c in p["components"]), id=i
    ),
}


def hypothesis_from_dict(doc: dict) -> Hypothesis:
    """Build a hypothesis from ``{"id", "family", "params"}``.

    Raises:
        KeyError: a required field is missing; the message names it.
        InvalidParameterError: the family is unknown or parameters are invalid.
    """
    if not isinstance(doc, dict):
        raise InvalidParameterError("hypothesis must be a JSON object")
    for key in ("family", "params"):
        if key not in doc:
            raise KeyError(key)
    family = doc["family"]
    if family not in _FAMILIES:
        raise InvalidParameterError(f"unknown family {family!r}")
    return _FAMILIES[family](doc["params"], str(doc.get("id", "")))


def hypotheses_to_json(hyps: Sequence[Hypothesis]) -> str:
    return json.dumps([h.to_dict() for h in hyps])


# ---------------------------------------------------------------------------
# operations


@dataclass(frozen=True)
class EstimatorConfig:
    """How Scheffé masses and TV distances are evaluated.

    ``mode`` is ``"exact"`` (raise if unsupported), ``"monte-carlo"`` or
    ``"auto"`` (exact where supported, Monte Carlo otherwise).
    """

    mode: str = "auto"
    mc_samples: int = DEFAULT_MC_SAMPLES
    seed: int = 0

    def __post_init__(self):
        if self.mode not in ("exact", "monte-carlo", "auto"):
            raise InvalidParameterError(f"unknown estimator mode {self.mode!r}")
        if self.mc_samples < 1:
            raise InvalidParameterError("mc_samples must be positive")

    def rng(self) -> np.random.Generator:
        return np.random.default_rng(self.seed)


def _shared_domain(*hyps: Hypothesis) -> Domain:
    dom = hyps[0].domain
    for h in hyps[1:]:
        if h.domain != dom:
            raise DomainError(f"domain mismatch: {dom} vs {h.domain}")
    return dom


def density(h: Hypothesis, x) -> float:
    """pmf or pdf of ``h`` at a single point."""
    pts = h.domain.as_point(x)
    return float(np.exp(h.log_density(pts)[0]))


def log_density(h: Hypothesis, points) -> np.ndarray:
    return h.log_density(h.domain.as_points(points))


def sample(h: Hypothesis, n: int, rng: np.random.Generator) -> Dataset:
    if n < 1:
        raise InvalidParameterError("n must be >= 1")
    return Dataset(h.sample_points(int(n), rng), h.domain)


def _finite_pmfs(hyps: Sequence[Hypothesis]) -> list[np.ndarray] | None:
    """Joint pmfs over one common enumeration, or None if not enumerable."""
    dom = hyps[0].domain
    if dom.kind == "finite":
        out = []
        for h in hyps:
            p = _finite_pmf(h)
            if p is None:
                return None
            out.append(p)
        return out
    if dom.kind == "lattice":
        shapes = [_product_shape(h) for h in hyps]
        if any(s is None for s in shapes):
            return None
        shape = tuple(np.max(np.array(shapes), axis=0))
        if math.prod(shape) > MAX_ENUMERABLE_SUPPORT:
            return None
        return [_joint_pmf(h, shape) for h in hyps]
    return None


def _finite_pmf(h):
    if isinstance(h, Categorical):
        return h.pmf
    if isinstance(h, Mixture):
        parts = [_finite_pmf(c) for c in h.components]
        if any(p is None for p in parts):
            return None
        return np.sum([w * p for w, p in zip(h.weights, parts)], axis=0)
    return None


def _product_shape(h):
    if isinstance(h, ProductCategorical):
        return h.support_shape
    if isinstance(h, Mixture):
        shapes = [_product_shape(c) for c in h.components]
        if any(s is None for s in shapes):
            return None
        return tuple(np.max(np.array(shapes), axis=0))
    return None


def _joint_pmf(h, shape):
    if isinstance(h, Mixture):
        return np.sum([w * _joint_pmf(c, shape) for w, c in zip(h.weights, h.components)], axis=0)
    joint = np.ones(1)
    for p, k in zip(h.pmfs, shape):
        padded = np.zeros(k)
        padded[: len(p)] = p
        joint = np.multiply.outer(joint, padded).reshape(-1)
    return joint


def enumerable_support(hyps: Sequence[Hypothesis]) -> tuple[np.ndarray, Any] | None:
    """Joint pmf matrix over an enumerated support and the point indexer.

    Returns ``(pmfs, index_of)`` where ``pmfs`` has one row per hypothesis and
    ``index_of(points)`` maps canonical points to support columns, or None
    when the hypotheses are not enumerable.
    """
    pmfs = _finite_pmfs(hyps)
    if pmfs is None:
        return None
    dom = hyps[0].domain
    if dom.kind == "finite":
        return np.stack(pmfs), lambda pts: pts
    shape = tuple(np.max(np.array([_product_shape(h) for h in hyps]), axis=0))

    def index_of(pts):
        inside = np.all((pts >= 0) & (pts < np.array(shape)), axis=1)
        if not np.all(inside):
            raise DomainError("point outside the joint support of the hypotheses")
        return np.ravel_multi_index(tuple(pts.T), shape)

    return np.stack(pmfs), index_of


def _gaussian(h):
    if isinstance(h, _GaussianBase):
        return h.gaussian_params()
    return None


def _linear_scheffe(h, hp):
    """``(a, c)`` with Scheffé set ``{x : a.(x - c) > 0}`` for equal covariances."""
    (m1, s1), (m2, s2) = _gaussian(h), _gaussian(hp)
    if not np.array_equal(s1, s2):
        return None
    a = np.linalg.solve(s1, m1 - m2)
    top = np.max(np.abs(a))
    if top > 0:
        a = a / top  # the set is scale-free; keeps tiny mean gaps from underflowing
    return a, 0.5 * (m1 + m2)


def _halfspace_mass(a, c, q) -> float:
    mq, sq = _gaussian(q)
    if not np.any(a):
        return 0.0
    scale = math.sqrt(a @ sq @ a)
    return float(stats.norm.cdf(a @ (mq - c) / scale))


def _quadratic_scheffe_mass(h, hp, q) -> float:
    """Univariate Gaussians with unequal variances: a quadratic Scheffé set."""
    (m1,), ((v1,),) = _gaussian(h)
    (m2,), ((v2,),) = _gaussian(hp)
    (mq,), ((vq,),) = _gaussian(q)
    qa = 0.5 / v2 - 0.5 / v1
    qb = m1 / v1 - m2 / v2
    qc = -0.5 * m1**2 / v1 + 0.5 * m2**2 / v2 - 0.5 * math.log(v1 / v2)
    disc = qb * qb - 4 * qa * qc
    sq = math.sqrt(vq)
    if disc <= 0:
        return 1.0 if qa > 0 else 0.0
    root = math.sqrt(disc)
    # numerically stable roots; t != 0 because disc > 0
    t = -0.5 * (qb + math.copysign(root, qb))
    r1, r2 = sorted((t / qa, qc / t))
    z1, z2 = (r1 - mq) / sq, (r2 - mq) / sq
    if qa > 0:
        return float(stats.norm.cdf(z1) + stats.norm.sf(z2))
    return float(stats.norm.cdf(z2) - stats.norm.cdf(z1))


def exact_scheffe_mass(h: Hypothesis, hp: Hypothesis, q: Hypothesis) -> float:
    """Exact ``q({x : h(x) > hp(x)})``.

    Raises:
        UnsupportedExactError: no closed form or enumeration applies.
    """
    _shared_domain(h, hp, q)
    pmfs = _finite_pmfs([h, hp, q])
    if pmfs is not None:
        ph, php, pq = pmfs
        with np.errstate(divide="ignore"):
            mask = _log(ph) > _log(php)
        return float(min(1.0, pq[mask].sum()))
    if all(_gaussian(x) is not None for x in (h, hp, q)):
        lin = _linear_scheffe(h, hp)
        if lin is not None:
            return _halfspace_mass(*lin, q)
        if h.domain.dimension == 1:
            return _quadratic_scheffe_mass(h, hp, q)
    raise UnsupportedExactError(
        f"no exact Scheffé mass for ({h.family}, {hp.family}, {q.family})"
    )


def scheffe_mass(h: Hypothesis, hp: Hypothesis, q: Hypothesis,
                 cfg: EstimatorConfig = EstimatorConfig()) -> float:
    """Mass that ``q`` puts on the Scheffé set ``{x : h(x) > hp(x)}``.

    Ties ``h(x) == hp(x)`` are outside the set; comparisons are made in log
    space.
    """
    if cfg.mode != "monte-carlo":
        try:
            return exact_scheffe_mass(h, hp, q)
        except UnsupportedExactError:
            if cfg.mode == "exact":
                raise
    _shared_domain(h, hp, q)
    draws = q.sample_points(cfg.mc_samples, cfg.rng())
    return float(np.mean(h.log_density(draws) > hp.log_density(draws)))


def empirical_mass(h: Hypothesis, hp: Hypothesis, d: Dataset) -> float:
    """Fraction of dataset points in the Scheffé set of ``(h, hp)``."""
    _shared_domain(h, hp)
    if d.domain != h.domain:
        raise DomainError("dataset domain does not match hypotheses")
    return float(np.mean(h.log_density(d.points) > hp.log_density(d.points)))


def spherical_tv(mean_a, mean_b) -> float:
    """TV between ``N(a, I)`` and ``N(b, I)``: ``2 P[N(0,1) in [0, |a-b|/2]]``."""
    dist = float(np.linalg.norm(np.asarray(mean_a, float) - np.asarray(mean_b, float)))
    return float(special.erf(dist / (2 * math.sqrt(2))))


def exact_tv_distance(h: Hypothesis, hp: Hypothesis) -> float:
    _shared_domain(h, hp)
    pmfs = _finite_pmfs([h, hp])
    if pmfs is not None:
        return float(min(1.0, 0.5 * np.abs(pmfs[0] - pmfs[1]).sum()))
    if _gaussian(h) is not None and _gaussian(hp) is not None:
        (m1, s1), (m2, s2) = _gaussian(h), _gaussian(hp)
        if np.array_equal(s1, s2):
            # Mahalanobis distance plays the role of |mu - mu'| after whitening
            dist = math.sqrt(max(0.0, (m1 - m2) @ np.linalg.solve(s1, m1 - m2)))
            return float(special.erf(dist / (2 * math.sqrt(2))))
        if h.domain.dimension == 1:
            tv = _quadratic_scheffe_mass(h, hp, h) - _quadratic_scheffe_mass(h, hp, hp)
            return float(min(1.0, max(0.0, tv)))
    raise UnsupportedExactError(f"no exact TV for ({h.family}, {hp.family})")


def tv_distance(h: Hypothesis, hp: Hypothesis,
                cfg: EstimatorConfig = EstimatorConfig()) -> float:
    """Total variation distance between two hypotheses.

    The Monte Carlo fallback estimates ``E_h[max(0, 1 - hp(X)/h(X))]``.
    """
    if cfg.mode != "monte-carlo":
        try:
            return exact_tv_distance(h, hp)
        except UnsupportedExactError:
            if cfg.mode == "exact":
                raise
    _shared_domain(h, hp)
    draws = h.sample_points(cfg.mc_samples, cfg.rng())
    ratio = np.exp(np.minimum(hp.log_density(draws) - h.log_density(draws), 0.0))
    return float(np.mean(1.0 - ratio))


def univariate_scheffe_regions(mean_a, std_a, mean_b, std_b):
    """Scheffé sets ``{f_a > f_b}`` of univariate Gaussians, vectorized.

    Returns ``(inside, lo, hi)``: the set is ``(lo, hi)`` where ``inside`` is
    true and ``(-inf, lo) U (hi, inf)`` elsewhere (half-lines and the empty
    set use infinite endpoints).
    """
    ma, sa, mb, sb = np.broadcast_arrays(*(np.asarray(v, dtype=float)
                                           for v in (mean_a, std_a, mean_b, std_b)))
    va, vb = sa * sa, sb * sb
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        qa = 0.5 / vb - 0.5 / va
        qb = ma / va - mb / vb
        qc = -0.5 * ma**2 / va + 0.5 * mb**2 / vb - 0.5 * np.log(va / vb)
        root = np.sqrt(np.maximum(qb * qb - 4 * qa * qc, 0.0))
        t = -0.5 * (qb + np.where(qb >= 0, root, -root))
        r1, r2 = t / qa, qc / t
        lo, hi = np.minimum(r1, r2), np.maximum(r1, r2)
        mid = 0.5 * (ma + mb)
    equal = va == vb
    inside = ~equal & (sa < sb)
    # equal variances: right half-line if mean_a > mean_b, left if smaller, else empty
    lo = np.where(equal, np.where(ma < mb, mid, -np.inf), lo)
    hi = np.where(equal, np.where(ma > mb, mid, np.inf), hi)
    return inside, lo, hi


def region_mass(inside, lo, hi, mean, std) -> np.ndarray:
    """Gaussian mass of regions from :func:`univariate_scheffe_regions`."""
    zl, zh = (lo - mean) / std, (hi - mean) / std
    out = stats.norm.cdf(zl) + stats.norm.sf(zh)
    return np.clip(np.where(inside, stats.norm.cdf(zh) - stats.norm.cdf(zl), out), 0.0, 1.0)


def region_counts(inside, lo, hi, sorted_x: np.ndarray) -> np.ndarray:
    """Number of points strictly inside each region; ``sorted_x`` ascending."""
    n = len(sorted_x)
    below_lo = np.searchsorted(sorted_x, lo, side="left")
    above_hi = n - np.searchsorted(sorted_x, hi, side="right")
    between = np.searchsorted(sorted_x, hi, side="left") - np.searchsorted(sorted_x, lo, side="right")
    return np.where(inside, np.maximum(between, 0), below_lo + above_hi)


def univariate_gaussian_tv(mean_a, std_a, mean_b, std_b) -> np.ndarray:
    """Vectorized exact TV between ``N(mean_a, std_a^2)`` and ``N(mean_b, std_b^2)``.

    Computed as ``P_a(W) - P_b(W)`` on the Scheffé set ``W = {f_a > f_b}``.
    """
    inside, lo, hi = univariate_scheffe_regions(mean_a, std_a, mean_b, std_b)
    tv = region_mass(inside, lo, hi, mean_a, std_a) - region_mass(inside, lo, hi, mean_b, std_b)
    return np.clip(tv, 0.0, 1.0)
