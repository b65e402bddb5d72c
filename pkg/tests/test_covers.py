import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate, stats

from privsel.covers import (
    ExplicitCover,
    LatticeCover,
    UnivariateGaussianCover,
    gaussian_cov_cover,
    gaussian_mean_cover,
    greedy_packing,
    is_cover,
    is_packing,
    mixture_cover,
    packing_lower_bound_n,
    product_cover,
    product_cover_size,
    simplex_grid,
)
from privsel.distributions import (
    Categorical,
    ProductCategorical,
    SphericalGaussian,
    UnivariateGaussian,
    spherical_tv,
    tv_distance,
    univariate_gaussian_tv,
)
from privsel.errors import CoverSizeError, InvalidParameterError


def quad_tv_1d(m1, s1, m2, s2):
    f = stats.norm(m1, s1).pdf
    g = stats.norm(m2, s2).pdf
    lo = min(m1 - 20 * s1, m2 - 20 * s2)
    hi = max(m1 + 20 * s1, m2 + 20 * s2)
    v, _ = integrate.quad(lambda x: abs(f(x) - g(x)), lo, hi, limit=400, points=[m1, m2])
    return v / 2


# --- product ---------------------------------------------------------------


def test_bernoulli_grid_example():
    cover = product_cover(2, 1, 0.2)
    assert len(cover) == 21
    ps = np.array(sorted(h.pmf[0] for h in cover.elements))
    assert np.allclose(ps, np.linspace(0, 1, 21))
    for p in np.linspace(0, 1, 1001):
        assert np.min(np.abs(ps - p)) <= 0.025 + 1e-12


def test_product_cover_k3_valid_pmfs():
    cover = product_cover(3, 1, 0.3)
    for h in cover.elements:
        assert h.pmf.min() >= 0 and h.pmf.sum() == pytest.approx(1)
    assert len(cover) == product_cover_size(3, 1, 0.3)


def test_product_cover_sizes_and_cap():
    assert len(product_cover(2, 2, 0.5)) == product_cover_size(2, 2, 0.5) == 17**2
    with pytest.raises(CoverSizeError) as exc:
        product_cover(5, 4, 0.05, cap=1000)
    assert exc.value.size == product_cover_size(5, 4, 0.05) and exc.value.cap == 1000


def test_product_cover_soundness_random():
    rng = np.random.default_rng(0)
    alpha = 0.5
    cover = product_cover(2, 2, alpha)
    for _ in range(100):
        target = ProductCategorical(tuple(rng.dirichlet(np.ones(2)) for _ in range(2)))
        assert min(tv_distance(target, e) for e in cover.elements) <= alpha


def test_product_cover_nested_in_accuracy():
    cover = product_cover(3, 1, 0.3)
    rng = np.random.default_rng(1)
    for _ in range(100):
        t = Categorical(rng.dirichlet(np.ones(3)))
        best = min(tv_distance(t, e) for e in cover.elements)
        assert best <= 0.3 and best <= 0.45


def test_simplex_grid_rows():
    g = simplex_grid(3, 0.25)
    assert np.allclose(g.sum(axis=1), 1) and g.min() >= 0
    assert len(g) == math.comb(4 + 2, 2)


# --- gaussian mean -----------------------------------------------------------


def test_gaussian_mean_cover_examples():
    cover = gaussian_mean_cover(1, 1.0, 0.25)
    assert cover.diagnostics["spacing"] == pytest.approx(1.2533, abs=1e-4)
    means = np.array([e.mean[0] for e in cover.elements])
    for mu in np.linspace(-1, 1, 2001):
        assert min(spherical_tv([mu], [m]) for m in means) <= 0.25
    single = gaussian_mean_cover(3, 0.0, 0.1)
    assert len(single) == 1 and np.all(single.elements[0].mean == 0)


def test_gaussian_mean_cover_ball_d2():
    cover = gaussian_mean_cover(2, 1.0, 0.5)
    means = np.stack([e.mean for e in cover.elements])
    rng = np.random.default_rng(2)
    for _ in range(1000):
        v = rng.normal(size=2)
        mu = v / np.linalg.norm(v) * math.sqrt(rng.random())
        assert min(spherical_tv(mu, m) for m in means) <= 0.5


# --- gaussian covariance -------------------------------------------------------


def test_cov_cover_kappa_one_reduces_to_mean_cover():
    a = gaussian_cov_cover(1, 1.0, 1.0, 0.25)
    b = gaussian_mean_cover(1, 1.0, 0.125)
    assert len(a) == len(b)
    assert all(np.allclose(e.cov, 1.0) for e in a.elements)


def test_cov_cover_variance_sweep_quadrature():
    cover = gaussian_cov_cover(1, 0.0, 2.0, 0.2)
    sds = np.array([math.sqrt(e.cov[0, 0]) for e in cover.elements])
    means = np.array([e.mean[0] for e in cover.elements])
    for var in np.linspace(1, 2, 101):
        sd = math.sqrt(var)
        tvs = univariate_gaussian_tv(0.0, sd, means, sds)
        j = int(np.argmin(tvs))
        assert tvs[j] <= 0.2
        assert quad_tv_1d(0, sd, means[j], sds[j]) == pytest.approx(tvs[j], abs=1e-7)


def test_cov_cover_eigen_range():
    cover = gaussian_cov_cover(2, 0.0, 2.0, 0.4)
    assert len(cover) > 1
    for e in cover.elements:
        assert np.allclose(e.cov, e.cov.T)
        ev = np.linalg.eigvalsh(e.cov)
        assert ev[0] >= 1 - 1e-9 and ev[-1] <= 2 + 1e-9


# --- mixtures --------------------------------------------------------------------


def test_mixture_cover_examples():
    base = ExplicitCover(0.1, [Categorical([0.2, 0.8]), Categorical([0.7, 0.3])])
    assert len(mixture_cover(base, 1, 0.25)) == 2
    two = mixture_cover(base, 2, 0.25)
    assert two.diagnostics["weight_grid"] == 5 and len(two) <= 2**2 * 5


def test_mixture_cover_bernoulli_soundness():
    a_base, a_mix = 0.1, 0.1
    base = product_cover(2, 1, a_base)
    cover = mixture_cover(base, 2, a_mix)
    pmfs = np.stack([e.weights @ np.stack([c.pmf for c in e.components]) for e in cover.elements])
    sample_elem = cover.elements[7]
    assert tv_distance(sample_elem, Categorical(pmfs[7])) == pytest.approx(0, abs=1e-12)
    rng = np.random.default_rng(3)
    for _ in range(200):
        p, q = rng.random(2)
        w = rng.random()
        target = np.array([w * (1 - p) + (1 - w) * (1 - q), w * p + (1 - w) * q])
        assert 0.5 * np.abs(pmfs - target).sum(axis=1).min() <= 2 * a_mix + a_base


# --- packing -----------------------------------------------------------------------


def test_packing_examples():
    same = [Categorical([0.3, 0.7]) for _ in range(5)]
    assert len(greedy_packing(same, 0.1)) == 1
    two = [Categorical([0.9, 0.1]), Categorical([0.1, 0.9])]
    assert len(greedy_packing(two, 0.5)) == 2


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(0.05, 0.5))
def test_greedy_packing_is_packing_and_cover(seed, alpha):
    rng = np.random.default_rng(seed)
    cands = [Categorical(rng.dirichlet(np.ones(4))) for _ in range(30)]
    pk = greedy_packing(cands, alpha)
    assert is_packing(pk, alpha)
    assert is_cover(pk, cands, alpha)


def test_packing_lower_bound_examples():
    assert packing_lower_bound_n(1, 1.0) == 0
    assert packing_lower_bound_n(1000, 1.0) == 7
    a = packing_lower_bound_n(10**6, 1.0)
    b = packing_lower_bound_n(10**6, 2.0)
    assert b == math.ceil(math.log(0.9e6) / 2) and abs(2 * b - a) <= 1
    with pytest.raises(InvalidParameterError):
        packing_lower_bound_n(0, 1.0)


# --- implicit ------------------------------------------------------------------------


def test_lattice_cover_examples():
    cover = LatticeCover(2, 0.03)
    pt = cover.element([3, -4])
    assert cover.nearest(SphericalGaussian(pt.mean)).id == pt.id
    rng = np.random.default_rng(4)
    c1 = LatticeCover(1, 0.03)
    for _ in range(1000):
        mu = rng.uniform(-100, 100, 1)
        assert spherical_tv(mu, c1.nearest(SphericalGaussian(mu)).mean) <= 0.03
    with pytest.raises(InvalidParameterError):
        LatticeCover(1, 0.05)


def test_lattice_ball_is_complete():
    cover = LatticeCover(2, 0.03)
    rng = np.random.default_rng(5)
    mu = rng.uniform(-5, 5, 2)
    ball = {tuple(m) for m in cover.ball_indices(mu, 0.21)}
    base = cover.nearest_index(mu)
    for dx in range(-30, 31):
        for dy in range(-30, 31):
            m = base + np.array([dx, dy])
            inside = spherical_tv(mu, m * cover.spacing) <= 0.21
            assert inside == (tuple(m) in ball)
    assert 0 < len(ball) <= cover.local_bound


def test_univariate_cover_examples():
    cover = UnivariateGaussianCover(0.05)
    e = cover.element(3, -7)
    assert cover.nearest(UnivariateGaussian(e.mean, e.variance)).id == e.id
    rng = np.random.default_rng(6)
    for _ in range(200):
        mu = rng.uniform(-1e3, 1e3)
        sd = math.exp(rng.uniform(math.log(1e-2), math.log(1e2)))
        near = cover.nearest(UnivariateGaussian(mu, sd * sd))
        assert quad_tv_1d(mu, sd, near.mean, near.std) <= 0.05 + 1e-7
    with pytest.raises(InvalidParameterError):
        UnivariateGaussianCover(0.2)


def test_univariate_ball_is_complete():
    cover = UnivariateGaussianCover(0.1)
    mu, sd = 1.3, 0.7
    ball = {tuple(x) for x in cover.ball_indices(mu, sd, 0.3)}
    n0, m0 = cover.nearest_index(mu, sd)
    for n in range(n0 - 40, n0 + 41):
        for m in range(m0 - 400, m0 + 401):
            e = cover.element(n, m)
            inside = tv_distance(UnivariateGaussian(mu, sd * sd), e) <= 0.3
            assert inside == ((n, m) in ball), (n, m)


def test_explicit_cover_json_round_trip():
    cover = product_cover(2, 1, 0.4)
    back = ExplicitCover.from_dict(cover.to_dict())
    assert [e.id for e in back.elements] == [e.id for e in cover.elements]
    with pytest.raises(InvalidParameterError):
        ExplicitCover(0.1, [])
