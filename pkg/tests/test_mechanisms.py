import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from privsel.errors import EmptyInputError, InvalidParameterError
from privsel.mechanisms import (
    Gaussian,
    GapMaxParams,
    Laplace,
    PrivacyBudget,
    TruncatedLaplace,
    assign_buckets,
    exponential_mechanism,
    exponential_mechanism_probs,
    gap_max,
    sample_noise,
    top_two,
)


def test_budget_validation_and_order():
    with pytest.raises(InvalidParameterError):
        PrivacyBudget(0)
    with pytest.raises(InvalidParameterError):
        PrivacyBudget(1, 1.0)
    assert PrivacyBudget(0.5, 0) <= PrivacyBudget(1, 1e-6)
    assert not PrivacyBudget(1, 1e-5) <= PrivacyBudget(1, 1e-6)


def test_exponential_mechanism_examples():
    p = exponential_mechanism_probs([0.0, 2.0], 1.0, 1.0)
    assert p[1] / p[0] == pytest.approx(math.e)
    assert exponential_mechanism_probs([3.0], 1.0, 1.0).tolist() == [1.0]
    with pytest.raises(EmptyInputError):
        exponential_mechanism_probs([], 1.0, 1.0)


def test_exponential_mechanism_uniform_chi2():
    rng = np.random.default_rng(0)
    draws = [exponential_mechanism([5.0] * 6, 1.0, 1.0, rng) for _ in range(10_000)]
    counts = np.bincount(draws, minlength=6)
    assert stats.chisquare(counts).pvalue > 1e-3


@settings(max_examples=200, deadline=None)
@given(st.lists(st.floats(-50, 50), min_size=1, max_size=6), st.floats(0.01, 5),
       st.integers(0, 2**32 - 1))
def test_exponential_mechanism_ratio_bound(scores, eps, seed):
    rng = np.random.default_rng(seed)
    s = np.array(scores)
    t = s + rng.uniform(-1, 1, size=len(s))
    p, q = (exponential_mechanism_probs(x, 1.0, eps) for x in (s, t))
    assert np.all(p <= math.exp(eps) * q * (1 + 1e-9))
    assert np.all(q <= math.exp(eps) * p * (1 + 1e-9))


def test_exponential_mechanism_utility():
    rng = np.random.default_rng(1)
    eps, beta = 1.0, 0.1
    scores = rng.uniform(0, 100, size=50)
    thresh = scores.max() - 2 * math.log(len(scores) / beta) / eps
    hits = sum(scores[exponential_mechanism(scores, 1.0, eps, rng)] >= thresh for _ in range(2000))
    assert hits / 2000 >= 1 - beta


def test_noise_samplers():
    rng = np.random.default_rng(2)
    t = TruncatedLaplace(4.0, 10.0)
    x = sample_noise(t, rng, 100_000)
    assert np.all(np.abs(x) <= 10.0)
    b = 2.0
    lap = sample_noise(Laplace(b), rng, 100_000)
    assert abs(lap.mean()) <= 3 * b * math.sqrt(2) / math.sqrt(1e5)
    assert lap.var() == pytest.approx(2 * b * b, rel=0.03)
    g = sample_noise(Gaussian(1.5), rng, 100_000)
    assert abs(g.mean()) <= 3 * 1.5 / math.sqrt(1e5)
    assert g.std() == pytest.approx(1.5, rel=0.01)


def test_truncated_laplace_shape():
    rng = np.random.default_rng(3)
    spec = TruncatedLaplace(1.0, 2.0)
    x = np.abs(sample_noise(spec, rng, 200_000))
    # |Z| is an exponential(1) conditioned on [0, 2]
    cdf = lambda v: (1 - np.exp(-v)) / (1 - math.exp(-2))  # noqa: E731
    assert stats.kstest(x, cdf).pvalue > 1e-3


def test_gapmax_params():
    assert GapMaxParams(k=1, beta=0.1, budget=PrivacyBudget(1)).buckets == 10
    assert GapMaxParams(k=3, beta=0.1, budget=PrivacyBudget(1)).buckets == 90
    eps = 2.0
    p = GapMaxParams(1, 0.1, PrivacyBudget(eps, 1e-6))
    assert p.noise() == TruncatedLaplace(4 / eps, 4 * (1 + math.log(1e6)) / eps)
    assert GapMaxParams(1, 0.1, PrivacyBudget(eps)).noise() == Laplace(4 / eps)
    z = GapMaxParams(1, 0.1, PrivacyBudget(eps), variant="concentrated-dp").noise()
    assert z.std**2 == pytest.approx(3 / eps**2)
    with pytest.raises(InvalidParameterError):
        GapMaxParams(1, 0.1, PrivacyBudget(1), variant="renyi")


def test_top_two_ties_lowest_index():
    assert top_two(np.array([3.0, 5.0, 5.0, 1.0])) == (1, 2)
    assert top_two(np.array([7.0])) == (0, None)


def test_gap_max_examples():
    rng = np.random.default_rng(4)
    params = GapMaxParams(1, 0.1, PrivacyBudget(1.0, 1e-6))
    assert all(gap_max([3.0], params, rng) == 0 for _ in range(20))
    with pytest.raises(EmptyInputError):
        gap_max([], params, rng)
    scores = np.zeros(50)
    scores[17] = 100
    hits = sum(gap_max(scores, params, rng) == 17 for _ in range(500))
    assert hits / 500 >= 0.9


def _gap_max_oracle(scores, params, rng):
    """Step-by-step transcription with plain loops."""
    m = params.buckets
    g = [int(rng.integers(m)) for _ in scores]
    sup = [max([s for s, b in zip(scores, g) if b == j], default=-math.inf) for j in range(m)]
    w = [0.0 if v == -math.inf else math.exp(params.budget.epsilon / 4 * v / 2) for v in sup]
    u = rng.random() * sum(w)
    acc, bucket = 0.0, m - 1
    for j, wj in enumerate(w):
        acc += wj
        if u < acc:
            bucket = j
            break
    members = [i for i, b in enumerate(g) if b == bucket]
    ordered = sorted(members, key=lambda i: (-scores[i], i))
    second = scores[ordered[1]] if len(ordered) > 1 else scores[ordered[0]]
    noise = params.noise()
    best, best_val = None, -math.inf
    for i in members:
        val = 0.5 * max(0.0, scores[i] - second) + float(sample_noise(noise, rng))
        if val > best_val:
            best, best_val = i, val
    return best


@pytest.mark.parametrize("variant,delta", [("approximate-dp", 1e-3), ("concentrated-dp", 0.0)])
def test_gap_max_matches_oracle_law(variant, delta):
    scores = [10.0, 9.0, 3.0, 8.5, 0.0, 2.0, 9.5, 1.0]
    params = GapMaxParams(k=2, beta=0.5, budget=PrivacyBudget(1.0, delta), variant=variant)
    runs = 20_000
    a = np.bincount([gap_max(scores, params, np.random.default_rng(s)) for s in range(runs)],
                    minlength=8)
    b = np.bincount([_gap_max_oracle(scores, params, np.random.default_rng(10**6 + s))
                     for s in range(runs)], minlength=8)
    keep = (a + b) > 0
    assert stats.chi2_contingency(np.stack([a[keep], b[keep]])).pvalue > 1e-3


def test_bucket_collision_rate():
    k, beta = 3, 0.1
    params = GapMaxParams(k, beta, PrivacyBudget(1.0))
    rng = np.random.default_rng(5)
    collide = 0
    for _ in range(5000):
        g = assign_buckets(k, params.buckets, rng)
        collide += len(set(g.tolist())) < k
    assert collide / 5000 <= beta / 2 + 0.01
