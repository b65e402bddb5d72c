import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from privsel.distributions import (
    Categorical,
    Dataset,
    SphericalGaussian,
    UnivariateGaussian,
    empirical_mass,
    exact_scheffe_mass,
    exact_tv_distance,
    sample,
)
from privsel.errors import InvalidParameterError
from privsel.scheffe import (
    ContestOutcome,
    ContestParams,
    PairTable,
    ScheffeStats,
    advanced_score,
    advanced_scores,
    basic_scores,
    gamma,
    pairwise_contest,
    score,
)

P = ContestParams(alpha=0.1, zeta=1.0)


def bern(p, id=""):
    return Categorical([1 - p, p], id=id)


def test_contest_examples():
    assert pairwise_contest(ScheffeStats(0.5, 0.3, 0.4, 10), P) is ContestOutcome.DRAW
    assert pairwise_contest(ScheffeStats(0.9, 0.1, 0.85, 10), P) is ContestOutcome.WINNER_FIRST
    assert pairwise_contest(ScheffeStats(0.9, 0.1, 0.20, 10), P) is ContestOutcome.WINNER_SECOND
    assert pairwise_contest(ScheffeStats(0.9, 0.1, 0.50, 10), P) is ContestOutcome.DRAW


def test_gamma_examples():
    assert gamma(ScheffeStats(0.5, 0.3, 0.4, 10), P) == 10
    assert gamma(ScheffeStats(0.9, 0.1, 0.8, 10), P) == pytest.approx(5.5)
    assert gamma(ScheffeStats(0.9, 0.1, 0.2, 10), P) == 0


def test_stats_validation():
    with pytest.raises(InvalidParameterError):
        ScheffeStats(0.2, 0.3, 0.1, 5)
    with pytest.raises(InvalidParameterError):
        ScheffeStats(0.5, 0.3, 1.1, 5)
    with pytest.raises(InvalidParameterError):
        ContestParams(alpha=1.0)
    with pytest.raises(InvalidParameterError):
        ContestParams(alpha=0.1, zeta=0)


def _contest_oracle(p1, p2, tau, a, z):
    if p1 - p2 <= (2 + z) * a:
        return "draw"
    if tau > p1 - (1 + z / 2) * a:
        return "first"
    if tau < p2 + (1 + z / 2) * a:
        return "second"
    return "draw"


def test_contest_and_gamma_agree_with_transcription():
    rng = np.random.default_rng(0)
    names = {ContestOutcome.DRAW: "draw", ContestOutcome.WINNER_FIRST: "first",
             ContestOutcome.WINNER_SECOND: "second"}
    for _ in range(10_000):
        p1, p2 = sorted(rng.random(2), reverse=True)
        tau = rng.random()
        n = int(rng.integers(1, 100))
        a, z = rng.uniform(0.01, 0.3), rng.uniform(0.1, 3)
        stt, par = ScheffeStats(p1, p2, tau, n), ContestParams(a, z)
        assert names[pairwise_contest(stt, par)] == _contest_oracle(p1, p2, tau, a, z)
        g = gamma(stt, par)
        assert 0 <= g <= n
        if p1 - p2 > (2 + z) * a:
            assert g == pytest.approx(n * max(0.0, tau - p2 - (1 + z / 2) * a))
            # Gamma = 0 means H' is at least not behind on the first-wins branch
            if g == 0:
                assert tau <= p2 + (1 + z / 2) * a + (p1 - p2 - (2 + z) * a)
        else:
            assert g == n


def test_score_examples():
    hyps = [bern(0.9), bern(0.1)]
    d = Dataset([1] * 8 + [0] * 2, hyps[0].domain)
    assert score(0, hyps, d, P) == pytest.approx(5.5)
    assert score(1, hyps, d, P) == 0
    assert score(0, [bern(0.3)], d, P) == 10
    same = [bern(0.4)] * 3
    assert basic_scores(same, d, P).tolist() == [10, 10, 10]


def test_advanced_score_examples():
    hyps = [bern(0.9), bern(0.1)]
    d = Dataset([1] * 2 + [0] * 8, hyps[0].domain)
    assert advanced_score(hyps[0], hyps[1:], d, 0.05) == 0
    assert advanced_score(hyps[0], [], d, 0.05) == 10
    near = [bern(0.5), bern(0.55), bern(0.6)]
    assert advanced_scores(near, d, 0.1).tolist() == [10, 10, 10]


def test_tv_tie_at_six_alpha_counts_as_close():
    a, b = bern(0.5), bern(0.8)  # TV 0.3 = 6 * 0.05
    d = Dataset([0] * 10, a.domain)
    assert advanced_score(a, [b], d, 0.05) == 10


@settings(max_examples=50, deadline=None)
@given(st.integers(2, 6), st.integers(1, 40), st.integers(0, 2**32 - 1))
def test_scores_bounded(m, n, seed):
    rng = np.random.default_rng(seed)
    hyps = [Categorical(rng.dirichlet(np.ones(4))) for _ in range(m)]
    d = sample(hyps[0], n, rng)
    s = basic_scores(hyps, d, P)
    a = advanced_scores(hyps, d, 0.05)
    assert np.all((0 <= s) & (s <= n)) and np.all((0 <= a) & (a <= n))


def test_table_matches_pairwise_functions():
    rng = np.random.default_rng(1)
    for hyps in (
        [Categorical(rng.dirichlet(np.ones(5))) for _ in range(4)],
        [UnivariateGaussian(rng.normal(), rng.uniform(0.3, 3)) for _ in range(4)],
        [SphericalGaussian(rng.normal(size=2)) for _ in range(4)],
    ):
        table = PairTable.build(hyps)
        d = sample(hyps[0], 300, rng)
        counts = table.counts(d)
        for j in range(4):
            for k in range(4):
                if j == k:
                    continue
                assert table.p1[j, k] == pytest.approx(exact_scheffe_mass(hyps[j], hyps[k], hyps[j]))
                assert table.p2[j, k] == pytest.approx(exact_scheffe_mass(hyps[j], hyps[k], hyps[k]))
                assert table.tv[j, k] == pytest.approx(exact_tv_distance(hyps[j], hyps[k]))
                assert counts[j, k] == round(empirical_mass(hyps[j], hyps[k], d) * d.n)


def test_subset_preserves_entries():
    rng = np.random.default_rng(2)
    hyps = [Categorical(rng.dirichlet(np.ones(3))) for _ in range(5)]
    table = PairTable.build(hyps)
    sub = table.subset([3, 1])
    assert sub.p1[0, 1] == table.p1[3, 1]
    d = sample(hyps[0], 50, rng)
    assert np.array_equal(sub.counts(d), table.counts(d)[np.ix_([3, 1], [3, 1])])
