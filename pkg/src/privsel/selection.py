"""End-to-end private hypothesis selection.

* :func:`phs` - exponential mechanism over the minimum-Gamma score.
* :func:`naive_laplace_select` - every pairwise contest on Laplace-noised
  empirical masses, privacy split by basic composition.
* :func:`dl_tournament_private` - noisy Devroye-Lugosi tournament (most wins).
* :func:`semi_agnostic_select` - doubling schedule of PHS runs followed by a
  private tournament among their outputs.
* :func:`select_gapmax` - advanced score plus GAP-MAX, for explicit or
  locally small implicit covers.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .distributions import Dataset, EstimatorConfig, Hypothesis
from .errors import InvalidParameterError
from .mechanisms import GapMaxParams, PrivacyBudget, exponential_mechanism, exponential_mechanism_probs, gap_max
from .scheffe import PairTable, advanced_scores_from_counts, scores_from_counts


@dataclass(frozen=True)
class SelectionParams:
    alpha: float
    zeta: float = 1.0
    beta: float = 0.1
    budget: PrivacyBudget = PrivacyBudget(1.0)

    def __post_init__(self):
        if not 0 < self.alpha < 1:
            raise InvalidParameterError("alpha must lie in (0, 1)")
        if not self.zeta > 0:
            raise InvalidParameterError("zeta must be positive")
        if not 0 < self.beta < 1:
            raise InvalidParameterError("beta must lie in (0, 1)")

    @property
    def epsilon(self) -> float:
        return self.budget.epsilon


@dataclass
class SelectionReport:
    chosen: str
    index: int
    score_of_chosen: float
    n_used: int
    budget_spent: PrivacyBudget
    diagnostics: dict = field(default_factory=dict)


def _ids(hyps: Sequence[Hypothesis]) -> list[str]:
    return [h.id or f"h{i}" for i, h in enumerate(hyps)]


def required_n_phs(m: int, params: SelectionParams) -> int:
    """Sample size sufficient for PHS to be within ``(3 + zeta) alpha``.

    ``ceil(8 ln(4m/beta) / (zeta alpha)^2 + 8 ln(2m/beta) / (zeta alpha eps))``;
    an infinite epsilon leaves only the first term.
    """
    if m < 1:
        raise InvalidParameterError("m must be >= 1")
    a, z, b, eps = params.alpha, params.zeta, params.beta, params.epsilon
    n = 8 * math.log(4 * m / b) / (z * z * a * a)
    if math.isfinite(eps):
        n += 8 * math.log(2 * m / b) / (z * a * eps)
    return math.ceil(n)


def phs_scores(hyps: Sequence[Hypothesis], d: Dataset, params: SelectionParams,
               cfg: EstimatorConfig = EstimatorConfig(),
               table: PairTable | None = None) -> np.ndarray:
    table = table or PairTable.build(hyps, cfg)
    return scores_from_counts(table.counts(d), table, d.n, params.alpha, params.zeta)


def phs(hyps: Sequence[Hypothesis], d: Dataset, params: SelectionParams,
        cfg: EstimatorConfig = EstimatorConfig(), rng: np.random.Generator | None = None,
        table: PairTable | None = None, counts: np.ndarray | None = None) -> SelectionReport:
    """Pure ``epsilon``-DP selection via the exponential mechanism.

    ``table`` and ``counts`` may be passed in to reuse work across calls on
    the same hypotheses and dataset; neither changes the output law.
    """
    if not hyps:
        raise InvalidParameterError("need at least one hypothesis")
    rng = rng if rng is not None else np.random.default_rng()
    table = table or PairTable.build(hyps, cfg)
    counts = table.counts(d) if counts is None else counts
    scores = scores_from_counts(counts, table, d.n, params.alpha, params.zeta)
    idx = exponential_mechanism(scores, 1.0, params.epsilon, rng)
    return SelectionReport(
        chosen=_ids(hyps)[idx], index=idx, score_of_chosen=float(scores[idx]), n_used=d.n,
        budget_spent=PrivacyBudget(params.epsilon),
        diagnostics={"scores": scores.tolist()},
    )


def phs_output_distribution(table: PairTable, counts, n: int, alpha, zeta,
                            epsilon: float) -> np.ndarray:
    """Exact output law of PHS for given counts (used for DP audits)."""
    scores = scores_from_counts(counts, table, n, alpha, zeta)
    return exponential_mechanism_probs(np.asarray(scores, dtype=float), 1.0, epsilon)


def _noisy_pairs(m: int, n: int, epsilon: float, rng) -> tuple[np.ndarray, float]:
    pairs = m * (m - 1) // 2
    scale = pairs / (epsilon * n)
    return rng.laplace(0.0, scale, size=pairs), scale


def naive_laplace_select(hyps: Sequence[Hypothesis], d: Dataset, params: SelectionParams,
                         cfg: EstimatorConfig = EstimatorConfig(),
                         rng: np.random.Generator | None = None,
                         table: PairTable | None = None) -> SelectionReport:
    """Run every pairwise contest on a Laplace-noised empirical mass.

    Each of the ``C(m, 2)`` contests gets ``epsilon / C(m, 2)``. Returns the
    lowest-index hypothesis that loses nothing, else the one with fewest
    losses (flagged as ``fallback`` in the diagnostics).
    """
    m = len(hyps)
    if m < 2:
        raise InvalidParameterError("naive tournament needs at least two hypotheses")
    rng = rng if rng is not None else np.random.default_rng()
    table = table or PairTable.build(hyps, cfg)
    counts = table.counts(d)
    noise, scale = _noisy_pairs(m, d.n, params.epsilon, rng)
    a, z = params.alpha, params.zeta
    losses = np.zeros(m, dtype=np.int64)
    ju, ku = np.triu_indices(m, 1)
    p1, p2 = table.p1[ju, ku], table.p2[ju, ku]
    tau = counts[ju, ku] / d.n + noise
    decided = p1 - p2 > (2 + z) * a
    first = decided & (tau > p1 - (1 + z / 2) * a)
    second = decided & ~first & (tau < p2 + (1 + z / 2) * a)
    np.add.at(losses, ku[first], 1)
    np.add.at(losses, ju[second], 1)
    undefeated = np.flatnonzero(losses == 0)
    fallback = undefeated.size == 0
    idx = int(np.argmin(losses)) if fallback else int(undefeated[0])
    return SelectionReport(
        chosen=_ids(hyps)[idx], index=idx, score_of_chosen=float(-losses[idx]), n_used=d.n,
        budget_spent=PrivacyBudget(params.epsilon),
        diagnostics={"losses": losses.tolist(), "fallback": fallback, "laplace_scale": scale,
                     "contest_epsilon": params.epsilon / len(ju)},
    )


def dl_tournament_private(hyps: Sequence[Hypothesis], d: Dataset, epsilon: float,
                          rng: np.random.Generator | None = None,
                          cfg: EstimatorConfig = EstimatorConfig(),
                          table: PairTable | None = None,
                          diagnostics: dict | None = None) -> int:
    """Noisy Scheffé tournament; returns the index with the most wins.

    For each pair ``j < k`` one noisy mass ``c = P_hat(W_jk) + Lap(C(m,2)/(eps n))``
    is drawn; ``H_j`` wins iff ``|H_j(W) - c| < |H_k(W) - c|``, otherwise ``H_k``.
    """
    m = len(hyps)
    if m < 1:
        raise InvalidParameterError("need at least one hypothesis")
    if m == 1:
        return 0
    rng = rng if rng is not None else np.random.default_rng()
    table = table or PairTable.build(hyps, cfg)
    counts = table.counts(d)
    noise, scale = _noisy_pairs(m, d.n, epsilon, rng)
    ju, ku = np.triu_indices(m, 1)
    c = counts[ju, ku] / d.n + noise
    first_wins = np.abs(table.p1[ju, ku] - c) < np.abs(table.p2[ju, ku] - c)
    wins = np.zeros(m, dtype=np.int64)
    np.add.at(wins, ju[first_wins], 1)
    np.add.at(wins, ku[~first_wins], 1)
    if diagnostics is not None:
        diagnostics.update(wins=wins.tolist(), laplace_scale=scale, noisy_masses=c.tolist())
    return int(np.argmax(wins))


def semi_agnostic_schedule(alpha: float, epsilon: float) -> list[tuple[float, float]]:
    """``(alpha_t, epsilon_t)`` for ``t = 1..T`` with ``T = ceil(log2(1/alpha)) + 1``."""
    T = math.ceil(math.log2(1 / alpha) - 1e-12) + 1
    return [(2 ** (t - 1) * alpha / 126, 2.0 ** -(t + 1) * epsilon) for t in range(1, T + 1)]


def semi_agnostic_select(hyps: Sequence[Hypothesis], d: Dataset, alpha: float, beta: float,
                         epsilon: float, cfg: EstimatorConfig = EstimatorConfig(),
                         rng: np.random.Generator | None = None, zeta: float = 1.0,
                         table: PairTable | None = None) -> SelectionReport:
    """Semi-agnostic selection: within ``18 (3 + zeta) OPT + alpha`` of ``P``.

    All stages reuse the same dataset and the same pair table.
    """
    if not hyps:
        raise InvalidParameterError("need at least one hypothesis")
    rng = rng if rng is not None else np.random.default_rng()
    table = table or PairTable.build(hyps, cfg)
    counts = table.counts(d)
    schedule = semi_agnostic_schedule(alpha, epsilon)
    stage_idx = []
    for a_t, e_t in schedule:
        params = SelectionParams(alpha=a_t, zeta=zeta, beta=beta, budget=PrivacyBudget(e_t))
        stage_idx.append(phs(hyps, d, params, cfg, rng, table=table, counts=counts).index)
    tour: dict = {}
    pick = dl_tournament_private([hyps[i] for i in stage_idx], d, epsilon / 2, rng, cfg,
                                 table=table.subset(stage_idx), diagnostics=tour)
    idx = stage_idx[pick]
    spent = sum(e for _, e in schedule) + epsilon / 2
    ids = _ids(hyps)
    return SelectionReport(
        chosen=ids[idx], index=idx, score_of_chosen=float(tour["wins"][pick]), n_used=d.n,
        budget_spent=PrivacyBudget(spent),
        diagnostics={
            "schedule": schedule,
            "stage_candidates": [ids[i] for i in stage_idx],
            "stage_indices": stage_idx,
            "tournament_alpha": alpha,
            # the utility proof uses alpha/2 inside the final tournament
            "tournament_internal_alpha": alpha / 2,
            "budget_decomposition": [e for _, e in schedule] + [epsilon / 2],
            "tournament": tour,
        },
    )


def select_gapmax(cover, d: Dataset, alpha: float, beta: float, budget: PrivacyBudget,
                  k: int, cfg: EstimatorConfig = EstimatorConfig(),
                  rng: np.random.Generator | None = None,
                  variant: str = "approximate-dp") -> SelectionReport:
    """Advanced score over the cover's candidates, selected with GAP-MAX.

    Explicit covers score every element. Implicit covers score the local
    ball around the element nearest to a data-driven anchor (see
    :meth:`privsel.covers.ImplicitCover.candidates_for`); the anchor itself
    is not privatized.
    """
    rng = rng if rng is not None else np.random.default_rng()
    cands = cover.candidates_for(d, alpha)
    table = PairTable.build(cands, cfg)
    scores = advanced_scores_from_counts(table.counts(d), table, d.n, alpha)
    params = GapMaxParams(k=k, beta=beta, budget=budget, variant=variant)
    diag: dict = {}
    idx = gap_max(scores, params, rng, diagnostics=diag)
    diag.update(num_candidates=len(cands), scores=np.asarray(scores, float).tolist())
    h = cands[idx]
    return SelectionReport(
        chosen=h.id or f"c{idx}", index=idx, score_of_chosen=float(scores[idx]), n_used=d.n,
        budget_spent=budget, diagnostics={**diag, "hypothesis": h},
    )
