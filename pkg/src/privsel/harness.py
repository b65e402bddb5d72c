"""Seeded Monte Carlo experiments.

A run is fully determined by its JSON config. Trial ``i`` draws all of its
randomness from ``SeedSequence([seed, i])``, so results do not depend on
the number of worker threads or their scheduling.

Config schema (version 1)::

    {"schema": 1, "scenario": "planted-phs", "trials": 200, "seed": 0,
     "selection": {"alpha": 0.1, "zeta": 1.0, "beta": 0.1,
                   "epsilon": 1.0, "delta": 0.0},
     "family": {...scenario-specific...}, "output": "records.csv"}

CSV columns, in order: ``trial, seed, method, chosen, dtv, success,
epsilon_spent, delta_spent`` (plus ``wall_ms`` when timings are requested;
timings are excluded by default so output is byte-reproducible).
"""
from __future__ import annotations

import concurrent.futures
import csv
import io
import json
import math
import os
import time
from dataclasses import asdict, dataclass, field
from typing import Callable

import numpy as np
from scipy import stats

from .covers import (
    LatticeCover,
    UnivariateGaussianCover,
    gaussian_mean_cover,
    greedy_packing,
    is_cover,
    is_packing,
    product_cover,
)
from .distributions import (
    Categorical,
    ProductCategorical,
    SphericalGaussian,
    UnivariateGaussian,
    sample,
    spherical_tv,
    tv_distance,
    univariate_gaussian_tv,
)
from .errors import InvalidParameterError
from .mechanisms import PrivacyBudget
from .scheffe import PairTable
from .selection import (
    SelectionParams,
    naive_laplace_select,
    phs,
    required_n_phs,
    select_gapmax,
    semi_agnostic_select,
)

SCHEMA_VERSION = 1
THREADS_ENV = "PRIVSEL_THREADS"
SCENARIOS = ("planted-phs", "misspecified-semi-agnostic", "gapmax-lattice",
             "naive-vs-phs", "cover-audit", "packing-audit")
CSV_COLUMNS = ["trial", "seed", "method", "chosen", "dtv", "success",
               "epsilon_spent", "delta_spent"]


@dataclass
class ExperimentConfig:
    scenario: str
    trials: int = 200
    seed: int = 0
    selection: SelectionParams = field(default_factory=lambda: SelectionParams(alpha=0.1))
    family: dict = field(default_factory=dict)
    output: str | None = None

    def __post_init__(self):
        if self.scenario not in SCENARIOS:
            raise InvalidParameterError(f"unknown scenario {self.scenario!r}")
        if self.trials < 1:
            raise InvalidParameterError("trials must be >= 1")
        if not 0 <= self.seed < 2**64:
            raise InvalidParameterError("seed must be a 64-bit unsigned value")

    @classmethod
    def from_dict(cls, doc: dict) -> ExperimentConfig:
        if not isinstance(doc, dict):
            raise InvalidParameterError("config must be a JSON object")
        if doc.get("schema") != SCHEMA_VERSION:
            raise KeyError("schema")
        if "scenario" not in doc:
            raise KeyError("scenario")
        sel = dict(doc.get("selection", {}))
        budget = PrivacyBudget(float(sel.pop("epsilon", 1.0)), float(sel.pop("delta", 0.0)))
        unknown = set(sel) - {"alpha", "zeta", "beta"}
        if unknown:
            raise KeyError(f"selection.{sorted(unknown)[0]}")
        params = SelectionParams(alpha=float(sel.get("alpha", 0.1)),
                                 zeta=float(sel.get("zeta", 1.0)),
                                 beta=float(sel.get("beta", 0.1)), budget=budget)
        return cls(scenario=doc["scenario"], trials=int(doc.get("trials", 200)),
                   seed=int(doc.get("seed", 0)), selection=params,
                   family=dict(doc.get("family", {})), output=doc.get("output"))


@dataclass
class TrialRecord:
    trial: int
    seed: int
    method: str
    chosen: str
    dtv: float
    success: bool
    epsilon_spent: float
    delta_spent: float = 0.0
    wall_ms: float = 0.0


@dataclass
class ExperimentResult:
    records: list
    summary: dict

    def to_csv(self, timings: bool = False) -> str:
        cols = CSV_COLUMNS + (["wall_ms"] if timings else [])
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(cols)
        for r in self.records:
            row = asdict(r)
            row["dtv"] = repr(float(row["dtv"]))
            row["success"] = int(row["success"])
            row["epsilon_spent"] = repr(float(row["epsilon_spent"]))
            row["delta_spent"] = repr(float(row["delta_spent"]))
            w.writerow([row[c] for c in cols])
        return buf.getvalue()


def trial_seed(master: int, index: int) -> int:
    """Counter-mode sub-seed for trial ``index``."""
    return int(np.random.SeedSequence([master, index]).generate_state(1, np.uint64)[0])


def binomial_ci(successes: int, trials: int, level: float = 0.95) -> tuple[float, float]:
    ci = stats.binomtest(successes, trials).proportion_ci(confidence_level=level, method="exact")
    return float(ci.low), float(ci.high)


def summarize(records: list) -> dict:
    out = {}
    for method in sorted({r.method for r in records}):
        rs = [r for r in records if r.method == method]
        k = sum(bool(r.success) for r in rs)
        lo, hi = binomial_ci(k, len(rs))
        out[method] = {"trials": len(rs), "successes": k, "frequency": k / len(rs),
                       "ci95": [lo, hi], "mean_dtv": float(np.mean([r.dtv for r in rs]))}
    return out


# ---------------------------------------------------------------------------
# instances


def planted_instance(m: int, k: int, alpha: float, rng: np.random.Generator,
                     far: float = 0.5) -> tuple[Categorical, list, int]:
    """Truth ``P`` on ``k`` symbols, one candidate within ``alpha``, the rest >= ``far`` away.

    Returns ``(P, hypotheses, index_of_good)``; the good candidate sits at a
    random position.
    """
    P = rng.dirichlet(np.ones(k))
    Q = rng.dirichlet(np.ones(k))
    good = (1 - alpha) * P + alpha * Q  # TV(P, good) = alpha * TV(P, Q) <= alpha
    hyps = []
    while len(hyps) < m - 1:
        h = rng.dirichlet(np.full(k, 0.3))
        if 0.5 * np.abs(h - P).sum() >= far:
            hyps.append(h)
    pos = int(rng.integers(m))
    hyps.insert(pos, good)
    return (Categorical(P, id="P"),
            [Categorical(h / h.sum(), id=f"h{i}") for i, h in enumerate(hyps)], pos)


def misspecified_instance(m: int, k: int, opt: float, rng: np.random.Generator
                          ) -> tuple[Categorical, list, float]:
    """Truth ``P`` whose closest candidate is at TV exactly ``opt``.

    One candidate sits at ``opt``, a few at intermediate distances, the rest
    far away.
    """
    P = rng.dirichlet(np.ones(k))
    hyps = []

    def at_distance(target):
        Q = rng.dirichlet(np.ones(k))
        t = target / (0.5 * np.abs(P - Q).sum())
        return (1 - t) * P + t * Q

    hyps.append(at_distance(opt))
    for target in np.linspace(2 * opt, 0.4, min(5, m - 1)):
        hyps.append(at_distance(target))
    while len(hyps) < m:
        h = rng.dirichlet(np.full(k, 0.3))
        if 0.5 * np.abs(h - P).sum() >= 0.5:
            hyps.append(h)
    order = rng.permutation(m)
    hyps = [hyps[i] for i in order]
    cands = [Categorical(h / h.sum(), id=f"h{i}") for i, h in enumerate(hyps)]
    best = min(tv_distance(Categorical(P), c) for c in cands)
    return Categorical(P, id="P"), cands, best


def semi_agnostic_sample_size(m: int, alpha: float, beta: float, epsilon: float,
                              constant: float = 8.0) -> int:
    """The semi-agnostic sample-size expression with an explicit constant.

    ``C [(ln(m/beta) + ln ln(1/alpha)) / alpha^2 +
    (ln m + ln^2(1/alpha) (ln(1/beta) + ln ln(1/alpha))) / (alpha eps)]``.
    """
    lla = math.log(math.log(1 / alpha))
    first = (math.log(m / beta) + lla) / alpha**2
    second = (math.log(m) + math.log(1 / alpha) ** 2 * (math.log(1 / beta) + lla)) / (alpha * epsilon)
    return math.ceil(constant * (first + second))


def gapmax_lattice_sample_size(d: int, alpha: float, beta: float, budget: PrivacyBudget,
                               k: int, constant: float = 8.0) -> int:
    """Sample size for GAP-MAX over the lattice cover with an explicit constant.

    VC dimension of spherical-Gaussian Scheffé sets is ``d + 1``.
    """
    vc = d + 1
    private = math.log(k / beta) + (math.log(1 / budget.delta) if budget.delta > 0 else 0.0)
    return math.ceil(constant * ((vc + math.log(1 / beta)) / alpha**2
                                 + private / (alpha * budget.epsilon)))


# ---------------------------------------------------------------------------
# scenarios. Each returns (prepare(config) -> state, trial(state, rng) -> [records])


def _prep_planted(cfg: ExperimentConfig):
    fam = cfg.family
    m, k = int(fam.get("m", 200)), int(fam.get("domain", 100))
    rng = np.random.default_rng(trial_seed(cfg.seed, 2**32))
    P, hyps, good = planted_instance(m, k, cfg.selection.alpha, rng)
    n = int(fam.get("n", required_n_phs(m, cfg.selection)))
    table = PairTable.build(hyps)
    tvs = np.array([tv_distance(P, h) for h in hyps])
    return {"P": P, "hyps": hyps, "n": n, "table": table, "tvs": tvs}


def _planted_trial(state, cfg, rng, methods=("phs",)):
    sel = cfg.selection
    d = sample(state["P"], state["n"], rng)
    counts = state["table"].counts(d)
    out = []
    for method in methods:
        if method == "phs":
            rep = phs(state["hyps"], d, sel, rng=rng, table=state["table"], counts=counts)
        else:
            rep = naive_laplace_select(state["hyps"], d, sel, rng=rng, table=state["table"])
        dtv = float(state["tvs"][rep.index])
        out.append((method, rep.chosen, dtv, dtv <= (3 + sel.zeta) * sel.alpha + 1e-12,
                    rep.budget_spent))
    return out


def _prep_naive(cfg):
    state = _prep_planted(ExperimentConfig("planted-phs", cfg.trials, cfg.seed, cfg.selection,
                                           {**{"m": 50}, **cfg.family}))
    if "n" not in cfg.family:
        state["n"] = 1000
    return state


def _prep_misspecified(cfg):
    fam = cfg.family
    m, k, opt = int(fam.get("m", 50)), int(fam.get("domain", 100)), float(fam.get("opt", 0.05))
    rng = np.random.default_rng(trial_seed(cfg.seed, 2**32))
    P, hyps, best = misspecified_instance(m, k, opt, rng)
    sel = cfg.selection
    n = int(fam.get("n", semi_agnostic_sample_size(m, sel.alpha, sel.beta, sel.epsilon)))
    return {"P": P, "hyps": hyps, "n": n, "opt": best, "table": PairTable.build(hyps),
            "tvs": np.array([tv_distance(P, h) for h in hyps])}


def _misspecified_trial(state, cfg, rng):
    sel = cfg.selection
    d = sample(state["P"], state["n"], rng)
    rep = semi_agnostic_select(state["hyps"], d, sel.alpha, sel.beta, sel.epsilon, rng=rng,
                               zeta=sel.zeta, table=state["table"])
    dtv = float(state["tvs"][rep.index])
    bound = 18 * (3 + sel.zeta) * state["opt"] + sel.alpha
    return [("semi-agnostic", rep.chosen, dtv, dtv <= bound + 1e-12, rep.budget_spent)]


def _prep_gapmax(cfg):
    fam, sel = cfg.family, cfg.selection
    d = int(fam.get("d", 2))
    k = int(fam.get("k", 100))
    cover = LatticeCover(d, sel.alpha)
    n = int(fam.get("n", gapmax_lattice_sample_size(d, sel.alpha, sel.beta, sel.budget, k)))
    return {"cover": cover, "d": d, "k": k, "n": n, "R": float(fam.get("R", 100.0))}


def _gapmax_trial(state, cfg, rng):
    sel = cfg.selection
    mu = rng.uniform(-state["R"], state["R"], state["d"])
    P = SphericalGaussian(mu)
    data = sample(P, state["n"], rng)
    rep = select_gapmax(state["cover"], data, sel.alpha, sel.beta, sel.budget, state["k"],
                        rng=rng)
    dtv = spherical_tv(mu, rep.diagnostics["hypothesis"].mean)
    return [("gapmax", rep.chosen, dtv, dtv <= 7 * sel.alpha + 1e-12, rep.budget_spent)]


def _prep_cover(cfg):
    fam, a = cfg.family, cfg.selection.alpha
    kind = fam.get("kind", "bernoulli-grid")
    if kind == "bernoulli-grid":
        return {"kind": kind, "cover": product_cover(2, 1, a)}
    if kind == "product":
        return {"kind": kind, "cover": product_cover(int(fam.get("k", 2)), int(fam.get("d", 1)), a)}
    if kind == "gaussian-mean":
        return {"kind": kind, "d": int(fam.get("d", 1)), "R": float(fam.get("R", 1.0)),
                "cover": gaussian_mean_cover(int(fam.get("d", 1)), float(fam.get("R", 1.0)), a)}
    if kind == "lattice":
        return {"kind": kind, "cover": LatticeCover(int(fam.get("d", 1)), a)}
    if kind == "univariate":
        return {"kind": kind, "cover": UnivariateGaussianCover(a)}
    raise KeyError("family.kind")


def _cover_trial(state, cfg, rng):
    a, kind, cover = cfg.selection.alpha, state["kind"], state["cover"]
    if kind in ("bernoulli-grid", "product"):
        elems = cover.elements
        k = len(elems[0].pmf) if isinstance(elems[0], Categorical) else len(elems[0].pmfs[0])
        if isinstance(elems[0], Categorical):
            target = Categorical(rng.dirichlet(np.ones(k)))
        else:
            target = ProductCategorical(tuple(rng.dirichlet(np.ones(k)) for _ in elems[0].pmfs))
        tvs = [tv_distance(target, e) for e in elems]
        i = int(np.argmin(tvs))
        return [("cover", elems[i].id, tvs[i], tvs[i] <= a + 1e-12, PrivacyBudget(1.0))]
    if kind == "gaussian-mean":
        d, R = state["d"], state["R"]
        mu = rng.normal(size=d)
        mu *= R * rng.random() ** (1 / d) / max(np.linalg.norm(mu), 1e-300)
        means = np.stack([e.mean for e in cover.elements])
        dist = np.linalg.norm(means - mu, axis=1)
        i = int(np.argmin(dist))
        tv = spherical_tv(mu, means[i])
        return [("cover", cover.elements[i].id, tv, tv <= a + 1e-12, PrivacyBudget(1.0))]
    if kind == "lattice":
        mu = rng.uniform(-100, 100, cover.d)
        e = cover.nearest(SphericalGaussian(mu))
        tv = spherical_tv(mu, e.mean)
        return [("cover", e.id, tv, tv <= a + 1e-12, PrivacyBudget(1.0))]
    mu = rng.uniform(-1e3, 1e3)
    sd = math.exp(rng.uniform(math.log(1e-2), math.log(1e2)))
    e = cover.nearest(UnivariateGaussian(mu, sd * sd))
    tv = float(univariate_gaussian_tv(mu, sd, e.mean, e.std))
    return [("cover", e.id, tv, tv <= a + 1e-12, PrivacyBudget(1.0))]


def _prep_packing(cfg):
    fam = cfg.family
    return {"m": int(fam.get("m", 50)), "domain": int(fam.get("domain", 5))}


def packing_sandwich(cands: list, alpha: float, rng: np.random.Generator,
                     orders: int = 5) -> dict:
    """Check ``|packing(2 alpha)| <= smallest cover found <= |packing(alpha)|``.

    Covers are found as greedy alpha-packings under random scan orders; each
    is verified to be an alpha-cover of the candidates.
    """
    p2 = greedy_packing(cands, 2 * alpha)
    p1 = greedy_packing(cands, alpha)
    covers = [p1] + [greedy_packing([cands[i] for i in rng.permutation(len(cands))], alpha)
                     for _ in range(orders)]
    valid = all(is_cover(c, cands, alpha) for c in covers)
    c_found = min(len(c) for c in covers)
    ok = (valid and is_packing(p2, 2 * alpha) and is_packing(p1, alpha)
          and len(p2) <= c_found <= len(p1))
    return {"p_2alpha": len(p2), "c_alpha": c_found, "p_alpha": len(p1),
            "covers_valid": valid, "ok": ok}


def _packing_trial(state, cfg, rng):
    cands = [Categorical(rng.dirichlet(np.ones(state["domain"])), id=f"c{i}")
             for i in range(state["m"])]
    res = packing_sandwich(cands, cfg.selection.alpha, rng)
    label = f"{res['p_2alpha']}<={res['c_alpha']}<={res['p_alpha']}"
    return [("packing", label, 0.0, res["ok"], PrivacyBudget(1.0))]


_SCENARIOS: dict[str, tuple[Callable, Callable]] = {
    "planted-phs": (_prep_planted, _planted_trial),
    "naive-vs-phs": (_prep_naive, lambda s, c, r: _planted_trial(s, c, r, ("phs", "naive"))),
    "misspecified-semi-agnostic": (_prep_misspecified, _misspecified_trial),
    "gapmax-lattice": (_prep_gapmax, _gapmax_trial),
    "cover-audit": (_prep_cover, _cover_trial),
    "packing-audit": (_prep_packing, _packing_trial),
}


def default_threads() -> int:
    env = os.environ.get(THREADS_ENV)
    if env:
        return max(1, int(env))
    return min(8, os.cpu_count() or 1)


def run_experiment(config: ExperimentConfig, threads: int | None = None) -> ExperimentResult:
    """Run all trials of a scenario and summarize them.

    Infeasible configurations (for instance a cover beyond the size cap)
    raise before any trial runs.
    """
    prepare, trial = _SCENARIOS[config.scenario]
    state = prepare(config)

    def one(i):
        seed = trial_seed(config.seed, i)
        rng = np.random.default_rng(seed)
        t0 = time.perf_counter()
        rows = trial(state, config, rng)
        ms = (time.perf_counter() - t0) * 1000
        return [TrialRecord(i, seed, method, str(chosen), float(dtv), bool(ok),
                            budget.epsilon, budget.delta, ms)
                for method, chosen, dtv, ok, budget in rows]

    threads = threads or default_threads()
    if threads == 1:
        batches = [one(i) for i in range(config.trials)]
    else:
        with concurrent.futures.ThreadPoolExecutor(threads) as pool:
            batches = list(pool.map(one, range(config.trials)))
    records = sorted((r for b in batches for r in b), key=lambda r: (r.trial, r.method))
    summary = {"scenario": config.scenario, "trials": config.trials, "seed": config.seed,
               "schema": SCHEMA_VERSION, "methods": summarize(records)}
    if "n" in state:
        summary["n"] = state["n"]
    return ExperimentResult(records, summary)


def load_config(path: str) -> ExperimentConfig:
    with open(path) as fh:
        return ExperimentConfig.from_dict(json.load(fh))
