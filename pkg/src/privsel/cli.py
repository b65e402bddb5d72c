"""Command line interface: ``privsel {select,bench,cover,packing,bound}``.

Exit status is 0 on success, 1 for usage errors or malformed input, and 2
when a configuration is infeasible (for example a cover over the size cap).
"""
from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import harness
from .covers import (
    DEFAULT_SIZE_CAP,
    gaussian_cov_cover,
    gaussian_mean_cover,
    greedy_packing,
    packing_lower_bound_n,
    product_cover,
)
from .distributions import Dataset, EstimatorConfig, hypothesis_from_dict
from .errors import CoverSizeError, PrivselError
from .mechanisms import PrivacyBudget
from .selection import (
    SelectionParams,
    naive_laplace_select,
    phs,
    required_n_phs,
    semi_agnostic_select,
)

EXIT_OK, EXIT_USAGE, EXIT_INFEASIBLE = 0, 1, 2

BENCH_EPILOG = (
    "CSV columns: " + ", ".join(harness.CSV_COLUMNS)
    + " (wall_ms is appended with --timings). Config: JSON object with "
    '"schema": 1, "scenario" (one of ' + ", ".join(harness.SCENARIOS) + '), "trials", '
    '"seed", "selection" {alpha, zeta, beta, epsilon, delta}, "family" {...}, '
    f'"output". Thread count defaults to ${harness.THREADS_ENV} or the CPU count.'
)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _read_json(path: str, what: str):
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as exc:
        raise UsageError(f"cannot read {what} file {path!r}: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise UsageError(f"{what} file is not valid JSON: {exc}") from exc


def _load_hypotheses(path: str) -> list:
    doc = _read_json(path, "hypotheses")
    if isinstance(doc, dict):
        if "hypotheses" in doc:
            doc = doc["hypotheses"]
        elif "elements" in doc:
            doc = doc["elements"]
        else:
            raise KeyError("hypotheses")
    if not isinstance(doc, list) or not doc:
        raise UsageError("field 'hypotheses' must be a nonempty list")
    hyps = []
    for i, item in enumerate(doc):
        try:
            h = hypothesis_from_dict(item)
        except KeyError as exc:
            raise KeyError(f"hypotheses[{i}].{exc.args[0]}") from None
        if not h.id:
            object.__setattr__(h, "id", f"h{i}")
        hyps.append(h)
    return hyps


def _load_dataset(path: str, domain) -> Dataset:
    doc = _read_json(path, "dataset")
    if isinstance(doc, dict):
        if "points" not in doc:
            raise KeyError("points")
        doc = doc["points"]
    return Dataset.from_json(doc, domain)


def _selection(args) -> SelectionParams:
    return SelectionParams(alpha=args.alpha, zeta=args.zeta, beta=args.beta,
                           budget=PrivacyBudget(args.epsilon))


def cmd_select(args) -> int:
    hyps = _load_hypotheses(args.hypotheses)
    data = _load_dataset(args.data, hyps[0].domain)
    rng = np.random.default_rng(args.seed)
    cfg = EstimatorConfig(seed=args.seed)
    params = _selection(args)
    if len(hyps) == 1:
        rep_id, extra = hyps[0].id, {}
    elif args.method == "phs":
        rep = phs(hyps, data, params, cfg, rng)
        rep_id, extra = rep.chosen, {"score": rep.score_of_chosen}
    elif args.method == "naive":
        rep = naive_laplace_select(hyps, data, params, cfg, rng)
        rep_id, extra = rep.chosen, {"fallback": rep.diagnostics["fallback"]}
    else:
        rep = semi_agnostic_select(hyps, data, args.alpha, args.beta, args.epsilon, cfg, rng,
                                   zeta=args.zeta)
        rep_id, extra = rep.chosen, {"stages": rep.diagnostics["stage_candidates"]}
    if args.json:
        print(json.dumps({"chosen": rep_id, "n": data.n, "epsilon": args.epsilon, **extra}))
    else:
        print(rep_id)
    return EXIT_OK


def cmd_bench(args) -> int:
    doc = _read_json(args.config, "config")
    config = harness.ExperimentConfig.from_dict(doc)
    result = harness.run_experiment(config, threads=args.threads)
    text = result.to_csv(timings=args.timings)
    out = args.output or config.output
    if out:
        with open(out, "w", newline="") as fh:
            fh.write(text)
    summary = json.dumps(result.summary, indent=2, sort_keys=True)
    if args.summary:
        with open(args.summary, "w") as fh:
            fh.write(summary + "\n")
    if out:
        print(summary)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_cover(args) -> int:
    fam = args.family
    if fam == "bernoulli-grid":
        cover = product_cover(2, 1, args.alpha, cap=args.cap)
    elif fam == "product":
        cover = product_cover(args.k, args.d, args.alpha, cap=args.cap)
    elif fam == "gaussian-mean":
        cover = gaussian_mean_cover(args.d, args.radius, args.alpha, cap=args.cap)
    else:
        cover = gaussian_cov_cover(args.d, args.radius, args.kappa, args.alpha, cap=args.cap)
    text = cover.to_json()
    if args.output:
        with open(args.output, "w") as fh:
            fh.write(text)
        print(json.dumps({"elements": len(cover), "output": args.output}))
    else:
        print(text)
    return EXIT_OK


def cmd_packing(args) -> int:
    hyps = _load_hypotheses(args.hypotheses)
    rng = np.random.default_rng(args.seed)
    audit = harness.packing_sandwich(hyps, args.alpha, rng, orders=args.orders)
    packing = greedy_packing(hyps, args.alpha)
    print(json.dumps({"alpha": args.alpha, "packing": [h.id for h in packing], **audit,
                      "packing_lower_bound_n": packing_lower_bound_n(len(packing), args.epsilon)}))
    return EXIT_OK if audit["ok"] else EXIT_INFEASIBLE


def cmd_bound(args) -> int:
    print(f"required_n_phs={required_n_phs(args.m, _selection(args))}")
    if args.packing_size is not None:
        print(f"packing_lower_bound_n={packing_lower_bound_n(args.packing_size, args.epsilon)}")
    return EXIT_OK


def _add_selection_args(p, epsilon=1.0):
    p.add_argument("--alpha", type=float, default=0.1)
    p.add_argument("--zeta", type=float, default=1.0)
    p.add_argument("--beta", type=float, default=0.1)
    p.add_argument("--epsilon", type=float, default=epsilon)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="privsel", description="Differentially private hypothesis selection.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("select", help="select one hypothesis from a JSON list and a dataset")
    p.add_argument("--hypotheses", required=True,
                   help='JSON list of {"id", "family", "params"} (or {"hypotheses": [...]})')
    p.add_argument("--data", required=True,
                   help='JSON list of points (or {"points": [...]})')
    p.add_argument("--method", choices=("phs", "semi-agnostic", "naive"), default="phs")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--json", action="store_true", help="print a JSON report instead of the id")
    _add_selection_args(p)
    p.set_defaults(func=cmd_select)

    p = sub.add_parser("bench", help="run a seeded Monte Carlo experiment",
                       epilog=BENCH_EPILOG)
    p.add_argument("--config", required=True)
    p.add_argument("--output", help="CSV path (default: config output, else stdout)")
    p.add_argument("--summary", help="write the JSON summary here")
    p.add_argument("--threads", type=int)
    p.add_argument("--timings", action="store_true", help="append a wall_ms column")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("cover", help="emit an explicit cover as JSON")
    p.add_argument("--family", required=True,
                   choices=("bernoulli-grid", "product", "gaussian-mean", "gaussian-cov"))
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--k", type=int, default=2)
    p.add_argument("--d", type=int, default=1)
    p.add_argument("--radius", type=float, default=1.0)
    p.add_argument("--kappa", type=float, default=1.0)
    p.add_argument("--cap", type=int, default=DEFAULT_SIZE_CAP)
    p.add_argument("--output")
    p.set_defaults(func=cmd_cover)

    p = sub.add_parser("packing", help="greedy packing plus cover sandwich audit")
    p.add_argument("--hypotheses", required=True)
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--epsilon", type=float, default=1.0)
    p.add_argument("--orders", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_packing)

    p = sub.add_parser("bound", help="print sample-size bounds")
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--packing-size", type=int)
    _add_selection_args(p)
    p.set_defaults(func=cmd_bound)
    return parser


def cli_main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(f"privsel: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except CoverSizeError as exc:
        print(f"privsel: infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except KeyError as exc:
        print(f"privsel: error: missing field {exc.args[0]!r}", file=sys.stderr)
        return EXIT_USAGE
    except (PrivselError, ValueError, TypeError) as exc:
        print(f"privsel: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


def main():
    sys.exit(cli_main())
