"""Command-line entry point: ``signreg <verb> [options]``.

Exit codes: 0 success, 1 failed self-test or aborted simulation, 2 bad input
(including unknown flags), 3 refusal (an enumeration or size cap exceeded).
The global seed comes from ``--seed``, else the ``SIGNREG_SEED`` environment
variable, else 0.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import approx, battery, bounds, sim, vclab
from .classes import (
    FixedPartitionConstant,
    LinearSpan1D,
    MonotoneEither,
    Nondecreasing,
    Nonincreasing,
    PiecewiseMonotone,
    PiecewiseMonotoneConvexConcave,
    SingleIndexMonotone,
    parse_blocks,
)
from .core import Design, load_csv
from .errors import ContractError, RefusalError, SimulationError, StructuralError
from .estimators import STRATEGIES, SieveConfig, minimize_T

SEED_ENV = "SIGNREG_SEED"
EXIT_OK, EXIT_FAIL, EXIT_CONTRACT, EXIT_REFUSAL = 0, 1, 2, 3

ESTIMATE_CLASSES = (
    "nondecreasing",
    "nonincreasing",
    "monotone",
    "piecewise-monotone",
    "convex-concave",
    "fixed-partition",
    "linear-span",
    "single-index",
)
VC_CLASSES = ("nondecreasing", "monotone", "piecewise-monotone", "convex-concave", "single-index")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_CONTRACT)


def resolve_seed(flag: int | None) -> int:
    if flag is not None:
        return int(flag)
    env = os.environ.get(SEED_ENV)
    if env is None or env.strip() == "":
        return 0
    try:
        return int(env)
    except ValueError as exc:
        raise StructuralError(f"{SEED_ENV} must be an integer, got {env!r}") from exc


# ---------------------------------------------------------------------------
# Output
# ---------------------------------------------------------------------------


def _rows_to_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    if rows:
        w = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({k: json.dumps(v) if isinstance(v, (list, dict)) else v for k, v in r.items()})
    return buf.getvalue()


def _emit(args, name: str, payload, rows: list[dict] | None = None) -> None:
    """Write ``payload`` as JSON, or ``rows`` as CSV, to ``--out-dir`` or stdout."""
    if args.format == "csv":
        text = _rows_to_csv(rows if rows is not None else [payload])
        ext = "csv"
    else:
        text = json.dumps(payload, indent=2, default=_json_default) + "\n"
        ext = "json"
    if args.out_dir:
        out = Path(args.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / f"{name}.{ext}").write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _json_default(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    return str(obj)


def _finite(x: float):
    return x if math.isfinite(x) else str(x)


# ---------------------------------------------------------------------------
# Verbs
# ---------------------------------------------------------------------------


def _estimate_class(args, design: Design):
    c = args.cls
    if c == "nondecreasing":
        return Nondecreasing()
    if c == "nonincreasing":
        return Nonincreasing()
    if c == "monotone":
        return MonotoneEither()
    if c == "piecewise-monotone":
        return PiecewiseMonotone(args.pieces)
    if c == "convex-concave":
        return PiecewiseMonotoneConvexConcave(args.pieces)
    if c == "fixed-partition":
        if not args.blocks:
            raise StructuralError("--blocks is required for the fixed-partition class")
        return FixedPartitionConstant(parse_blocks(args.blocks, design.n))
    if c == "linear-span":
        if not args.f0:
            raise StructuralError("--f0 is required for the linear-span class")
        return LinearSpan1D(tuple(float(t) for t in args.f0.split(",")))
    return SingleIndexMonotone(2)


def _load_planar(path) -> tuple[Design, np.ndarray]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or [c.strip() for c in reader.fieldnames[:3]] != ["x1", "x2", "y"]:
            raise StructuralError("planar CSV header must start with columns x1,x2,y")
        rows = [(float(r["x1"]), float(r["x2"]), float(r["y"])) for r in reader]
    if not rows:
        raise StructuralError("CSV contains no data rows")
    arr = np.asarray(rows)
    return Design(arr[:, :2]), arr[:, 2]


def cmd_estimate(args) -> int:
    seed = resolve_seed(args.seed)
    if args.cls == "single-index":
        design, y = _load_planar(args.data)
        strategy = "AngleGrid"
    else:
        design, obs = load_csv(args.data)
        y = obs.y
        strategy = args.strategy
    cls = _estimate_class(args, design)
    res = minimize_T(cls, design, y, SieveConfig(strategy=strategy, seed=seed))
    payload = res.to_dict()
    payload["class"] = cls.describe()
    rows = [{"index": i, "fhat": float(v)} for i, v in enumerate(res.fhat.values)]
    _emit(args, "estimate", payload, rows)
    return EXIT_OK


def cmd_simulate(args) -> int:
    seed = resolve_seed(args.seed)
    config = json.loads(Path(args.scenario).read_text(encoding="utf-8"))
    scenario = sim.scenario_from_dict(config, n=args.n, seed=seed)
    reps = args.reps if args.reps is not None else int(config.get("reps", 1000))
    names = args.estimators.split(",")
    handles = {}
    for name in names:
        if name == "sign":
            handles[name] = sim.sign_estimator_handle(scenario, certify=args.certify)
        elif name == "lse":
            handles[name] = sim.lse_handle(scenario, certify=args.certify)
        else:
            raise StructuralError(f"unknown estimator {name!r}; choose from sign, lse")
    out_dir = Path(args.out_dir) if args.out_dir else Path(".")
    out_dir.mkdir(parents=True, exist_ok=True)
    csv_path = out_dir / "replications.csv"
    res = sim.monte_carlo_risk(handles, scenario, reps, seed, csv_path, timing=args.timing)
    summary = {"scenario": scenario.name, "n": scenario.n, "reps": reps, "seed": seed, "estimators": {k: v.to_dict() for k, v in res.items()}}
    if scenario.name == "hetero":
        summary["expected"] = sim.hetero_expected(scenario.n)
    rows = [{"estimator": k, "n": scenario.n, "reps": reps, "mean_ell_risk": v.mean, "stderr": v.stderr, "failures": v.failures} for k, v in res.items()]
    _emit(args, "summary", summary, rows)
    return EXIT_OK


def cmd_approx(args) -> int:
    f = battery.get_function(args.function)
    design = battery.make_design(args.design, args.n, resolve_seed(args.seed))
    values = np.array([f(t) for t in design.points])
    if args.kind == "block-mean":
        ap = approx.block_mean_approx(values, args.K)
        payload = {
            "kind": "block-mean",
            "approximant": ap.values.tolist(),
            "certificate": approx.block_mean_certificate(values, args.K),
            "measured": float(np.mean(np.abs(values - ap.values))),
        }
    elif args.kind == "piecewise-constant":
        cut = design.n // 2 if args.split is None else args.split
        r = approx.piecewise_constant_approx(values, [(0, cut), (cut, design.n)], args.gamma)
        payload = {
            "kind": "piecewise-constant",
            "approximant": r.approximant.values.tolist(),
            "certificate": r.certificate,
            "measured": r.measured,
            "allocation": list(r.allocation),
            "n_pieces": r.n_pieces,
            "max_pieces": r.max_pieces,
        }
    elif args.kind == "interpolate":
        Q = "uniform" if args.measure == "uniform" else design
        r = approx.k_linear_interpolation(f, 0.0, 1.0, args.K, Q, args.mode)
        payload = {"kind": "interpolate", **r.to_dict()}
    else:
        Q = "uniform" if args.measure == "uniform" else design
        cb = approx.interpolant_error_bounds(f, 0.0, 1.0, Q)
        payload = {"kind": "chord", "R1": _finite(cb.R1), "R2": _finite(cb.R2), "R3": _finite(cb.R3), "best": _finite(cb.best), "measured": cb.measured}
    payload.update({"function": args.function, "design": args.design, "n": design.n})
    rows = [{k: v for k, v in payload.items() if not isinstance(v, (list, dict))}]
    _emit(args, "approx", payload, rows)
    return EXIT_OK


def cmd_vc_check(args) -> int:
    rng = np.random.default_rng(resolve_seed(args.seed))
    k, K = args.pieces, args.baseline_pieces
    certs = []
    if args.cls == "single-index":
        claimed = vclab.single_index_bound(2, K) if args.degree is None else args.degree
        for b in range(args.baselines):
            for direction in ("above", "below"):
                fam = vclab.random_planar_baseline(args.grid, K, rng, direction)
                certs.append((b, vclab.degree_upper_check(fam, claimed)))
    else:
        if args.cls == "nondecreasing":
            gen, r = vclab.RMonotonePieces(1, 1, (1,)), 1
        elif args.cls == "convex-concave":
            gen, r = vclab.RMonotonePieces(2, k), 2
        else:
            gen, r = vclab.RMonotonePieces(1, 1 if args.cls == "monotone" else k), 1
        claimed = vclab.piecewise_degree_bound(r, gen.k, K) if args.degree is None else args.degree
        points = list(range(1, args.grid + 1))
        for b in range(args.baselines):
            for direction in ("above", "below"):
                fam = vclab.random_piecewise_baseline(gen, points, K, rng, direction)
                certs.append((b, vclab.degree_upper_check(fam, claimed)))
    records = [{"baseline": b, **c.to_dict()} for b, c in certs]
    payload = {
        "class": args.cls,
        "pieces": k,
        "baseline_pieces": K,
        "grid": args.grid,
        "claimed_degree": claimed,
        "all_certified": all(c.certified for _, c in certs),
        "max_observed_dimension": max(c.observed_dimension for _, c in certs),
        "certificates": records,
    }
    rows = [{k2: v for k2, v in r.items() if k2 not in ("witness_patterns",)} for r in records]
    _emit(args, "vc_check", payload, rows)
    return EXIT_OK if payload["all_certified"] else EXIT_FAIL


def _parse_params(items) -> dict:
    out = {}
    for item in items or []:
        if "=" not in item:
            raise StructuralError(f"--param expects key=value, got {item!r}")
        key, val = item.split("=", 1)
        try:
            out[key.strip()] = float(val)
        except ValueError as exc:
            raise StructuralError(f"--param {key}: not a number") from exc
    return out


def cmd_bounds(args) -> int:
    cfg = bounds.BoundConfig(args.kappa, args.C)
    params = _parse_params(args.param)
    rows = []
    for n in args.n:
        inputs = dict(params, n=float(n))
        if args.qbeta is not None:
            inputs["moment_fn"] = bounds.qbeta_sigma(args.qbeta)
        else:
            inputs["sigma"], inputs["p"] = args.sigma, args.p
        row = {"case": args.case, "n": n, "bound": _finite(bounds.bound_Bn(args.case, inputs, cfg))}
        if args.qbeta is not None and args.case == "extremal":
            D = params.get("D")
            if D is not None and n / D >= (math.e / 2) ** args.qbeta:
                p_opt, val = bounds.optimize_p(inputs["moment_fn"], D, n)
                row.update({"p_opt": p_opt, "closed_form": bounds.qbeta_closed_form(args.qbeta, n, D), "L_n": bounds.ln_solver(args.qbeta, n, D)})
        rows.append(row)
    _emit(args, "bounds", {"case": args.case, "params": params, "rows": rows}, rows)
    return EXIT_OK


def cmd_selftest(args) -> int:
    from .selftest import run_selftest

    report = run_selftest(args.instances, resolve_seed(args.seed))
    rows = [{"suite": k, **v} for k, v in report.items()]
    _emit(args, "selftest", report, rows)
    return EXIT_OK if all(v["failures"] == 0 for v in report.values()) else EXIT_FAIL


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help=f"global seed (overrides ${SEED_ENV}; default 0)")
    common.add_argument("--out-dir", default=None, help="write results here instead of stdout")
    common.add_argument("--format", choices=("csv", "json"), default="json")

    parser = _Parser(prog="signreg", description="Sign-statistic estimation, approximation certificates and risk bounds.")
    sub = parser.add_subparsers(dest="verb", required=True, parser_class=_Parser)

    p = sub.add_parser("estimate", parents=[common], help="fit a shape class to CSV data")
    p.add_argument("--data", required=True, help="CSV with header x,y (x1,x2,y for single-index)")
    p.add_argument("--class", dest="cls", required=True, choices=ESTIMATE_CLASSES)
    p.add_argument("--blocks", help='1-based inclusive blocks, e.g. "1-2,3"')
    p.add_argument("--pieces", type=int, default=1)
    p.add_argument("--f0", help="comma-separated reference vector for linear-span")
    p.add_argument("--strategy", choices=STRATEGIES, default="RegressogramDP")
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("simulate", parents=[common], help="Monte-Carlo risk from a scenario JSON")
    p.add_argument("--scenario", required=True)
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--reps", type=int, default=None)
    p.add_argument("--estimators", default="sign,lse")
    p.add_argument("--certify", action="store_true", help="also compute sup T for every fit (slow)")
    p.add_argument("--timing", action="store_true", help="record runtimes (makes the CSV nondeterministic)")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("approx", parents=[common], help="build an approximant and its certificate")
    p.add_argument("--kind", choices=("block-mean", "piecewise-constant", "interpolate", "chord"), default="interpolate")
    p.add_argument("--function", default="sqrt", choices=sorted(battery.FUNCTIONS))
    p.add_argument("--design", choices=battery.DESIGN_KINDS, default="equispaced")
    p.add_argument("--n", type=int, default=50)
    p.add_argument("--K", type=int, default=4)
    p.add_argument("--mode", choices=("i", "ii"), default="ii")
    p.add_argument("--measure", choices=("design", "uniform"), default="design")
    p.add_argument("--gamma", type=float, default=3.0)
    p.add_argument("--split", type=int, default=None, help="piece boundary index for piecewise-constant")
    p.set_defaults(func=cmd_approx)

    p = sub.add_parser("vc-check", parents=[common], help="exhaustive degree certificates on a grid")
    p.add_argument("--class", dest="cls", choices=VC_CLASSES, default="monotone")
    p.add_argument("--pieces", type=int, default=1, help="pieces k of the generator class")
    p.add_argument("--baseline-pieces", type=int, default=1, help="pieces K of the reference function")
    p.add_argument("--grid", type=int, default=12, help="number of base points")
    p.add_argument("--baselines", type=int, default=5)
    p.add_argument("--degree", type=int, default=None, help="claimed degree (default: the class bound)")
    p.set_defaults(func=cmd_vc_check)

    p = sub.add_parser("bounds", parents=[common], help="tabulate risk bounds")
    p.add_argument("--case", choices=bounds.BOUND_CASES, required=True)
    p.add_argument("--n", type=float, nargs="+", required=True)
    p.add_argument("--sigma", type=float, default=1.0)
    p.add_argument("--p", type=float, default=2.0)
    p.add_argument("--qbeta", type=float, default=None, help="use q_beta moments and optimize over p")
    p.add_argument("--param", action="append", help="case input key=value (repeatable)")
    p.add_argument("--kappa", type=float, default=1.0)
    p.add_argument("--C", type=float, default=1.0)
    p.set_defaults(func=cmd_bounds)

    p = sub.add_parser("selftest", parents=[common], help="oracle-equivalence suites")
    p.add_argument("--instances", type=int, default=100)
    p.set_defaults(func=cmd_selftest)
    return parser


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if isinstance(exc.code, int) else EXIT_CONTRACT
    try:
        return args.func(args)
    except RefusalError as exc:
        print(f"refused: {exc}", file=sys.stderr)
        return EXIT_REFUSAL
    except (ContractError, StructuralError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONTRACT
    except SimulationError as exc:
        print(f"simulation aborted: {exc}", file=sys.stderr)
        return EXIT_FAIL
    except (OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONTRACT


def main() -> None:
    sys.exit(run())
