"""Command-line front end.

Commands: construct | check-mds | bounds | eval | bruteforce | simulate |
sweep.  Every emitted file carries a schema version field "v": 1 and, for
randomized commands, the seed, so reruns are byte-identical.

Exit codes are a stable contract: 0 success, 1 verdict failure (a failing
MDS witness, or --expect-equality with a positive gap), 2 parameter
rejection, 3 malformed input, 4 budget exceeded.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from math import comb
from pathlib import Path

from . import __version__
from .codes import (
    bounds_report,
    check_mds,
    realization_from_json,
    realization_to_json,
)
from .errors import (
    BadParameters,
    BudgetExceeded,
    DegreeMismatch,
    EllTooSmall,
    InternalInconsistency,
    LengthOutOfRange,
    MalformedInput,
    Nondivisible,
    NonPrime,
    QuotientTooSmall,
    RepairToolError,
    RExceedsQ,
    ReduciblePolynomial,
)
from .gf import build_tower
from .linalg import gaussian_binomial
from .nrc import build, bundle_provenance, validate_params
from .repair import (
    DEFAULT_BUDGET,
    bruteforce_column_hits,
    bruteforce_overlap,
    evaluate_scheme,
    scheme_from_json,
    scheme_to_json,
)
from .simulate import campaign

_PARAM_ERRORS = (NonPrime, DegreeMismatch, ReduciblePolynomial, EllTooSmall,
                 Nondivisible, QuotientTooSmall, LengthOutOfRange, RExceedsQ,
                 BadParameters)


def _dumps(obj: dict) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _load_json(path: str) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise MalformedInput(f"cannot read {path}: {exc}") from exc


def _load_code(path: str):
    obj = _load_json(path)
    if not isinstance(obj, dict):
        raise MalformedInput(f"{path}: expected a JSON object")
    return realization_from_json(obj)


def _load_scheme(path: str, field):
    obj = _load_json(path)
    if not isinstance(obj, dict):
        raise MalformedInput(f"{path}: expected a JSON object")
    return scheme_from_json(obj, field)


def _emit(args, doc: dict, table: str) -> None:
    if args.out:
        Path(args.out).write_text(_dumps(doc), encoding="utf-8")
    elif args.format == "json":
        sys.stdout.write(_dumps(doc))
    else:
        print(table)


# ---------------------------------------------------------------------------
# construct


def cmd_construct(args) -> int:
    tower = build_tower(args.p, args.m, args.ell)
    params = validate_params(tower, args.r, args.n)
    bundle = build(params)
    prov = bundle_provenance(bundle, __version__)
    outdir = Path(args.out or ".")
    outdir.mkdir(parents=True, exist_ok=True)
    code_path = outdir / "code.json"
    scheme_path = outdir / "scheme.json"
    code_path.write_text(
        _dumps(realization_to_json(bundle.realization, bundle.labels, prov)),
        encoding="utf-8")
    scheme_path.write_text(_dumps(scheme_to_json(bundle.scheme, prov)),
                           encoding="utf-8")
    print(f"wrote {code_path} and {scheme_path} "
          f"(q={params.q}, ell={params.ell}, r={params.r}, n={params.n})")
    return 0


# ---------------------------------------------------------------------------
# check-mds


def cmd_check_mds(args) -> int:
    re, _, _ = _load_code(args.code)
    witness = check_mds(re.skeleton)
    s = re.skeleton
    subsets = comb(s.n, s.r)
    if witness is None:
        doc = {"v": 1, "ok": True, "subsets": subsets}
        _emit(args, doc, f"ok: all {subsets} subsets of {s.r} nodes span")
        return 0
    w1 = [i + 1 for i in witness]
    doc = {"v": 1, "ok": False, "witness": w1}
    _emit(args, doc, f"witness: nodes {w1} do not span")
    return 1


# ---------------------------------------------------------------------------
# bounds


def _bounds_table(rep) -> str:
    d = rep.to_json_dict()
    lines = [f"q={d['q']} ell={d['ell']} r={d['r']} n={d['n']}"]
    for key in ("im_bound", "pc_bound", "length_max", "equality_min_length",
                "coverage_fraction", "r_le_q"):
        lines.append(f"  {key:<21} {d[key]}")
    return "\n".join(lines)


def cmd_bounds(args) -> int:
    rep = bounds_report(args.q, args.ell, args.r, args.n)
    doc = {"v": 1, **rep.to_json_dict()}
    _emit(args, doc, _bounds_table(rep))
    return 0


# ---------------------------------------------------------------------------
# eval


def _metrics_table(doc: dict) -> str:
    lines = ["node  beta  gamma  bound  gap"]
    bound = doc["bounds"]["im_bound"]
    for row in doc["per_node"]:
        lines.append(f"{row['i']:>4}  {row['beta']:>4}  {row['gamma']:>5}  "
                     f"{bound:>5}  {row['gap']:>3}")
    agg = doc["aggregates"]
    lines.append(f" avg  {agg['beta_avg']:>4}  {agg['gamma_avg']:>5}")
    lines.append(f" max  {agg['beta_max']:>4}  {agg['gamma_max']:>5}")
    lines.append(f"equality: {'yes' if doc['equality'] else 'no'}")
    return "\n".join(lines)


def cmd_eval(args) -> int:
    re, _, _ = _load_code(args.code)
    sch, _ = _load_scheme(args.scheme, re.skeleton.tower.base)
    metrics = evaluate_scheme(re, sch)
    doc = {"v": 1, **metrics.to_json_dict()}
    _emit(args, doc, _metrics_table(doc))
    if args.expect_equality and not metrics.equality:
        return 1
    return 0


# ---------------------------------------------------------------------------
# bruteforce


def _bf_worker(code_obj, node0, objective, start, stop):
    re, _, _ = realization_from_json(code_obj)
    if objective == "bandwidth":
        value, witness = bruteforce_overlap(re.skeleton, node0,
                                            index_range=(start, stop))
    else:
        value, witness = bruteforce_column_hits(re, node0,
                                                index_range=(start, stop))
    return value, None if witness is None else witness.to_json_dict(), start


def _parse_range(text, total):
    if text is None:
        return None
    try:
        a, b = text.split(":")
        rng = (int(a), int(b))
    except ValueError as exc:
        raise BadParameters(f"--range must be START:STOP, got {text!r}") from exc
    if not 0 <= rng[0] <= rng[1] <= total:
        raise BadParameters(f"--range {text} outside [0, {total}]")
    return rng


def cmd_bruteforce(args) -> int:
    code_obj = _load_json(args.code)
    re, _, _ = realization_from_json(code_obj)
    s = re.skeleton
    node0 = args.node - 1
    if not 0 <= node0 < s.n:
        raise BadParameters(f"--node must be in 1..{s.n}")
    field = s.tower.base
    total = gaussian_binomial(s.ambient, s.ell, field.order)
    rng = _parse_range(args.range, total)
    if rng is None and total > args.budget:
        raise BudgetExceeded(total)
    start, stop = rng if rng is not None else (0, total)

    if args.jobs > 1 and stop - start > 1:
        bounds_list = [start + (stop - start) * k // args.jobs
                       for k in range(args.jobs + 1)]
        tasks = [(bounds_list[k], bounds_list[k + 1]) for k in range(args.jobs)
                 if bounds_list[k] < bounds_list[k + 1]]
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            parts = list(pool.map(
                _bf_worker, [code_obj] * len(tasks), [node0] * len(tasks),
                [args.objective] * len(tasks),
                [t[0] for t in tasks], [t[1] for t in tasks]))
        parts.sort(key=lambda p: p[2])
        value, witness = -1, None
        for v, w, _ in parts:
            if v > value:
                value, witness = v, w
    else:
        value, witness, _ = _bf_worker(code_obj, node0, args.objective,
                                       start, stop)

    key = "alpha" if args.objective == "bandwidth" else "lambda"
    cost_key = "beta" if args.objective == "bandwidth" else "gamma"
    cost = s.ell * (s.n - 1) - value if value >= 0 else None
    doc = {"v": 1, "node": args.node, "objective": args.objective,
           key: value, cost_key: cost, "candidates": stop - start,
           "range": [start, stop], "witness": witness}
    table = (f"node {args.node}: {key} = {value} ({cost_key} = {cost}) "
             f"over {stop - start} candidates")
    _emit(args, doc, table)
    return 0


# ---------------------------------------------------------------------------
# simulate


def _sim_worker(code_obj, scheme_obj, trials, seed, first_trial, nodes):
    re, _, _ = realization_from_json(code_obj)
    sch, _ = scheme_from_json(scheme_obj, re.skeleton.tower.base)
    rep = campaign(re, sch, trials=trials, seed=seed, nodes=nodes,
                   first_trial=first_trial)
    return rep.downloaded, rep.accessed


def cmd_simulate(args) -> int:
    code_obj = _load_json(args.code)
    scheme_obj = _load_json(args.scheme)
    re, _, _ = realization_from_json(code_obj)
    sch, _ = scheme_from_json(scheme_obj, re.skeleton.tower.base)
    s = re.skeleton
    if args.node == "all":
        nodes = None
    else:
        try:
            node0 = int(args.node) - 1
        except ValueError as exc:
            raise BadParameters("--node takes a 1-based index or 'all'") from exc
        if not 0 <= node0 < s.n:
            raise BadParameters(f"--node must be in 1..{s.n}")
        nodes = (node0,)

    if args.jobs > 1 and args.trials > 1:
        splits = [args.trials * k // args.jobs for k in range(args.jobs + 1)]
        tasks = [(splits[k], splits[k + 1] - splits[k])
                 for k in range(args.jobs) if splits[k] < splits[k + 1]]
        node_arg = None if nodes is None else list(nodes)
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            parts = list(pool.map(
                _sim_worker, [code_obj] * len(tasks), [scheme_obj] * len(tasks),
                [t[1] for t in tasks], [args.seed] * len(tasks),
                [t[0] for t in tasks], [node_arg] * len(tasks)))
        if len(set(parts)) != 1:
            raise InternalInconsistency("workers disagree on transcript counts")
        # counts verified identical across workers; assemble the full report
        rep = campaign(re, sch, trials=1, seed=args.seed, nodes=nodes)
        rep = dataclasses.replace(rep, trials=args.trials)
        doc = rep.to_json_dict()
    else:
        rep = campaign(re, sch, trials=args.trials, seed=args.seed,
                       nodes=nodes)
        doc = rep.to_json_dict()

    doc = {"v": 1, **doc}
    lines = [f"trials={doc['trials']} seed={doc['seed']} rng={doc['rng']}",
             "node  downloaded  accessed  beta  gamma"]
    for row in doc["per_node"]:
        lines.append(f"{row['i']:>4}  {row['downloaded']:>10}  "
                     f"{row['accessed']:>8}  {row['beta']:>4}  {row['gamma']:>5}")
    lines.append("failures: none" if not doc["failures"]
                 else f"failures: {doc['failures']}")
    _emit(args, doc, "\n".join(lines))
    return 0


# ---------------------------------------------------------------------------
# sweep


def cmd_sweep(args) -> int:
    tower = build_tower(args.p, args.m, args.ell)
    rows = []
    for n in range(args.n_min, args.n_max + 1):
        bundle = build(validate_params(tower, args.r, n))
        m = bundle.metrics
        d = m.to_json_dict()
        rows.append({
            "n": n,
            "beta_avg": d["aggregates"]["beta_avg"],
            "beta_max": d["aggregates"]["beta_max"],
            "gamma_avg": d["aggregates"]["gamma_avg"],
            "gamma_max": d["aggregates"]["gamma_max"],
            "im_bound": m.bounds.im_bound,
            "equality": m.equality,
        })
    doc = {"v": 1, "p": args.p, "m": args.m, "ell": args.ell, "r": args.r,
           "rows": rows}
    lines = ["   n  beta_avg  beta_max  gamma_avg  gamma_max  im_bound  equal"]
    for row in rows:
        lines.append(f"{row['n']:>4}  {row['beta_avg']!s:>8}  "
                     f"{row['beta_max']:>8}  {row['gamma_avg']!s:>9}  "
                     f"{row['gamma_max']:>9}  {row['im_bound']:>8}  "
                     f"{'yes' if row['equality'] else 'no':>5}")
    _emit(args, doc, "\n".join(lines))
    return 0


# ---------------------------------------------------------------------------


def _add_common(sp) -> None:
    sp.add_argument("--format", choices=("json", "table"), default="table")
    sp.add_argument("--out", default=None,
                    help="write the JSON report to this path")


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="mdsrepair",
        description="Construct, verify, and measure repair-efficient MDS "
                    "array codes over small finite fields.")
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("construct", help="build a code + repair scheme")
    sp.add_argument("--p", type=int, required=True, help="field characteristic")
    sp.add_argument("--m", type=int, default=1, help="base degree (q = p^m)")
    sp.add_argument("--ell", type=int, required=True, help="sub-packetization")
    sp.add_argument("--r", type=int, required=True, help="redundancy")
    sp.add_argument("--n", type=int, required=True, help="code length")
    sp.add_argument("--out", default=".", help="output directory")
    sp.set_defaults(func=cmd_construct)

    sp = sub.add_parser("check-mds", help="verify the r-wise spanning property")
    sp.add_argument("code", help="code.json path")
    _add_common(sp)
    sp.set_defaults(func=cmd_check_mds)

    sp = sub.add_parser("bounds", help="evaluate the lower-bound formulas")
    sp.add_argument("--q", type=int, required=True)
    sp.add_argument("--ell", type=int, required=True)
    sp.add_argument("--r", type=int, required=True)
    sp.add_argument("--n", type=int, required=True)
    _add_common(sp)
    sp.set_defaults(func=cmd_bounds)

    sp = sub.add_parser("eval", help="per-node achieved repair cost of a scheme")
    sp.add_argument("code")
    sp.add_argument("scheme")
    sp.add_argument("--expect-equality", action="store_true",
                    help="exit 1 unless every gap is zero")
    _add_common(sp)
    sp.set_defaults(func=cmd_eval)

    sp = sub.add_parser("bruteforce",
                        help="exact optimum over all repair subspaces")
    sp.add_argument("code")
    sp.add_argument("--node", type=int, required=True, help="1-based node")
    sp.add_argument("--objective", choices=("bandwidth", "io"),
                    default="bandwidth")
    sp.add_argument("--budget", type=int, default=DEFAULT_BUDGET)
    sp.add_argument("--range", default=None, help="START:STOP candidate range")
    sp.add_argument("--jobs", type=int, default=1)
    _add_common(sp)
    sp.set_defaults(func=cmd_bruteforce)

    sp = sub.add_parser("simulate", help="run repair trials and reconcile counts")
    sp.add_argument("code")
    sp.add_argument("scheme")
    sp.add_argument("--trials", type=int, default=100)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--node", default="all", help="1-based node or 'all'")
    sp.add_argument("--jobs", type=int, default=1)
    _add_common(sp)
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("sweep", help="construct and evaluate a length range")
    sp.add_argument("--p", type=int, required=True)
    sp.add_argument("--m", type=int, default=1)
    sp.add_argument("--ell", type=int, required=True)
    sp.add_argument("--r", type=int, required=True)
    sp.add_argument("--n-min", type=int, required=True)
    sp.add_argument("--n-max", type=int, required=True)
    _add_common(sp)
    sp.set_defaults(func=cmd_sweep)

    return ap


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        return args.func(args)
    except BudgetExceeded as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return 4
    except _PARAM_ERRORS as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    except InternalInconsistency:
        raise
    except RepairToolError as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
