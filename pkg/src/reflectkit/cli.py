"""Command line entry point: ``reflectkit <command> ...``.

Path arguments are JSON files in the ``{"horizon": H, "segments": [...]}``
format.  Results go to stdout unless ``--out`` is given; ``--out`` naming a
``.json``/``.csv`` file writes there, anything else is treated as a
directory and receives ``<command>.<format>``.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import experiments as E
from . import paths as P
from . import simulation as S
from . import verification as V
from .errors import ReflectKitError
from .metrics import distance
from .reflection import DelayRate, absorb, delayed_reflection, gen_skorokhod_map, skorokhod_map
from .switch import SwitchConfig, solve_switch


def _fmt(v):
    if isinstance(v, float):
        return repr(v) if not math.isfinite(v) else f"{v:.17g}"
    return str(v)


def _jsonable(obj):
    if isinstance(obj, P.PiecewisePath):
        return P.path_to_dict(obj)
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    return obj


def rows_to_csv(rows, fields):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(fields)
    for r in rows:
        w.writerow([_fmt(r[f]) for f in fields])
    return buf.getvalue()


def _emit(args, payload, rows=None, fields=None):
    """Write ``rows`` as CSV when asked and possible, else ``payload`` as JSON."""
    if args.format == "csv" and rows is not None:
        text = rows_to_csv(rows, fields)
        ext = "csv"
    else:
        text = json.dumps(_jsonable(payload), indent=2, allow_nan=True) + "\n"
        ext = "json"
    if args.out is None:
        sys.stdout.write(text)
        return
    out = Path(args.out)
    if out.suffix not in (".json", ".csv"):
        out.mkdir(parents=True, exist_ok=True)
        out = out / f"{args.command}.{ext}"
    out.write_text(text)


def _load_config(args):
    if args.config is None:
        raise SystemExit(f"{args.command}: --config is required")
    d = json.loads(Path(args.config).read_text())
    if args.seed is not None:
        d["base_seed"] = args.seed
    return E.ExperimentConfig.from_dict(d)


# ---------------------------------------------------------------------------
# commands


def cmd_reflect(args):
    sol = skorokhod_map(P.load_path(args.input))
    _emit(args, {"y": sol.y, "l": sol.l, "m": sol.m})


def cmd_gen_reflect(args):
    sol = gen_skorokhod_map(P.load_path(args.input), P.load_path(args.regulator))
    _emit(args, {"y": sol.y, "l": sol.l, "m": sol.m, "g": sol.g})


def cmd_sticky(args):
    rho = DelayRate.of(args.rho)
    sol = delayed_reflection(P.load_path(args.input), P.load_path(args.regulator), rho)
    _emit(args, {"z": sol.y, "l": sol.l, "m": sol.m, "A": sol.time_change})


def cmd_absorb(args):
    res = absorb(P.load_path(args.input))
    _emit(
        args,
        {
            "path": res.path,
            "sigma": res.sigma,
            "absorbed": res.absorbed,
            "hypothesis_ok": res.hypothesis_ok,
        },
    )


def _solve(args):
    x = P.load_path(args.input)
    F = P.load_path(args.regulator)
    cfg = SwitchConfig(
        delta=args.delta,
        rho_scale=args.rho_scale,
        horizon=args.horizon,
        zero_rule=args.zero_rule,
        max_events=args.max_events,
    )
    return x, F, solve_switch(x, F, cfg)


def cmd_switch(args):
    _, _, sol = _solve(args)
    _emit(
        args,
        {
            "y": sol.y,
            "tA": sol.tA,
            "tB": sol.tB,
            "events": [{"kind": k, "time": t, "value": v} for k, t, v in sol.events],
            "consumed_x": sol.consumed_x,
            "consumed_f": sol.consumed_f,
        },
    )


def cmd_verify(args):
    if args.check == "def1":
        x = P.load_path(args.input)
        F = P.load_path(args.regulator)
        if args.solution:
            doc = json.loads(Path(args.solution).read_text())
            y, l = P.path_from_dict(doc["y"]), P.path_from_dict(doc["l"])
        else:
            sol = gen_skorokhod_map(x, F)
            y, l = sol.y, sol.l
        rep = V.check_definition1(x, F, y, l, args.eps)
    else:
        x, F, sol = _solve(args)
        if args.check == "est1":
            rep = V.check_lemma_est1(sol, x, F, args.eps)
        else:
            rep = V.check_lemma_est2(sol, x, F, args.delta, args.eps)
    _emit(args, rep.to_dict())
    return 0 if rep.passed else 1


def cmd_distance(args):
    p, q = P.load_path(args.a), P.load_path(args.b)
    kw = {"window": args.window} if args.metric == "j1" else {}
    res = distance(p, q, args.T, "j1" if args.metric == "j1" else "uniform", **kw)
    _emit(args, {"value": res.value, "kind": res.kind, "warp": res.warp})


def cmd_simulate(args):
    params = json.loads(args.params) if args.params else {}
    seed = 0 if args.seed is None else args.seed
    cfg = S.SimulationConfig(
        n=int(params.get("n", 100)),
        seed=seed,
        horizon=float(params.get("horizon", 1.0)),
        lam=float(params.get("lam", 0.0)),
        drift=float(params.get("drift", 0.0)),
        beta=float(params.get("beta", 0.5)),
        interpolation=params.get("interpolation", "step"),
    )
    replica = int(params.get("replica", 0))
    if args.kind == "rw":
        dist = E.jump_distribution(params.get("dist", {"kind": "two_point", "a": 1, "pa": 0.5, "b": -1}))
        path = S.random_walk_path(dist, cfg, S.DRIVING, replica)
    elif args.kind == "cpp":
        jump = E.jump_distribution(params.get("jump", {"kind": "constant", "value": 1.0}))
        path = S.compound_poisson_path(jump, cfg, S.DRIVING, replica)
    elif args.kind == "stable":
        path = S.stable_subordinator_walk(cfg, S.REGULATOR, replica)
    else:
        path = S.brownian_path(cfg, S.DRIVING, replica)
    _emit(args, path)


def cmd_converge(args):
    cfg = _load_config(args)
    rows = E.rows_to_dicts(E.run_convergence(cfg))
    _emit(args, {"name": cfg.name, "rows": rows}, rows, E.ConvergenceRow.FIELDS)


STORAGE_FIELDS = ("case", "n", "replica", "rho", "distance", "occupation", "predicted_occupation", "post_sigma_sup")


def cmd_storage(args):
    cfg = _load_config(args)
    rep = E.run_storage_trichotomy(cfg)
    _emit(args, rep, rep["rows"], STORAGE_FIELDS)


def cmd_perturbed_walk(args):
    cfg = _load_config(args)
    rep = E.run_perturbed_walk(cfg)
    if not args.keep_samples:
        rep = {k: v for k, v in rep.items() if k not in ("chain", "limit")}
    _emit(args, rep)


# ---------------------------------------------------------------------------
# parser


def _switch_flags(p):
    p.add_argument("--input", required=True, help="driving path JSON")
    p.add_argument("--regulator", required=True, help="regulator path JSON")
    p.add_argument("--delta", type=float, default=0.0)
    p.add_argument("--rho-scale", type=float, default=1.0)
    p.add_argument("--horizon", type=float, default=None)
    p.add_argument("--zero-rule", choices=("strict", "closed"), default="strict")
    p.add_argument("--max-events", type=int, default=10**6)


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", default=None, help="experiment config JSON")
    common.add_argument("--out", default=None, help="output file or directory")
    common.add_argument("--format", choices=("csv", "json"), default="json")
    common.add_argument("--seed", type=int, default=None)

    ap = argparse.ArgumentParser(prog="reflectkit", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    def add(name, fn, help_):
        p = sub.add_parser(name, parents=[common], help=help_)
        p.set_defaults(func=fn)
        return p

    p = add("reflect", cmd_reflect, "classic reflection y = x + m")
    p.add_argument("input")

    p = add("gen-reflect", cmd_gen_reflect, "jump-type reflection with regulator F")
    p.add_argument("input")
    p.add_argument("regulator")

    p = add("sticky", cmd_sticky, "delayed (sticky) reflection")
    p.add_argument("input")
    p.add_argument("regulator")
    p.add_argument("--rho", type=float, required=True)

    p = add("absorb", cmd_absorb, "stop the path at its first zero")
    p.add_argument("input")

    p = add("switch", cmd_switch, "solve the switch problem")
    _switch_flags(p)

    p = add("verify", cmd_verify, "run a predicate and print the report")
    p.add_argument("--check", choices=("def1", "est1", "est2"), required=True)
    _switch_flags(p)
    p.add_argument("--solution", default=None, help="JSON with y and l (def1 only)")
    p.add_argument("--eps", type=float, default=1e-9)

    p = add("distance", cmd_distance, "uniform distance or J1 upper bound")
    p.add_argument("a")
    p.add_argument("b")
    p.add_argument("--metric", choices=("uniform", "j1"), default="uniform")
    p.add_argument("--T", type=float, default=None)
    p.add_argument("--window", type=float, default=None)

    p = add("simulate", cmd_simulate, "draw a seeded sample path")
    p.add_argument("--kind", choices=("rw", "cpp", "stable", "bm"), required=True)
    p.add_argument("--params", default=None, help="JSON object of generator parameters")

    add("converge", cmd_converge, "distance table along a delta/rho schedule")
    add("storage", cmd_storage, "storage-model trichotomy report")
    p = add("perturbed-walk", cmd_perturbed_walk, "KS comparison of chain and limit marginals")
    p.add_argument("--keep-samples", action="store_true")
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        rc = args.func(args)
    except ReflectKitError as exc:
        print(f"reflectkit {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    return rc or 0


if __name__ == "__main__":
    sys.exit(main())
