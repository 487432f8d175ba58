"""Command-line front end.

Every subcommand prints a JSON report on stdout and, with ``--out DIR``,
writes CSV/JSON artifacts into DIR. Each artifact carries the fully resolved
configuration (including the seed) so a run can be repeated exactly.

Exit codes: 0 all gates pass, 1 a gate failed, 2 usage or input error.
"""

from __future__ import annotations

import argparse
import io
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .boundary_functions import (
    DEFAULT_PAIR_BUDGET,
    TAMRAZOV_FAMILY,
    BoundaryFunction,
    tamrazov_ratio,
)
from .circle_numerics import DEFAULT_GRID, check_grid_size
from .errors import DiskFactorError, NotDivisibleError
from .factorization import (
    InnerFunction,
    divide_by_inner,
    fpr1_profile,
    fpr2_sweep,
    inner_part,
)
from .ideal_constructions import (
    Scenario,
    carleson_integral,
    mollifier_scenario,
    parse_set,
    run_scenario,
    scenario_catalog,
    standard_membership,
)
from .moduli import Modulus, condition3_estimate, eta_estimate, validate_modulus

TOLERANCES = {
    "eta_min": 1e-6,        # modulus-check: smallest acceptable eta estimate
    "unimodular": 1e-5,     # factor: max | |U| - 1 | off zero clusters
    "fpr_ratio": 50.0,      # factor --divide: bound on ||f/U|| / ||f||
    "fpr1_A": 8.0,          # verify-fpr1: constant A
    "gate": 0.1,            # convergence decay gate
    "lip_factor": 10.0,     # prop scenarios: LipProfile bound relative to ||target||
    "tamrazov": 10.0,       # tamrazov: ratio bound
    "stability": 0.2,       # tamrazov: relative change under doubled budget
    "membership": 1e-6,     # membership: vanishing tolerance
}

DEFAULT_OMEGAS = ("holder:0.5", "log:1")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _default_grid() -> int:
    env = os.environ.get("DISKFACTOR_GRID")
    if env is None:
        return DEFAULT_GRID
    try:
        return int(env)
    except ValueError:
        raise UsageError(f"DISKFACTOR_GRID={env!r} is not an integer") from None


def _floats(text: str) -> list:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--grid", type=int, default=None, help="grid size n (power of two; default 4096 or $DISKFACTOR_GRID)")
    common.add_argument("--seed", type=int, default=None, help="seed for randomized commands")
    common.add_argument("--out", type=Path, default=None, help="directory for CSV/JSON artifacts")
    common.add_argument("--tol", action="append", default=[], metavar="KEY=VALUE",
                        help="tolerance override; keys: " + ", ".join(TOLERANCES))

    p = _Parser(prog="diskfactor", description="Factorization and ideal diagnostics in disk algebras.")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("modulus-check", parents=[common], help="validate a modulus and estimate its conditions")
    s.add_argument("modulus")
    s.add_argument("--rho", type=float, default=2.0)

    s = sub.add_parser("factor", parents=[common], help="outer/inner factorization of a function")
    s.add_argument("function")
    s.add_argument("--divide", default=None, metavar="INNER_JSON", help="inner function to divide out")
    s.add_argument("--omega", default="holder:0.5")
    s.add_argument("--budget", type=int, default=DEFAULT_PAIR_BUDGET)

    s = sub.add_parser("carleson", parents=[common], help="Carleson integral of a closed set")
    s.add_argument("--set", dest="set_spec", required=True)

    s = sub.add_parser("verify-fpr2", parents=[common], help="radial decay bound for inner functions")
    s.add_argument("--trials", type=int, default=1000)

    s = sub.add_parser("verify-fpr1", parents=[common], help="radial growth of the outer part")
    s.add_argument("function", nargs="?", default="oneminusz")
    s.add_argument("--omega", default="holder:0.5")
    s.add_argument("--radii", type=_floats, default=[0.5, 0.7, 0.9, 0.95, 0.99])
    s.add_argument("--directions", type=int, default=64)

    s = sub.add_parser("verify-mollifier", parents=[common], help="psi-mollifier convergence")
    s.add_argument("function", nargs="?", default="oneminusz")
    s.add_argument("--points", type=_floats, default=[0.0], help="mollifier points as angles")
    s.add_argument("--omega", default="holder:0.5")
    s.add_argument("--deltas", type=_floats, default=[1e-1, 1e-2, 1e-3, 1e-4])
    s.add_argument("--budget", type=int, default=DEFAULT_PAIR_BUDGET)

    for kind in ("prop1", "prop3"):
        s = sub.add_parser(f"verify-{kind}", parents=[common], help=f"{kind} truncation scenario")
        s.add_argument("--scenario", default="point",
                       help="catalog name (point, cluster, point-stalled), 'all', or a JSON file")
        s.add_argument("--budget", type=int, default=DEFAULT_PAIR_BUDGET)

    s = sub.add_parser("tamrazov", parents=[common], help="disk vs boundary seminorm ratio")
    s.add_argument("--function", action="append", default=None, dest="functions")
    s.add_argument("--omega", action="append", default=None, dest="omegas")
    s.add_argument("--budget", type=int, default=DEFAULT_PAIR_BUDGET)

    s = sub.add_parser("membership", parents=[common], help="standard ideal membership test")
    s.add_argument("function")
    s.add_argument("--set", dest="set_spec", required=True)
    s.add_argument("--inner", default=None, metavar="INNER_JSON")
    return p


RANDOMIZED = {"verify-fpr2", "verify-mollifier", "verify-prop1", "verify-prop3", "tamrazov"}


def _resolve(args) -> dict:
    grid = args.grid if args.grid is not None else _default_grid()
    check_grid_size(grid)
    args.grid = grid
    needs_seed = args.command in RANDOMIZED or (args.command == "factor" and args.divide)
    if needs_seed and args.seed is None:
        raise UsageError(f"{args.command} is randomized and requires --seed")
    tol = dict(TOLERANCES)
    for item in args.tol:
        key, sep, val = item.partition("=")
        if not sep or key not in tol:
            raise UsageError(f"bad --tol {item!r}; keys: {', '.join(TOLERANCES)}")
        try:
            tol[key] = float(val)
        except ValueError:
            raise UsageError(f"bad --tol value {val!r}") from None
    args.tolerances = tol
    config = {k: (str(v) if isinstance(v, Path) else v) for k, v in sorted(vars(args).items())
              if k not in ("tol", "out")}
    config["version"] = __version__
    return config


def _load_inner(text: str | None) -> InnerFunction:
    if text is None:
        return InnerFunction()
    try:
        data = json.loads(text) if text.lstrip().startswith("{") else json.loads(Path(text).read_text())
        return InnerFunction.from_json(data)
    except (OSError, json.JSONDecodeError, KeyError, TypeError) as exc:
        raise UsageError(f"cannot read inner function {text!r}: {exc}") from None


class Artifacts:
    """Collects artifacts in memory and writes them at the end (only with --out)."""

    def __init__(self, out: Path | None, config: dict):
        self.out = out
        self.config = config
        self.files: dict = {}

    def csv(self, name: str, writer) -> None:
        buf = io.StringIO()
        buf.write("# " + json.dumps(self.config, sort_keys=True) + "\n")
        writer(buf)
        self.files[name] = buf.getvalue()

    def json(self, name: str, payload: dict) -> None:
        self.files[name] = json.dumps({"config": self.config, **payload}, sort_keys=True, indent=2,
                                     default=_json_default) + "\n"

    def flush(self) -> None:
        if self.out is None:
            return
        self.out.mkdir(parents=True, exist_ok=True)
        for name, text in self.files.items():
            (self.out / name).write_text(text)


def _rows_writer(header, rows):
    def write(fh):
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_cell(x) for x in row) + "\n")
    return write


def _cell(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


# ------------------------------------------------------------------ commands


def cmd_modulus_check(args, art: Artifacts) -> tuple:
    w = Modulus.from_spec(args.modulus)
    report = validate_modulus(w)
    eta = eta_estimate(w, args.rho)
    c3 = condition3_estimate(w)
    passed = eta.value >= args.tolerances["eta_min"]
    payload = {"validation": report.to_json(), "eta": eta.to_json(), "rho": args.rho,
               "condition3": c3.to_json(), "passed": passed}
    art.json("modulus_check.json", payload)
    return passed, payload


def cmd_factor(args, art: Artifacts) -> tuple:
    f = BoundaryFunction.from_spec(args.function, args.grid)
    ip = inner_part(f)
    passed = ip.max_deviation <= args.tolerances["unimodular"]
    payload = {"log_abs_outer_at_zero": ip.outer.log_abs_at_zero,
               "inner_max_deviation": ip.max_deviation,
               "flagged_points": int(ip.flagged.sum()),
               "clipped_points": int(ip.outer.clip_mask.sum())}
    art.csv("outer.csv", ip.outer.write_csv)
    art.csv("inner.csv", ip.U.samples.write_csv)
    if args.divide:
        U = _load_inner(args.divide)
        w = Modulus.from_spec(args.omega)
        try:
            d = divide_by_inner(f, U, w, args.budget, args.seed)
            payload["divisible"] = True
            payload["fpr_ratio"] = d.fpr_ratio
            passed = passed and d.fpr_ratio <= args.tolerances["fpr_ratio"]
            art.csv("quotient.csv", d.quotient.samples.write_csv)
        except NotDivisibleError as exc:
            payload["divisible"] = False
            payload["divisibility_error"] = str(exc)
            passed = False
    payload["passed"] = passed
    art.json("factor.json", payload)
    return passed, payload


def cmd_carleson(args, art: Artifacts) -> tuple:
    E = parse_set(args.set_spec)
    res = carleson_integral(E)
    payload = {"set": E.to_json(), **res.to_json(), "passed": True}
    art.json("carleson.json", payload)
    return True, payload


def cmd_verify_fpr2(args, art: Artifacts) -> tuple:
    if args.trials < 1:
        raise UsageError("--trials must be positive")
    results = fpr2_sweep(args.seed, args.trials)
    rows = [(i, xi, rho, r.distance, r.lhs, r.rhs, bool(r.holds)) for i, (_, xi, rho, r) in enumerate(results)]
    holds = sum(1 for row in rows if row[-1])
    passed = holds == len(rows)
    art.csv("fpr2.csv", _rows_writer(["trial", "xi", "rho", "distance", "lhs", "rhs", "holds"], rows))
    payload = {"trials": len(rows), "holds": holds, "passed": passed,
               "worst_margin": max(r.lhs / r.rhs for *_, r in results if r.rhs > 0)}
    art.json("fpr2.json", payload)
    return passed, payload


def cmd_verify_fpr1(args, art: Artifacts) -> tuple:
    f = BoundaryFunction.from_spec(args.function, args.grid)
    w = Modulus.from_spec(args.omega)
    table = fpr1_profile(f, w, args.radii, args.tolerances["fpr1_A"], args.directions)
    rows = [(rho, th, v) for rho, vals in zip(table.radii, table.values)
            for th, v in zip(table.directions, vals)]
    art.csv("fpr1.csv", _rows_writer(["rho", "theta", "r"], rows))
    payload = {"radii": list(map(float, table.radii)), "row_max": list(map(float, table.row_max)),
               "passed": table.decreasing}
    art.json("fpr1.json", payload)
    return table.decreasing, payload


def cmd_verify_mollifier(args, art: Artifacts) -> tuple:
    f = BoundaryFunction.from_spec(args.function, args.grid)
    w = Modulus.from_spec(args.omega)
    res = mollifier_scenario(f, args.points, w, args.deltas, args.seed, args.budget,
                             args.tolerances["gate"])
    art.csv("mollifier.csv", res.table.write_csv)
    payload = _table_payload(res.table)
    payload["passed"] = res.passed
    art.json("mollifier.json", payload)
    return res.passed, payload


def _table_payload(table) -> dict:
    return {"params": list(map(float, table.params)), "total_gap": list(map(float, table.total_gap)),
            "decay_ok": table.decay_ok, "monotone": table.monotone}


def _scenarios(args, kind: str) -> list:
    spec = args.scenario
    if spec.endswith(".json"):
        try:
            data = json.loads(Path(spec).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read scenario {spec!r}: {exc}") from None
        items = data if isinstance(data, list) else [data]
        out = []
        for item in items:
            sc = Scenario.from_json(item, kind)
            if sc.kind != kind:
                raise UsageError(f"scenario {sc.name!r} is {sc.kind}, not {kind}")
            out.append(sc)
        return out
    catalog = scenario_catalog(kind, args.grid, args.seed)
    if spec == "all":
        return catalog
    for sc in catalog:
        if sc.name == spec:
            return [sc]
    raise UsageError(f"unknown scenario {spec!r}; built-ins: {', '.join(s.name for s in catalog)}, all")


def cmd_verify_prop(args, art: Artifacts, kind: str) -> tuple:
    outcomes = []
    all_ok = True
    for sc in _scenarios(args, kind):
        res = run_scenario(sc, args.budget, gate=args.tolerances["gate"],
                           lip_factor=args.tolerances["lip_factor"])
        expected = not sc.negative_control
        ok = res.passed == expected if args.scenario == "all" else res.passed
        all_ok = all_ok and ok
        art.csv(f"{kind}_{sc.name}_table.csv", res.table.write_csv)
        prof_rows = [(N, d, m) for N, p in zip(res.table.params, res.profiles)
                     for d, m in zip(p.bands, p.values)]
        art.csv(f"{kind}_{sc.name}_lip.csv", _rows_writer(["N", "delta", "M"], prof_rows))
        outcomes.append({"scenario": sc.to_json(), **_table_payload(res.table),
                         "profile_max": res.profile_max, "lip_bound": res.lip_bound,
                         "bounded": res.bounded, "passed": res.passed})
    payload = {"results": outcomes, "passed": all_ok}
    art.json(f"{kind}.json", payload)
    return all_ok, payload


def cmd_tamrazov(args, art: Artifacts) -> tuple:
    specs = args.functions or list(TAMRAZOV_FAMILY)
    omegas = args.omegas or list(DEFAULT_OMEGAS)
    rows, passed = [], True
    for spec in specs:
        f = BoundaryFunction.from_spec(spec, args.grid)
        for om in omegas:
            w = Modulus.from_spec(om)
            r1 = tamrazov_ratio(f, w, args.seed, args.budget)
            r2 = tamrazov_ratio(f, w, args.seed, 2 * args.budget)
            change = abs(r2.ratio - r1.ratio) / r1.ratio
            ok = (r1.ratio <= args.tolerances["tamrazov"] and r2.ratio <= args.tolerances["tamrazov"]
                  and change <= args.tolerances["stability"])
            passed = passed and ok
            rows.append((spec, om, r1.ratio, r2.ratio, change, r1.disk_seminorm, r1.boundary_seminorm, ok))
    header = ["function", "omega", "ratio", "ratio_2x", "relative_change", "disk_seminorm",
              "boundary_seminorm", "passed"]
    art.csv("tamrazov.csv", _rows_writer(header, rows))
    payload = {"rows": [dict(zip(header, r)) for r in rows], "passed": passed}
    art.json("tamrazov.json", payload)
    return passed, payload


def cmd_membership(args, art: Artifacts) -> tuple:
    f = BoundaryFunction.from_spec(args.function, args.grid)
    E = parse_set(args.set_spec)
    U = _load_inner(args.inner)
    rep = standard_membership(f, E, U, args.tolerances["membership"])
    payload = {**rep.to_json(), "passed": rep.member}
    art.json("membership.json", payload)
    return rep.member, payload


COMMANDS = {
    "modulus-check": cmd_modulus_check,
    "factor": cmd_factor,
    "carleson": cmd_carleson,
    "verify-fpr2": cmd_verify_fpr2,
    "verify-fpr1": cmd_verify_fpr1,
    "verify-mollifier": cmd_verify_mollifier,
    "verify-prop1": lambda a, art: cmd_verify_prop(a, art, "prop1"),
    "verify-prop3": lambda a, art: cmd_verify_prop(a, art, "prop3"),
    "tamrazov": cmd_tamrazov,
    "membership": cmd_membership,
}


def _json_default(x):
    if isinstance(x, (np.floating, np.integer, np.bool_)):
        return x.item()
    if isinstance(x, float) and not math.isfinite(x):
        return str(x)
    raise TypeError(type(x).__name__)


def run(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        config = _resolve(args)
        art = Artifacts(args.out, config)
        passed, payload = COMMANDS[args.command](args, art)
        art.flush()
    except UsageError as exc:
        print(f"diskfactor: error: {exc}", file=sys.stderr)
        return 2
    except (DiskFactorError, OSError, json.JSONDecodeError) as exc:
        print(f"diskfactor: error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    print(json.dumps({"command": args.command, **payload}, sort_keys=True, default=_json_default))
    print(f"{args.command}: {'PASS' if passed else 'FAIL'}", file=sys.stderr)
    return 0 if passed else 1


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
