"""Command-line front end: ``balducci {validate,price,moments,compare,plot-data}``.

Exit codes: 0 success, 1 invalid input, 2 compare tolerance failure, 3 I/O error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from importlib import resources

from .errors import AgeRangeError, DomainError, QuadratureError, TableError, TruncationError
from .fractional import Assumption, FractionalAge, conditional_density, survival_fraction
from .mortality import MortalityTable, from_weibull, read_table_csv
from .oracle import Window, monte_carlo_expectation, payoff_for, quadrature_expectation
from .premiums import (TO_OMEGA, ContractSpec, InterestEnvironment, Kind, Layout,
                       compute_moment)

EXIT_OK, EXIT_INVALID, EXIT_TOLERANCE, EXIT_IO = 0, 1, 2, 3
COMPARE_RTOL = 1e-6
SEED_ENV = "BALDUCCI_SEED"

_ANNUAL_KINDS = (Kind.LEVEL, Kind.LIFETIME, Kind.INCREASING_CONTINUOUS, Kind.INCREASING_ANNUAL)


class UsageError(Exception):
    pass


def format_number(value: float, precision: int) -> float:
    """Round to ``precision`` significant digits; json/repr then print the shortest form."""
    if value == 0 or not math.isfinite(value):
        return value
    return float(f"{value:.{precision}g}")


def bundled_example_table() -> MortalityTable:
    text = resources.files("balducci").joinpath("data/example1.csv").read_text("utf-8")
    return read_table_csv(text)


def _read_text(path):
    with open(path, encoding="utf-8") as fh:
        return fh.read()


def parse_law(text: str):
    parts = text.split(":")
    if parts[0] != "weibull" or len(parts) not in (3, 4):
        raise UsageError(f"--law expects weibull:alpha:beta[:omega], got {text!r}")
    try:
        alpha, beta = float(parts[1]), float(parts[2])
        omega = int(parts[3]) if len(parts) == 4 else None
    except ValueError:
        raise UsageError(f"--law: cannot parse {text!r}") from None
    return from_weibull(alpha, beta, omega)


def parse_defer(text: str) -> tuple[int, int]:
    """``L`` or ``L*N1`` (years plus sub-year periods)."""
    head, _, tail = text.partition("*")
    try:
        l = int(head)
        n1 = int(tail) if tail else 0
    except ValueError:
        raise UsageError(f"--defer expects L or L*N1, got {text!r}") from None
    return l, n1


def load_model(args):
    sources = [args.table is not None, args.law is not None, args.example is not None]
    if sum(sources) != 1:
        raise UsageError("give exactly one of --table, --law, --example")
    if args.table is not None:
        return read_table_csv(_read_text(args.table))
    if args.law is not None:
        return parse_law(args.law)
    if args.example == 1:
        return bundled_example_table()
    return from_weibull(50.0, 3.0)


def build_spec(args, model, m=None, kind=None) -> ContractSpec:
    """Contract from the flags; ``kind`` set means an annual kind drops j and n1 (sweep only)."""
    l, n1 = parse_defer(args.defer)
    j = args.j
    if kind in _ANNUAL_KINDS and 0 <= n1 < j:
        j, n1 = 1, 0
    x = args.x if args.x is not None else model.base_age
    n = TO_OMEGA if args.term is None else args.term
    return ContractSpec(x=x, l=l, n=n, m=args.m if m is None else m, j=j, n1=n1)


def _spec_json(args, spec, model):
    source = args.table or args.law or f"example{args.example}"
    return {
        "model": source,
        "interest": args.interest,
        "x": spec.x,
        "l": spec.l,
        "n": "to-omega" if spec.n is TO_OMEGA else spec.n,
        "j": args.j,
        "n1": parse_defer(args.defer)[1],
        "layout": args.layout,
        "horizon_age": model.horizon_age,
    }


def _result_row(kind, spec, result, precision):
    return {
        "kind": kind.value,
        "m": spec.m,
        "value": format_number(result.value, precision),
        "truncation_age": result.truncation_age,
        "limit_branches_used": result.limit_branches_used,
    }


def _emit(payload, fmt, out):
    if fmt == "json":
        out.write(json.dumps(payload, allow_nan=False, indent=2) + "\n")
        return
    writer = csv.writer(out, lineterminator="\n")
    fields = ["kind", "m", "value", "truncation_age", "limit_branches_used"]
    oracle = payload.get("oracle", {})
    writer.writerow(fields + list(oracle))
    for row in payload["results"]:
        writer.writerow([row[f] for f in fields] + list(oracle.values()))


def cmd_validate(args, out) -> int:
    path = args.path or args.table
    if path is None:
        raise UsageError("validate needs a CSV path")
    try:
        table = read_table_csv(_read_text(path))
    except TableError as exc:
        out.write(f"invalid: {exc}\n")
        return EXIT_INVALID
    state = "terminal" if table.is_terminal else "open-ended"
    out.write(f"valid, omega offset {table.omega} ({state}, whole-life horizon at age "
              f"{table.horizon_age}); ages {table.base_age}..{table.last_age}, "
              f"{len(table.survivors)} rows\n")
    return EXIT_OK


def cmd_price(args, out) -> int:
    model = load_model(args)
    env = InterestEnvironment(args.interest)
    kind = Kind(args.kind)
    spec = build_spec(args, model)
    result = compute_moment(kind, model, env, spec, Layout(args.layout))
    payload = {"command": "price", "spec": _spec_json(args, spec, model),
               "results": [_result_row(kind, spec, result, args.precision)]}
    _emit(payload, args.format, out)
    return EXIT_OK


def sweep(args, model):
    """The payoffs reported for each example, in reporting order."""
    plan = [(Kind.LEVEL, 1), (Kind.LEVEL, 2), (Kind.LIFETIME, 0), (Kind.LIFETIME, 1),
            (Kind.LIFETIME, 2), (Kind.INCREASING_CONTINUOUS, 1),
            (Kind.INCREASING_CONTINUOUS, 2), (Kind.INCREASING_ANNUAL, 1),
            (Kind.INCREASING_ANNUAL, 2), (Kind.MTHLY, 1), (Kind.MTHLY, 2),
            (Kind.MTHLY_INCREASING, 1), (Kind.MTHLY_INCREASING, 2)]
    if parse_defer(args.defer)[1] == 0:
        plan.append((Kind.PAYMENT_TIME, 1))
    for kind, m in plan:
        yield kind, build_spec(args, model, m=m, kind=kind)


def cmd_moments(args, out) -> int:
    model = load_model(args)
    env = InterestEnvironment(args.interest)
    layout = Layout(args.layout)
    rows = []
    spec = None
    for kind, spec in sweep(args, model):
        result = compute_moment(kind, model, env, spec, layout)
        rows.append(_result_row(kind, spec, result, args.precision))
    payload = {"command": "moments", "spec": _spec_json(args, spec, model), "results": rows}
    _emit(payload, args.format, out)
    return EXIT_OK


def resolve_seed(args) -> int:
    env_seed = os.environ.get(SEED_ENV)
    if env_seed is not None and env_seed.strip():
        try:
            return int(env_seed)
        except ValueError:
            raise UsageError(f"{SEED_ENV} must be an integer, got {env_seed!r}") from None
    return args.seed


def cmd_compare(args, out) -> int:
    model = load_model(args)
    env = InterestEnvironment(args.interest)
    kind = Kind(args.kind)
    spec = build_spec(args, model)
    layout = Layout(args.layout)
    assumption = Assumption(args.assumption)
    result = compute_moment(kind, model, env, spec, layout)
    window = Window.for_contract(model, spec, layout)
    payoff = payoff_for(kind, env, spec.m, spec.j)
    quad = quadrature_expectation(model, assumption, payoff, window)
    seed = resolve_seed(args)
    mc, se = monte_carlo_expectation(model, assumption, payoff, window, args.samples, seed,
                                     workers=args.workers)
    abs_delta = abs(result.value - quad)
    rel_delta = abs_delta / abs(quad) if quad else abs_delta
    p = args.precision
    oracle = {
        "assumption": assumption.value,
        "quadrature": format_number(quad, p),
        "monte_carlo": format_number(mc, p),
        "monte_carlo_std_error": format_number(se, p),
        "monte_carlo_seed": seed,
        "samples": args.samples,
        "abs_delta": format_number(abs_delta, p),
        "rel_delta": format_number(rel_delta, p),
        "mc_sigmas": format_number(abs(mc - quad) / se, 4) if se > 0 else 0.0,
    }
    payload = {"command": "compare", "spec": _spec_json(args, spec, model),
               "results": [_result_row(kind, spec, result, p)], "oracle": oracle}
    _emit(payload, args.format, out)
    return EXIT_TOLERANCE if rel_delta > COMPARE_RTOL else EXIT_OK


def plot_rows(model, x, start, end, step, figure):
    """Grid rows (t, udd, balducci) on [start, end] in years since issue."""
    count = int(round((end - start) / step))
    if count < 1:
        raise UsageError("plot window is shorter than one step")
    fn = survival_fraction if figure == 1 else conditional_density
    rows = []
    for idx in range(count + 1):
        t = round(start + idx * step, 12)
        # integer t belongs to the year it starts, except the final grid point
        k = math.floor(t + 1e-9)
        frac = max(t - k, 0.0) if t - k > 1e-9 else 0.0
        if k >= end:
            k, frac = math.ceil(end) - 1, 1.0
        fa = FractionalAge(x, k, min(frac, 1.0))
        rows.append((t, fn(model, Assumption.UDD, fa), fn(model, Assumption.BALDUCCI, fa)))
    return rows


def cmd_plot_data(args, out) -> int:
    model = load_model(args)
    l, _ = parse_defer(args.defer)
    x = args.x if args.x is not None else model.base_age
    end = (model.horizon_age - x) if args.term is None else l + args.term
    rows = plot_rows(model, x, float(l), float(end), args.step, args.figure)
    name = "s" if args.figure == 1 else "f"
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["t", f"{name}_udd", f"{name}_balducci"])
    for t, udd, bal in rows:
        writer.writerow([repr(t), repr(format_number(udd, args.precision)),
                         repr(format_number(bal, args.precision))])
    return EXIT_OK


def _add_model_options(p):
    src = p.add_argument_group("mortality model")
    src.add_argument("--table", help="CSV file with header age,lx")
    src.add_argument("--law", help="parametric law, weibull:alpha:beta[:omega]")
    src.add_argument("--example", type=int, choices=(1, 2),
                     help="bundled example model (1: uniform table, 2: Weibull 50/3)")
    p.add_argument("--x", type=int, help="issue age (default: first model age)")
    p.add_argument("--defer", default="0", help="deferment L or L*N1")
    term = p.add_mutually_exclusive_group()
    term.add_argument("--term", type=int, help="term n in years")
    term.add_argument("--to-omega", action="store_true", help="run to the model horizon (default)")
    p.add_argument("--precision", type=int, default=10, help="significant digits")


def _add_contract_options(p, with_kind=True):
    p.add_argument("--interest", type=float, required=True, help="annual effective rate i")
    p.add_argument("--m", type=int, default=1, help="moment order")
    p.add_argument("--j", type=int, default=1, help="periods per year")
    p.add_argument("--layout", choices=[lay.value for lay in Layout], default="periodic")
    p.add_argument("--format", choices=("json", "csv"), default="json")
    if with_kind:
        p.add_argument("--kind", choices=[k.value for k in Kind], default="level")


class _Parser(argparse.ArgumentParser):
    """argparse exits with 2 on bad usage; 2 is reserved for compare failures here."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INVALID, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="balducci", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check a mortality CSV")
    p.add_argument("path", nargs="?")
    p.add_argument("--table")

    p = sub.add_parser("price", help="closed-form moment of one payoff")
    _add_model_options(p)
    _add_contract_options(p)

    p = sub.add_parser("moments", help="every payoff kind at m = 1, 2")
    _add_model_options(p)
    _add_contract_options(p, with_kind=False)

    p = sub.add_parser("compare", help="closed form vs quadrature and Monte Carlo")
    _add_model_options(p)
    _add_contract_options(p)
    p.add_argument("--assumption", choices=[a.value for a in Assumption], default="balducci")
    p.add_argument("--samples", type=int, default=200_000)
    p.add_argument("--seed", type=int, default=0, help=f"overridden by ${SEED_ENV}")
    p.add_argument("--workers", type=int, default=1)

    p = sub.add_parser("plot-data", help="grid of survival or density under UDD and Balducci")
    _add_model_options(p)
    p.add_argument("--figure", type=int, choices=(1, 2), default=1,
                   help="1: survival s, 2: conditional density f")
    p.add_argument("--step", type=float, default=0.01)
    return parser


_COMMANDS = {
    "validate": cmd_validate,
    "price": cmd_price,
    "moments": cmd_moments,
    "compare": cmd_compare,
    "plot-data": cmd_plot_data,
}


def main(argv=None, out=None) -> int:
    out = out or sys.stdout
    args = build_parser().parse_args(argv)
    if getattr(args, "step", 1.0) <= 0:
        print("error: --step must be positive", file=sys.stderr)
        return EXIT_INVALID
    try:
        return _COMMANDS[args.command](args, out)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (UsageError, TableError, DomainError, AgeRangeError, TruncationError,
            QuadratureError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


def run_to_string(argv) -> tuple[int, str]:
    """Run the CLI and capture stdout; handy for tests and notebooks."""
    buffer = io.StringIO()
    code = main(argv, out=buffer)
    return code, buffer.getvalue()


if __name__ == "__main__":
    sys.exit(main())
