"""Command line entry point: ``jbrsim {run,sweep,analytic,trace}``.

Exit status is 0 on success, 1 for configuration or domain errors and 2 when
a checked invariant fails.
"""

from __future__ import annotations

import argparse
import sys
from contextlib import nullcontext
from dataclasses import fields
from typing import Sequence

from . import analytics as an
from . import harness
from .config import ConfigError, ScenarioConfig, load_config, parse_config
from .simcore import InvariantViolation


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # bad flags are a configuration problem, so they share exit status 1
    def error(self, message: str):
        raise UsageError(f"{self.prog}: {message}")


def _float_list(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(x) for x in text.split(",") if x.strip())
    except ValueError as exc:
        raise ConfigError(f"expected comma-separated numbers, got {text!r}") from exc


def _int_list(text: str) -> tuple[int, ...]:
    """Accepts ``1,2,5`` and ranges such as ``1-10``."""
    out: list[int] = []
    try:
        for part in filter(None, (p.strip() for p in text.split(","))):
            if "-" in part[1:]:
                lo, hi = part.split("-", 1)
                out.extend(range(int(lo), int(hi) + 1))
            else:
                out.append(int(part))
    except ValueError as exc:
        raise ConfigError(f"expected integers or ranges, got {text!r}") from exc
    return tuple(out)


def _scenario(args: argparse.Namespace) -> ScenarioConfig:
    config = load_config(args.config) if args.config else ScenarioConfig()
    if args.set:
        config = parse_config("\n".join(args.set), config)
    if args.command not in ("run", "trace"):
        return config
    overrides = {}
    for flag, name in (("seed", "rng_seed"), ("pause", "pause_time"), ("nodes", "node_count"), ("duration", "sim_duration")):
        value = getattr(args, flag, None)
        if value is not None:
            overrides[name] = value
    return config.replace(**overrides) if overrides else config


def _open_out(path: str | None):
    if path is None or path == "-":
        return nullcontext(sys.stdout)
    return open(path, "w", encoding="utf-8", newline="")


def _add_scenario_flags(p: argparse.ArgumentParser, single: bool) -> None:
    p.add_argument("--config", help="key=value scenario file")
    p.add_argument("--set", action="append", metavar="KEY=VALUE", help="override one scenario key (repeatable)")
    p.add_argument("--check", action="store_true", help="enable runtime invariant checks")
    if single:
        p.add_argument("--protocol", choices=sorted(harness.PROTOCOLS), default="jbr")
        p.add_argument("--seed", type=int)
        p.add_argument("--pause", type=float)
        p.add_argument("--nodes", type=int)
        p.add_argument("--duration", type=float)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="jbrsim", description="Janitor Based Routing simulator and analytic model")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    run = sub.add_parser("run", help="one experiment, one CSV row")
    _add_scenario_flags(run, single=True)
    run.add_argument("--out", help="CSV destination (default stdout)")

    sweep = sub.add_parser("sweep", help="pause-time sweep over seeds and protocols")
    _add_scenario_flags(sweep, single=False)
    sweep.add_argument("--pause-times", type=_float_list, default=harness.DEFAULT_PAUSES)
    sweep.add_argument("--nodes", type=_int_list, default=(50, 100))
    sweep.add_argument("--seeds", type=_int_list, default=(1,))
    sweep.add_argument("--protocols", type=lambda s: tuple(s.split(",")), default=("jbr", "flood"))
    sweep.add_argument("--out", help="CSV destination (default stdout)")
    sweep.add_argument("--summary", help="write per-point mean/stddev CSV here")
    sweep.add_argument("--quiet", action="store_true")

    ana = sub.add_parser("analytic", help="evaluate the closed-form model")
    ana.add_argument("--formula", action="append", choices=harness.FORMULAS, help="select a formula (repeatable)")
    ana.add_argument("--param", action="append", metavar="NAME=VALUE", help="override an analytic parameter")
    ana.add_argument("--mc", action="store_true", help="add Monte Carlo estimate columns")
    ana.add_argument("--trials", type=int, default=an.DEFAULT_TRIALS)
    ana.add_argument("--seed", type=int, default=0)
    ana.add_argument("--out")

    trace = sub.add_parser("trace", help="one run with an event trace")
    _add_scenario_flags(trace, single=True)
    trace.add_argument("--trace-out", help="trace destination (default stdout)")
    trace.add_argument("--out", help="CSV destination for the metrics row (default stderr)")
    return parser


def _analytic_params(pairs: Sequence[str] | None) -> an.AnalyticParams:
    types = {f.name: (int if f.type in ("int", int) else float) for f in fields(an.AnalyticParams)}
    changes = {}
    for pair in pairs or ():
        name, sep, raw = pair.partition("=")
        name = name.strip()
        if not sep or name not in types:
            raise an.DomainError(f"bad parameter {pair!r}; known: {', '.join(types)}")
        try:
            changes[name] = types[name](raw)
        except ValueError as exc:
            raise an.DomainError(f"bad value for {name}: {raw!r}") from exc
    return an.AnalyticParams(**changes)


def _cmd_run(args) -> None:
    record = harness.run_experiment(_scenario(args), args.protocol, check=args.check)
    with _open_out(args.out) as fh:
        harness.write_records([record], fh)


def _cmd_sweep(args) -> None:
    spec = harness.SweepSpec(args.pause_times, args.nodes, args.seeds, args.protocols)
    base = _scenario(args)

    def progress(r: harness.MetricsRecord) -> None:
        if not args.quiet:
            print(f"done {r.protocol} n={r.node_count} pause={r.pause_time:g} seed={r.seed}", file=sys.stderr)

    try:
        records = harness.run_sweep(spec, base, check=args.check, progress=progress)
    except harness.SweepError as exc:
        # surface the underlying category so the exit code stays meaningful
        cause = exc.__cause__
        if isinstance(cause, InvariantViolation):
            raise InvariantViolation(str(exc)) from cause
        if isinstance(cause, (ConfigError, an.DomainError)):
            raise ConfigError(str(exc)) from cause
        raise
    with _open_out(args.out) as fh:
        harness.write_records(records, fh)
    if args.summary:
        harness.write_summary(harness.summarize(records), args.summary)


def _cmd_analytic(args) -> None:
    params = _analytic_params(args.param)
    rows = harness.evaluate_analytics(params, args.formula, mc=args.mc, trials=args.trials, seed=args.seed)
    with _open_out(args.out) as fh:
        harness.write_analytics(rows, params, fh)


def _cmd_trace(args) -> None:
    with _open_out(args.trace_out) as fh:
        record = harness.run_experiment(_scenario(args), args.protocol, check=args.check, trace=fh)
    if args.out:
        with _open_out(args.out) as fh:
            harness.write_records([record], fh)
    else:
        harness.write_records([record], sys.stderr)


COMMANDS = {"run": _cmd_run, "sweep": _cmd_sweep, "analytic": _cmd_analytic, "trace": _cmd_trace}


def main(argv: Sequence[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        COMMANDS[args.command](args)
    except InvariantViolation as exc:
        print(f"invariant violation: {exc}", file=sys.stderr)
        return 2
    except (UsageError, ConfigError, an.DomainError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
