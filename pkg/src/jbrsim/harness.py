"""Experiment runner: single runs, pause-time sweeps, and analytic tables."""

from __future__ import annotations

import csv
import dataclasses
import io
import itertools
import math
import statistics
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Callable, Iterable, Sequence, TextIO

from . import analytics as an
from .baseline import make_flood_agent
from .config import ConfigError, ScenarioConfig
from .jbr import make_jbr_agent
from .simcore import Network, Stats

PROTOCOLS: dict[str, Callable] = {"jbr": make_jbr_agent, "flood": make_flood_agent}


class SweepError(RuntimeError):
    """A sweep combination failed; the message names the combination."""


@dataclass(frozen=True)
class MetricsRecord:
    protocol: str
    pause_time: float
    node_count: int
    seed: int
    control_packet_count: int
    control_byte_count: int
    data_delivered: int
    data_generated: int
    delivery_ratio: float
    route_errors: int
    route_unreachables: int
    discovery_latency_mean: float

    @classmethod
    def from_stats(cls, protocol: str, config: ScenarioConfig, stats: Stats) -> "MetricsRecord":
        delivered = len(stats.delivered)
        generated = stats.generated
        return cls(
            protocol=protocol,
            pause_time=config.pause_time,
            node_count=config.node_count,
            seed=config.rng_seed,
            control_packet_count=stats.control_packets,
            control_byte_count=stats.control_bytes,
            data_delivered=delivered,
            data_generated=generated,
            delivery_ratio=delivered / generated if generated else 1.0,
            route_errors=stats.events["route_error"],
            route_unreachables=stats.events["route_unreachable"],
            discovery_latency_mean=statistics.fmean(stats.latencies) if stats.latencies else 0.0,
        )

    @property
    def sort_key(self) -> tuple:
        return (self.protocol, self.node_count, self.pause_time, self.seed)


COLUMNS = [f.name for f in fields(MetricsRecord)]
NUMERIC_COLUMNS = COLUMNS[4:]


def _cell(value) -> str:
    if isinstance(value, float):
        return f"{value:.6f}"
    return str(value)


def _write_rows(out: TextIO, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_cell(v) for v in row])


def write_records(records: Iterable[MetricsRecord], out: TextIO) -> None:
    _write_rows(out, COLUMNS, (dataclasses.astuple(r) for r in records))


def records_csv(records: Iterable[MetricsRecord]) -> str:
    buf = io.StringIO()
    write_records(records, buf)
    return buf.getvalue()


# -- single runs ------------------------------------------------------------------


def simulate(
    config: ScenarioConfig, protocol: str, *, check: bool = False, trace: TextIO | None = None
) -> tuple[MetricsRecord, Network]:
    """Run one scenario and hand back the network as well, for inspection."""
    if protocol not in PROTOCOLS:
        raise ConfigError(f"unknown protocol {protocol!r}; expected one of {sorted(PROTOCOLS)}")
    config.validate()
    net = Network(config, PROTOCOLS[protocol], trace=trace, check=check)
    stats = net.run_until(config.sim_duration)
    return MetricsRecord.from_stats(protocol, config, stats), net


def run_experiment(
    config: ScenarioConfig, protocol: str, *, check: bool = False, trace: TextIO | None = None
) -> MetricsRecord:
    return simulate(config, protocol, check=check, trace=trace)[0]


# -- sweeps -----------------------------------------------------------------------

DEFAULT_PAUSES = (0.0, 30.0, 60.0, 120.0, 300.0, 600.0, 900.0)


@dataclass(frozen=True)
class SweepSpec:
    pause_times: tuple[float, ...] = DEFAULT_PAUSES
    node_counts: tuple[int, ...] = (50, 100)
    seeds: tuple[int, ...] = (1,)
    protocols: tuple[str, ...] = ("jbr", "flood")

    def __post_init__(self) -> None:
        for name in ("pause_times", "node_counts", "seeds", "protocols"):
            if not getattr(self, name):
                raise ConfigError(f"sweep needs at least one entry in {name}")
        unknown = set(self.protocols) - set(PROTOCOLS)
        if unknown:
            raise ConfigError(f"unknown protocols {sorted(unknown)}")

    def combinations(self) -> list[tuple[str, int, float, int]]:
        combos = itertools.product(self.protocols, self.node_counts, self.pause_times, self.seeds)
        return sorted(set(combos))


def run_sweep(
    spec: SweepSpec,
    base: ScenarioConfig | None = None,
    *,
    out: TextIO | str | Path | None = None,
    check: bool = False,
    progress: Callable[[MetricsRecord], None] | None = None,
) -> list[MetricsRecord]:
    """Run the Cartesian product of ``spec``; both protocols of a pair see the
    same config and seed, hence the same traffic.  Rows are ordered by
    (protocol, node_count, pause_time, seed)."""
    base = base or ScenarioConfig()
    records = []
    for protocol, nodes, pause, seed in spec.combinations():
        try:
            config = base.replace(node_count=nodes, pause_time=pause, rng_seed=seed)
            record = run_experiment(config, protocol, check=check)
        except Exception as exc:
            raise SweepError(
                f"sweep aborted at protocol={protocol} node_count={nodes} pause_time={pause} seed={seed}: {exc}"
            ) from exc
        records.append(record)
        if progress is not None:
            progress(record)
    records.sort(key=lambda r: r.sort_key)
    if out is not None:
        _emit(out, lambda fh: write_records(records, fh))
    return records


def _emit(out: TextIO | str | Path, writer: Callable[[TextIO], None]) -> None:
    if isinstance(out, (str, Path)):
        with open(out, "w", encoding="utf-8", newline="") as fh:
            writer(fh)
    else:
        writer(out)


@dataclass(frozen=True)
class SummaryRow:
    protocol: str
    pause_time: float
    node_count: int
    runs: int
    means: dict[str, float] = field(default_factory=dict)
    stdevs: dict[str, float] = field(default_factory=dict)


def summarize(records: Iterable[MetricsRecord]) -> list[SummaryRow]:
    groups: dict[tuple, list[MetricsRecord]] = {}
    for r in sorted(records, key=lambda r: r.sort_key):
        groups.setdefault((r.protocol, r.node_count, r.pause_time), []).append(r)
    rows = []
    for (protocol, nodes, pause), members in groups.items():
        means, stdevs = {}, {}
        for col in NUMERIC_COLUMNS:
            values = [float(getattr(m, col)) for m in members]
            means[col] = statistics.fmean(values)
            stdevs[col] = statistics.stdev(values) if len(values) > 1 else 0.0
        rows.append(SummaryRow(protocol, pause, nodes, len(members), means, stdevs))
    return rows


SUMMARY_COLUMNS = ["protocol", "pause_time", "node_count", "runs"] + [
    f"{col}_{stat}" for col in NUMERIC_COLUMNS for stat in ("mean", "stddev")
]


def write_summary(rows: Iterable[SummaryRow], out: TextIO | str | Path) -> None:
    def body(fh: TextIO) -> None:
        _write_rows(
            fh,
            SUMMARY_COLUMNS,
            (
                [r.protocol, r.pause_time, r.node_count, r.runs]
                + [v for col in NUMERIC_COLUMNS for v in (r.means[col], r.stdevs[col])]
                for r in rows
            ),
        )

    _emit(out, body)


# -- analytic tables --------------------------------------------------------------

FORMULAS = (
    "p_route_broken",
    "p_routing_success",
    "expected_success_ratio",
    "expected_failure_ratio",
    "routing_cost",
    "p_janitor_route",
    "binomial_janitor_count",
    "p_discovery_success",
    "p_packet_success",
)


@dataclass(frozen=True)
class AnalyticRow:
    formula: str
    variant: str
    value: float | None
    mc_estimate: float | None = None
    mc_half_width: float | None = None

    @property
    def defined(self) -> bool:
        return self.value is not None


ANALYTIC_COLUMNS = ["formula", "variant", "value", "mc_estimate", "mc_half_width"] + [
    f.name for f in fields(an.AnalyticParams)
]


def _rows_for(formula: str, p: an.AnalyticParams, mc: bool, trials: int, seed: int) -> list[AnalyticRow]:
    def est(fn, *args):
        return fn(*args, trials=trials, seed=seed) if mc else None

    def row(variant, value, e=None, flip=False):
        if e is None:
            return AnalyticRow(formula, variant, value)
        mc_value = 1.0 - e.value if flip else e.value
        return AnalyticRow(formula, variant, value, mc_value, e.half_width)

    if formula == "p_route_broken":
        return [row("closed", an.p_route_broken(p.mu, p.lambda_rate), est(an.mc_route_broken, p.mu, p.lambda_rate))]
    if formula == "p_routing_success":
        e = est(an.mc_routing_success, p.p_l, p.p_js)
        return [row(mode, an.p_routing_success(p.p_l, p.p_js, mode), e) for mode in ("literal", "conjunction")]
    if formula == "expected_success_ratio":
        return [row("closed", an.expected_success_ratio(p.p_s, p.e_l, p.k, p.k_hat))]
    if formula == "expected_failure_ratio":
        return [row("closed", an.expected_failure_ratio(p.p_s, p.e_l, p.k, p.k_hat))]
    if formula == "routing_cost":
        cost = an.routing_cost(p)
        return [
            row("c_rf", cost.c_rf),
            row("c_rs", cost.c_rs),
            row("c_r_product", cost.c_r),
            row("c_r_bracket", cost.c_r_bracket),
        ]
    p_b = an.p_route_broken(p.mu, p.lambda_rate)
    if formula == "p_janitor_route":
        e = est(an.mc_janitor_route, p_b, p.e_n)
        return [
            row("literal", an.p_janitor_route(p_b, p.e_n, "literal"), e, flip=True),
            row("at-least-one", an.p_janitor_route(p_b, p.e_n, "at-least-one"), e),
        ]
    if formula == "binomial_janitor_count":
        tau = an.janitor_tau(p_b)
        return [row(f"K={k}", an.binomial_janitor_count(p.e_n, tau, k)) for k in range(p.e_n + 1)]
    if formula == "p_discovery_success":
        odds = an.discovery_odds(p.p_0, p.k_cap, p.e_n)
        return [
            row("p_r", odds.p_r, est(an.mc_discovery_success, p.p_0, p.k_cap, p.e_n)),
            row("p_f0", odds.p_f0),
            row("p_f1", odds.p_f1),
        ]
    if formula == "p_packet_success":
        scen = an.PacketScenario.from_params(p)
        value = an.packet_success_two_term(scen.link_failure, scen.e_l, scen.recovery)
        # this one has no trustworthy closed form, so the estimate is always produced
        e = an.p_packet_success_mc(scen, trials=trials, seed=seed)
        return [row("two-term", value, e)]
    raise an.DomainError(f"unknown formula {formula!r}")


def evaluate_analytics(
    params: an.AnalyticParams | None = None,
    selections: Iterable[str] | None = None,
    *,
    mc: bool = False,
    trials: int = an.DEFAULT_TRIALS,
    seed: int = 0,
) -> list[AnalyticRow]:
    params = params or an.AnalyticParams()
    chosen = list(FORMULAS if not selections else selections)
    rows = []
    for formula in chosen:
        if formula not in FORMULAS:
            raise an.DomainError(f"unknown formula {formula!r}; choose from {', '.join(FORMULAS)}")
        try:
            rows += _rows_for(formula, params, mc, trials, seed)
        except an.DomainError as exc:
            raise an.DomainError(f"{formula}: {exc}") from exc
    return rows


def write_analytics(rows: Iterable[AnalyticRow], params: an.AnalyticParams, out: TextIO) -> None:
    param_values = list(dataclasses.astuple(params))

    def fmt(v):
        if v is None:
            return "undefined"
        if isinstance(v, float) and math.isfinite(v):
            return f"{v:.12g}"
        return v

    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(ANALYTIC_COLUMNS)
    for r in rows:
        mc_cols = ["", ""] if r.mc_estimate is None else [fmt(r.mc_estimate), fmt(r.mc_half_width)]
        writer.writerow([r.formula, r.variant, fmt(r.value), *mc_cols, *(fmt(v) for v in param_values)])
