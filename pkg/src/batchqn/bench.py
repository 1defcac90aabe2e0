"""Benchmark runner: metric tables per configuration and ratio comparisons."""
from __future__ import annotations

import csv
import io
import statistics
from dataclasses import dataclass, field, fields
from typing import Any, Sequence

from .core import CountingObjective
from .problems import make_curve_problem, make_expectation_problem, make_rosenbrock
from .solver import SolverParams, Status, minimize

COLUMNS = ("label", "time", "iterations", "value", "forward", "reverse", "ls_iterations")

VARIANTS: dict[str, dict[str, Any]] = {
    "baseline-legacy": dict(legacy_interface=True, batch=1),
    "coupled-interface": dict(legacy_interface=True, batch=1),
    "split-interface": dict(batch=4, ls_batching=False, polyfit_order=0),
    "W1": dict(batch=1),
    "W4": dict(batch=4, polyfit_order=0),
    "W4-polyfit": dict(batch=4),
    "W8": dict(batch=8, polyfit_order=0),
    "W8-polyfit": dict(batch=8),
}

WIDTH_VARIANTS = ("baseline-legacy", "W4", "W4-polyfit", "W8", "W8-polyfit")


@dataclass(frozen=True)
class ProblemSpec:
    seed: int
    solver: dict[str, Any]
    variants: tuple[str, ...]
    options: dict[str, Any] = field(default_factory=dict)


PROBLEM_SPECS = {
    "curve": ProblemSpec(
        seed=1,
        solver=dict(eps_rel=3e-4, linesearch="backtracking-wolfe"),
        variants=WIDTH_VARIANTS,
    ),
    "expectation": ProblemSpec(
        seed=7,
        solver=dict(eps_rel=1e-6, h=1e-5, c2=0.1, linesearch="bracketing-wolfe"),
        variants=("coupled-interface", "split-interface"),
        options=dict(n=4, m=8, paths=1000, target_noise=0.01),
    ),
    "rosenbrock": ProblemSpec(
        seed=0,
        solver=dict(eps_rel=0.0, eps_abs=1e-10, linesearch="backtracking-wolfe"),
        variants=WIDTH_VARIANTS,
        options=dict(n=2),
    ),
}


class BenchError(ValueError):
    """Bad benchmark request (unknown problem or variant, refused comparison)."""


def build_problem(name: str, seed: int, options: dict[str, Any] | None = None):
    options = dict(options or {})
    if name == "curve":
        return make_curve_problem(seed)
    if name == "expectation":
        return make_expectation_problem(seed, **options)
    if name == "rosenbrock":
        return make_rosenbrock(**options)
    raise BenchError(f"unknown problem {name!r}; known problems: {', '.join(sorted(PROBLEM_SPECS))}")


def make_params(settings: dict[str, Any]) -> SolverParams:
    settings = dict(settings)
    linesearch = settings.pop("linesearch", None)
    params = SolverParams(**settings)
    return params.with_linesearch(linesearch) if linesearch else params


@dataclass(frozen=True)
class BenchConfig:
    """What to run.

    ``overrides`` apply to every variant (any :class:`SolverParams` field plus
    ``linesearch``).  ``variants`` maps labels to per-variant settings;
    ``None`` selects the problem's default set.
    """

    problem: str = "curve"
    seed: int | None = None
    overrides: dict[str, Any] = field(default_factory=dict)
    variants: dict[str, dict[str, Any]] | None = None
    repetitions: int = 1
    fmt: str = "csv"
    problem_options: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if self.problem not in PROBLEM_SPECS:
            raise BenchError(
                f"unknown problem {self.problem!r}; known problems: {', '.join(sorted(PROBLEM_SPECS))}")
        if self.repetitions < 1:
            raise BenchError("repetitions must be >= 1")
        if self.fmt not in ("csv", "markdown"):
            raise BenchError(f"unknown format {self.fmt!r}")
        for settings in self.resolved_variants().values():
            make_params(self.settings_for(settings))

    @property
    def spec(self) -> ProblemSpec:
        return PROBLEM_SPECS[self.problem]

    @property
    def resolved_seed(self) -> int:
        return self.spec.seed if self.seed is None else self.seed

    def resolved_variants(self) -> dict[str, dict[str, Any]]:
        if self.variants is not None:
            return dict(self.variants)
        return {name: VARIANTS[name] for name in self.spec.variants}

    def settings_for(self, variant: dict[str, Any]) -> dict[str, Any]:
        return {**self.spec.solver, **variant, **self.overrides}


def variants_by_name(names: Sequence[str]) -> dict[str, dict[str, Any]]:
    unknown = [n for n in names if n not in VARIANTS]
    if unknown:
        raise BenchError(f"unknown variants {unknown}; known: {', '.join(VARIANTS)}")
    return {n: VARIANTS[n] for n in names}


@dataclass(frozen=True)
class BenchRow:
    label: str
    time: float
    iterations: int
    value: float
    forward: int
    reverse: int
    ls_iterations: int
    problem: str = ""
    seed: int = 0


@dataclass
class BenchTable:
    problem: str
    seed: int
    rows: list[BenchRow]
    failures: list[str] = field(default_factory=list)

    def row(self, label: str) -> BenchRow:
        for r in self.rows:
            if r.label == label:
                return r
        raise KeyError(label)


def run_variant(config: BenchConfig, settings: dict[str, Any]):
    problem, x0 = build_problem(config.problem, config.resolved_seed,
                                {**config.spec.options, **config.problem_options})
    params = make_params(config.settings_for(settings))
    objective = CountingObjective(problem, params.batch)
    x, metrics = minimize(objective, x0, params)
    return x, metrics


def run_bench(config: BenchConfig) -> BenchTable:
    """Run every variant ``repetitions`` times; one row per variant.

    All columns except ``time`` must agree across repetitions; ``time`` is the
    median.
    """
    seed = config.resolved_seed
    table = BenchTable(config.problem, seed, [])
    for label, settings in config.resolved_variants().items():
        times, key = [], None
        for _ in range(config.repetitions):
            _, m = run_variant(config, settings)
            c = m.counters
            this = (m.iterations, m.value, c.forward_calls, c.reverse_calls, c.ls_iterations)
            if key is not None and this != key:
                raise RuntimeError(f"variant {label} is not deterministic: {key} != {this}")
            key = this
            times.append(m.wall_time)
        if m.status is Status.LINESEARCH_FAILED:
            table.failures.append(label)
        table.rows.append(BenchRow(label, statistics.median(times), *key,
                                   problem=config.problem, seed=seed))
    return table


def _fmt(v) -> str:
    return repr(v) if isinstance(v, float) else str(v)


def to_csv(table: BenchTable) -> str:
    buf = io.StringIO()
    meta = f"# problem={table.problem} seed={table.seed}"
    if table.failures:
        meta += " failed=" + ",".join(table.failures)
    buf.write(meta + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(COLUMNS)
    for r in table.rows:
        w.writerow([_fmt(getattr(r, c)) for c in COLUMNS])
    return buf.getvalue()


def from_csv(text: str) -> BenchTable:
    lines = text.splitlines()
    meta = {}
    if lines and lines[0].startswith("#"):
        meta = dict(tok.split("=", 1) for tok in lines[0][1:].split())
        lines = lines[1:]
    reader = csv.DictReader(lines)
    if tuple(reader.fieldnames or ()) != COLUMNS:
        raise ValueError(f"unexpected CSV columns {reader.fieldnames}")
    problem, seed = meta.get("problem", ""), int(meta.get("seed", 0))
    types = {f.name: f.type for f in fields(BenchRow)}
    conv = {"str": str, "float": float, "int": int}
    rows = [BenchRow(**{c: conv[types[c]](rec[c]) for c in COLUMNS}, problem=problem, seed=seed)
            for rec in reader]
    failures = meta["failed"].split(",") if meta.get("failed") else []
    return BenchTable(problem, seed, rows, failures)


def to_markdown(table: BenchTable) -> str:
    out = [f"problem: {table.problem}, seed: {table.seed}", "",
           "| " + " | ".join(COLUMNS) + " |",
           "|" + "---|" * len(COLUMNS)]
    for r in table.rows:
        out.append(f"| {r.label} | {r.time * 1e3:.1f} ms | {r.iterations} | {r.value:.3e} | "
                   f"{r.forward} | {r.reverse} | {r.ls_iterations} |")
    if table.failures:
        out += ["", "line search failed: " + ", ".join(table.failures)]
    return "\n".join(out) + "\n"


RATIO_FIELDS = ("iterations", "forward", "reverse", "ls_iterations", "time")


@dataclass
class Comparison:
    baseline: str
    variant: str
    ratios: dict[str, float]
    thresholds: dict[str, float]
    passed: dict[str, bool]

    @property
    def ok(self) -> bool:
        return all(self.passed.values())

    def lines(self) -> list[str]:
        out = []
        for k, r in self.ratios.items():
            mark = ""
            if k in self.thresholds:
                mark = f"  (>= {self.thresholds[k]:g}: {'PASS' if self.passed[k] else 'FAIL'})"
            out.append(f"{self.baseline} / {self.variant} {k}: {r:.3f}{mark}")
        return out


def _ratio(a: float, b: float) -> float:
    if a == b:
        return 1.0
    return a / b if b else float("inf")


def compare(baseline: BenchRow, variant: BenchRow,
            thresholds: dict[str, float] | None = None) -> Comparison:
    """Baseline-over-variant ratios; a threshold is the minimum ratio to pass.

    ``time`` may be thresholded by the caller but call counts are the
    portable measure.
    """
    if (baseline.problem, baseline.seed) != (variant.problem, variant.seed):
        raise BenchError(
            f"refusing to compare {baseline.problem}/seed {baseline.seed} "
            f"with {variant.problem}/seed {variant.seed}")
    thresholds = dict(thresholds or {})
    unknown = set(thresholds) - set(RATIO_FIELDS)
    if unknown:
        raise BenchError(f"unknown threshold fields {sorted(unknown)}")
    ratios = {k: _ratio(getattr(baseline, k), getattr(variant, k)) for k in RATIO_FIELDS}
    passed = {k: ratios[k] >= t for k, t in thresholds.items()}
    return Comparison(baseline.label, variant.label, ratios, thresholds, passed)

