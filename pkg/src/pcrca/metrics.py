"""Probabilities of causation as intervals, and their reduction to scalars."""

from __future__ import annotations

import enum
import time
from dataclasses import dataclass, field

from .cfgraph import (
    CounterfactualGraph,
    ReductionReport,
    build_interventional_graph,
    build_pn_ps_graph,
    build_pns_graph,
    reduce,
)
from .distribution import JointTable
from .graph import CausalGraph
from .program import Program, build_program
from .solve import DEFAULT_BUDGET, BoundInterval, Tolerances, optimize


class MetricKind(enum.Enum):
    PN = "PN"
    PS = "PS"
    PNS = "PNS"
    WPN = "wPN"
    WPS = "wPS"

    @classmethod
    def parse(cls, text: "str | MetricKind") -> "MetricKind":
        if isinstance(text, cls):
            return text
        key = str(text).replace("-", "").replace("_", "").lower()
        for m in cls:
            if m.value.lower() == key:
                return m
        raise ValueError(f"unknown metric {text!r}; choose from {', '.join(m.value for m in cls)}")

    def __str__(self):
        return self.value


class ScalarizationKind(enum.Enum):
    MINIMUM = "minimum"
    MAXIMUM = "maximum"
    MIDPOINT = "midpoint"
    MEAN = "mean"  # endpoint average, same as midpoint

    @classmethod
    def parse(cls, text: "str | ScalarizationKind") -> "ScalarizationKind":
        if isinstance(text, cls):
            return text
        key = str(text).lower()
        aliases = {"min": "minimum", "max": "maximum", "mid": "midpoint"}
        key = aliases.get(key, key)
        for s in cls:
            if s.value == key:
                return s
        raise ValueError(f"unknown scalarization {text!r}; choose from {', '.join(s.value for s in cls)}")

    def __str__(self):
        return self.value


def scalarize(i: BoundInterval, s: ScalarizationKind | str) -> float:
    s = ScalarizationKind.parse(s)
    if s is ScalarizationKind.MINIMUM:
        return i.lower
    if s is ScalarizationKind.MAXIMUM:
        return i.upper
    return 0.5 * (i.lower + i.upper)


def counterfactual_graph(g: CausalGraph, metric: MetricKind, x: str, y: str) -> CounterfactualGraph:
    metric = MetricKind.parse(metric)
    if metric is MetricKind.PN:
        return build_pn_ps_graph(g, x, 0, y)
    if metric is MetricKind.PS:
        return build_pn_ps_graph(g, x, 1, y)
    if metric is MetricKind.PNS:
        return build_pns_graph(g, x, y)
    if metric is MetricKind.WPN:
        return build_interventional_graph(g, x, 0, y)
    return build_interventional_graph(g, x, 1, y)


@dataclass(frozen=True)
class SolveOptions:
    use_reduction: bool = True
    budget: int = DEFAULT_BUDGET
    tolerances: Tolerances = Tolerances()
    method: str = "effective"
    seed: int = 0


@dataclass(frozen=True, eq=False)
class MetricResult:
    metric: MetricKind
    cause: str
    effect: str
    interval: BoundInterval
    reduction: ReductionReport
    program: Program
    timing: dict = field(default_factory=dict)

    @property
    def lower(self) -> float:
        return self.interval.lower

    @property
    def upper(self) -> float:
        return self.interval.upper

    @property
    def degree(self) -> int:
        return self.program.degree


def evaluate_metric(
    g: CausalGraph,
    dist: JointTable,
    metric: MetricKind | str,
    x: str,
    y: str,
    options: SolveOptions = SolveOptions(),
) -> MetricResult:
    metric = MetricKind.parse(metric)
    t0 = time.perf_counter()
    cg = counterfactual_graph(g, metric, x, y)
    report = ReductionReport()
    if options.use_reduction:
        cg, report = reduce(cg, dist)
    t1 = time.perf_counter()
    prog = build_program(cg, dist)
    t2 = time.perf_counter()
    interval = optimize(prog, options.budget, options.tolerances, options.method, options.seed)
    t3 = time.perf_counter()
    timing = {"graph": t1 - t0, "program": t2 - t1, "solve": t3 - t2, "total": t3 - t0}
    return MetricResult(metric, x, y, interval, report, prog, timing)


def bounds(
    g: CausalGraph,
    dist: JointTable,
    metric: MetricKind | str,
    x: str,
    y: str,
    use_reduction: bool = True,
    **kwargs,
) -> BoundInterval:
    """Tight interval for ``metric`` with cause ``x`` and effect ``y`` given ``dist``."""
    options = SolveOptions(use_reduction=use_reduction, **kwargs)
    return evaluate_metric(g, dist, metric, x, y, options).interval
