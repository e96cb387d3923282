"""Root-cause path ranking driven by probability-of-causation scores.

Every upstream node gets a scalar score PC(X, Y). A depth-first walk from
the target towards the roots stops a branch when the score jumps by more
than ``alpha`` times the median of the jumps seen so far on that branch.
Each recorded path is scored by weighting its head by ``w`` and adding the
scores of the nodes between head and target.
"""

from __future__ import annotations

import math
import os
import statistics
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

from .distribution import JointTable
from .errors import PcrcaError
from .graph import CausalGraph
from .metrics import (
    MetricKind,
    ScalarizationKind,
    SolveOptions,
    evaluate_metric,
    scalarize,
)

TARGET_SCORE = 1.0


@dataclass(frozen=True)
class RcaConfig:
    alpha: float = 2.0
    w: float = 2.0
    metric: MetricKind = MetricKind.PN
    scalarization: ScalarizationKind = ScalarizationKind.MINIMUM
    include_pruned_parent: bool = False
    solve: SolveOptions = SolveOptions()

    def __post_init__(self):
        object.__setattr__(self, "metric", MetricKind.parse(self.metric))
        object.__setattr__(self, "scalarization", ScalarizationKind.parse(self.scalarization))
        if not self.alpha > 1:
            raise ValueError("alpha must be greater than 1")
        if not self.w >= 1:
            raise ValueError("w must be at least 1")


@dataclass(frozen=True)
class NodeScore:
    node: str
    lower: float
    upper: float
    scalar: float
    error: str | None = None


@dataclass(frozen=True)
class PcScoreTable:
    target: str
    metric: MetricKind
    scalarization: ScalarizationKind
    entries: tuple[NodeScore, ...]

    @property
    def scores(self) -> dict[str, float]:
        return {e.node: e.scalar for e in self.entries}

    @property
    def flagged(self) -> tuple[str, ...]:
        return tuple(e.node for e in self.entries if e.error is not None)


@dataclass(frozen=True)
class RankedPath:
    path: tuple[str, ...]
    score: float

    @property
    def head(self) -> str:
        return self.path[0]

    def __str__(self):
        return " -> ".join(self.path)


@dataclass(frozen=True)
class RcaReport:
    target: str
    config: RcaConfig
    table: PcScoreTable
    paths: tuple[RankedPath, ...]

    @property
    def top_root(self) -> str | None:
        return self.paths[0].head if self.paths else None


def _score_one(args) -> NodeScore:
    g, dist, x, y, cfg = args
    try:
        r = evaluate_metric(g, dist, cfg.metric, x, y, cfg.solve)
    except PcrcaError as e:
        return NodeScore(x, math.nan, math.nan, 0.0, f"{type(e).__name__}: {e}")
    return NodeScore(x, r.lower, r.upper, scalarize(r.interval, cfg.scalarization))


def default_workers() -> int:
    try:
        return max(1, int(os.environ.get("PCRCA_WORKERS", "1")))
    except ValueError:
        return 1


def score_nodes(
    g: CausalGraph, dist: JointTable, y: str, cfg: RcaConfig = RcaConfig(), workers: int | None = None
) -> PcScoreTable:
    """Scalar PC score for every endogenous ancestor of ``y``.

    Failures are recorded per node with score 0. Results do not depend on
    ``workers``; nodes are processed in declaration order.
    """
    if not g.is_endogenous(y):
        raise ValueError(f"target {y!r} is not endogenous")
    anc = g.ancestors([y])
    nodes = [v for v in g.endogenous if v in anc]
    jobs = [(g, dist, x, y, cfg) for x in nodes]
    workers = default_workers() if workers is None else workers
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            entries = list(pool.map(_score_one, jobs))
    else:
        entries = [_score_one(j) for j in jobs]
    return PcScoreTable(y, cfg.metric, cfg.scalarization, tuple(entries))


def _median(values: list[float]) -> float:
    return statistics.median(values)


def path_score(path: tuple[str, ...], pc: dict[str, float], w: float) -> float:
    """``w * PC(head) + sum of PC over the nodes strictly between head and target``."""
    if len(path) < 2:
        raise ValueError("a path needs at least a head and the target")
    head, middle = path[0], path[1:-1]
    return w * pc.get(head, 0.0) + sum(pc.get(v, 0.0) for v in middle)


def rank_paths(g: CausalGraph, t: PcScoreTable, y: str, cfg: RcaConfig = RcaConfig()) -> list[RankedPath]:
    pc = dict(t.scores)
    pc_of = lambda v: TARGET_SCORE if v == y else pc.get(v, 0.0)  # noqa: E731
    found: set[tuple[str, ...]] = set()

    def record(rev: list[str]):
        path = tuple(reversed(rev))
        if len(path) >= 2:
            found.add(path)

    def dfs(v: str, rev: list[str], deltas: list[float]):
        parents = g.endogenous_parents(v)
        if not parents:
            record(rev)
            return
        for p in parents:
            delta = abs(pc_of(p) - pc_of(v))
            if deltas and delta > cfg.alpha * _median(deltas):
                record(rev + [p] if cfg.include_pruned_parent else rev)
                continue
            dfs(p, rev + [p], deltas + [delta])

    dfs(y, [y], [])
    ranked = [RankedPath(p, path_score(p, pc, cfg.w)) for p in found]
    ranked.sort(key=lambda r: (-r.score, r.path))
    return ranked


def run_rca(
    g: CausalGraph, dist: JointTable, y: str, cfg: RcaConfig = RcaConfig(), workers: int | None = None
) -> RcaReport:
    table = score_nodes(g, dist, y, cfg, workers)
    paths = rank_paths(g, table, y, cfg)
    return RcaReport(y, cfg, table, tuple(paths))
