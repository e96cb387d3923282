"""Ranking-matrix harness: simulate every narrative, run RCA per metric, tabulate roots."""

from __future__ import annotations

import zlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from typing import Iterable, Sequence

from ..distribution import estimate_distribution
from ..errors import PcrcaError
from ..metrics import MetricKind, ScalarizationKind
from ..rca import RcaConfig, run_rca
from .narratives import Narrative, bundled_narratives
from .scm import simulate

DEFAULT_SAMPLES = 200_000
DEFAULT_SMOOTHING = 1.0

MATCH = "match"
MISS = "miss"
PROXY = "expected proxy"
ERROR = "error"


@dataclass(frozen=True)
class Cell:
    metric: MetricKind
    scalarization: ScalarizationKind
    root: str | None
    status: str
    path: tuple[str, ...] = ()
    error: str | None = None


@dataclass(frozen=True)
class Row:
    model: str
    narrative: str
    ground_truth: str
    latent_truth: bool
    cells: tuple[Cell, ...]

    def cell(self, metric, scalarization=ScalarizationKind.MINIMUM) -> Cell:
        metric = MetricKind.parse(metric)
        scalarization = ScalarizationKind.parse(scalarization)
        for c in self.cells:
            if c.metric is metric and c.scalarization is scalarization:
                return c
        raise KeyError((metric, scalarization))


@dataclass(frozen=True)
class RankingMatrix:
    rows: tuple[Row, ...]
    columns: tuple[tuple[MetricKind, ScalarizationKind], ...]
    n: int
    seed: int

    def recovered(self, metric, scalarization=ScalarizationKind.MINIMUM) -> tuple[int, int]:
        """(hits, scored) over narratives whose truth is observable."""
        scored = [r for r in self.rows if not r.latent_truth]
        hits = sum(r.cell(metric, scalarization).status == MATCH for r in scored)
        return hits, len(scored)

    def _header(self, m: MetricKind, s: ScalarizationKind) -> str:
        if len({c[1] for c in self.columns}) == 1:
            return str(m)
        return f"{m}/{s}"

    def to_table(self) -> str:
        header = ["Model", "Narrative", "Ground truth"] + [self._header(m, s) for m, s in self.columns]
        body = []
        for r in self.rows:
            cells = []
            for c in r.cells:
                text = c.root if c.root is not None else "-"
                if c.status == MISS:
                    text += " *"
                elif c.status == PROXY:
                    text += " (proxy)"
                elif c.status == ERROR:
                    text = "error"
                cells.append(text)
            truth = r.ground_truth + (" (latent)" if r.latent_truth else "")
            body.append([r.model, r.narrative, truth] + cells)
        widths = [max(len(row[i]) for row in [header] + body) for i in range(len(header))]
        fmt = lambda row: "  ".join(v.ljust(w) for v, w in zip(row, widths)).rstrip()  # noqa: E731
        lines = [fmt(header), fmt(["-" * w for w in widths])] + [fmt(row) for row in body]
        footer = []
        for m, s in self.columns:
            hits, total = self.recovered(m, s)
            footer.append(f"{self._header(m, s)} {hits}/{total}")
        lines.append("")
        lines.append("recovered: " + ", ".join(footer) + "   (* = miss)")
        return "\n".join(lines)

    def records(self) -> list[dict]:
        out = []
        for r in self.rows:
            for c in r.cells:
                out.append(
                    {
                        "model": r.model,
                        "narrative": r.narrative,
                        "ground_truth": r.ground_truth,
                        "latent_truth": r.latent_truth,
                        "metric": str(c.metric),
                        "scalarization": str(c.scalarization),
                        "root": c.root,
                        "path": list(c.path),
                        "status": c.status,
                        "error": c.error,
                        "n": self.n,
                        "seed": self.seed,
                    }
                )
        return out


def narrative_seed(seed: int, n: Narrative) -> int:
    """Per-narrative stream derived from the run seed and the narrative key."""
    return (int(seed) * 1_000_003 + zlib.crc32(n.key.encode())) % (1 << 63)


def _status(n: Narrative, root: str | None) -> str:
    if root is None:
        return MISS
    if n.latent_truth:
        return PROXY if n.graph.is_endogenous(root) else MISS
    return MATCH if root == n.ground_truth else MISS


def _run_narrative(args) -> Row:
    n, columns, cfg, samples, seed, smoothing = args
    data = simulate(n.scm, samples, narrative_seed(seed, n))
    dist = estimate_distribution(data, smoothing)
    cells = []
    for m, s in columns:
        try:
            rep = run_rca(n.graph, dist, n.target, replace(cfg, metric=m, scalarization=s), workers=1)
        except PcrcaError as e:
            cells.append(Cell(m, s, None, ERROR, error=f"{type(e).__name__}: {e}"))
            continue
        root = rep.top_root
        path = rep.paths[0].path if rep.paths else ()
        cells.append(Cell(m, s, root, _status(n, root), path))
    return Row(n.model, n.id, n.ground_truth, n.latent_truth, tuple(cells))


def run_experiment(
    models: Iterable[str] | None = None,
    narratives: Sequence[Narrative] | Iterable[str] | None = None,
    metrics: Iterable = tuple(MetricKind),
    scalarizations: Iterable = (ScalarizationKind.MINIMUM,),
    cfg: RcaConfig = RcaConfig(),
    n: int = DEFAULT_SAMPLES,
    seed: int = 0,
    smoothing: float = DEFAULT_SMOOTHING,
    workers: int = 1,
) -> RankingMatrix:
    """Top-ranked root for every (narrative, metric, scalarization).

    ``narratives`` may be Narrative objects or ids such as ``"N1"``; None
    means every bundled narrative of the selected models. Each narrative is
    simulated once with its own derived seed, so the matrix does not depend
    on ``workers``.
    """
    pool = list(narratives) if narratives is not None else None
    if pool is None or any(isinstance(x, str) for x in pool):
        ids = set(pool) if pool is not None else None
        pool = [b for b in bundled_narratives() if ids is None or b.id in ids or b.key in ids]
    wanted = set(models) if models is not None else None
    pool = [p for p in pool if wanted is None or p.model in wanted]
    pool.sort(key=lambda p: (p.model, p.id))
    columns = tuple(
        (MetricKind.parse(m), ScalarizationKind.parse(s)) for m in metrics for s in scalarizations
    )
    jobs = [(p, columns, cfg, n, seed, smoothing) for p in pool]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            rows = list(ex.map(_run_narrative, jobs))
    else:
        rows = [_run_narrative(j) for j in jobs]
    return RankingMatrix(tuple(rows), columns, n, seed)
