"""Fully specified SCMs: sampling, exact joints, and ground-truth counterfactuals.

Exogenous variables carry raw finite state spaces with a prior; every
endogenous node has a table ``f[u, config]`` over its exogenous parent's
state and its endogenous-parent configuration (first parent most significant).
Nodes without an exogenous parent use a single dummy state.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

import numpy as np

from ..canonical import canonical_space
from ..distribution import Dataset, JointTable
from ..errors import DistributionError, GraphError, ZeroConditioningEvent
from ..graph import ENDOGENOUS, CausalGraph, c_components, validate_graph
from ..metrics import MetricKind

SIM_CHUNK = 1 << 16


@dataclass(frozen=True, eq=False)
class FullScm:
    graph: CausalGraph
    priors: Mapping[str, np.ndarray]
    mechanisms: Mapping[str, np.ndarray]

    def __post_init__(self):
        validate_graph(self.graph)
        g = self.graph
        priors = {}
        for u in g.exogenous:
            if u not in self.priors:
                raise DistributionError(f"no prior for exogenous {u!r}")
            p = np.asarray(self.priors[u], dtype=float).reshape(-1)
            if p.size == 0 or np.any(p < 0) or abs(p.sum() - 1.0) > 1e-9:
                raise DistributionError(f"prior of {u!r} is not a probability vector")
            p.setflags(write=False)
            priors[u] = p
        mechs = {}
        for v in g.endogenous:
            if v not in self.mechanisms:
                raise GraphError(f"no mechanism for {v!r}")
            t = np.asarray(self.mechanisms[v]).astype(np.uint8)
            u = g.exogenous_parent(v)
            states = priors[u].size if u is not None else 1
            want = (states, 1 << len(g.endogenous_parents(v)))
            if t.shape != want or np.any(t > 1):
                raise GraphError(f"mechanism for {v!r} must be a 0/1 table of shape {want}")
            t.setflags(write=False)
            mechs[v] = t
        object.__setattr__(self, "priors", priors)
        object.__setattr__(self, "mechanisms", mechs)

    @classmethod
    def canonical(cls, g: CausalGraph, priors: Mapping[str, np.ndarray]) -> "FullScm":
        """SCM whose exogenous states are the canonical mechanism tuples of each component."""
        g = g.with_explicit_noise()
        mechs = {}
        for c in c_components(g):
            space = canonical_space(g, c)
            for v in c.members:
                mechs[v] = space.response(v)
        return cls(g, priors, mechs)

    @property
    def endogenous(self) -> tuple[str, ...]:
        return self.graph.table_order


# -- sampling ----------------------------------------------------------------------


def _propagate(scm: FullScm, states: Mapping[str, np.ndarray], n: int, do: Mapping[str, int] | None = None):
    g = scm.graph
    do = dict(do or {})
    values: dict[str, np.ndarray] = {}
    for v in g.topological_order:
        if g.kind(v) != ENDOGENOUS:
            continue
        if v in do:
            values[v] = np.full(n, do[v], dtype=np.uint8)
            continue
        cfg = np.zeros(n, dtype=np.int64)
        for p in g.endogenous_parents(v):
            cfg = (cfg << 1) | values[p]
        u = g.exogenous_parent(v)
        ustate = states[u] if u is not None else np.zeros(n, dtype=np.int64)
        values[v] = scm.mechanisms[v][ustate, cfg]
    return values


def simulate(scm: FullScm, n: int, seed: int) -> Dataset:
    """``n`` i.i.d. rows over the endogenous variables.

    Rows are produced in fixed-size chunks, each with its own child seed, so
    the result is independent of how chunks are scheduled.
    """
    if n < 0:
        raise ValueError("n must be non-negative")
    cols = scm.endogenous
    n_chunks = (n + SIM_CHUNK - 1) // SIM_CHUNK
    seeds = np.random.SeedSequence(seed).spawn(n_chunks)
    blocks = []
    exo = scm.graph.exogenous
    for i, ss in enumerate(seeds):
        m = min(SIM_CHUNK, n - i * SIM_CHUNK)
        rng = np.random.default_rng(ss)
        states = {u: rng.choice(scm.priors[u].size, size=m, p=scm.priors[u]) for u in exo}
        vals = _propagate(scm, states, m)
        blocks.append(np.stack([vals[c] for c in cols], axis=1))
    rows = np.concatenate(blocks) if blocks else np.zeros((0, len(cols)), dtype=np.uint8)
    return Dataset(cols, rows)


# -- exact computations ------------------------------------------------------------


def _indicator(scm: FullScm, v: str, do_value: int | None = None) -> np.ndarray:
    """Tensor ``I[u, v, pa_1, ..., pa_k]`` of the mechanism (or of a constant under ``do``)."""
    g = scm.graph
    t = scm.mechanisms[v]
    k = len(g.endogenous_parents(v))
    out = np.zeros((t.shape[0], 2) + (2,) * k)
    if do_value is not None:
        out = np.zeros((2,))
        out[do_value] = 1.0
        return out
    for cfg in range(1 << k):
        bits = tuple((cfg >> (k - 1 - i)) & 1 for i in range(k))
        col = t[:, cfg]
        out[(slice(None), 1) + bits] = col
        out[(slice(None), 0) + bits] = 1 - col
    return out


def _worlds_joint(scm: FullScm, worlds: list[dict[str, int] | None], keep: list[tuple[int, str]]) -> np.ndarray:
    """Exact joint of ``keep`` = [(world index, variable)] over copies sharing exogenous states.

    Every world carries a full copy of the endogenous variables; exogenous
    states are common to all worlds. No merging or pruning is done here.
    """
    g = scm.graph
    labels: dict = {}

    def lab(key):
        if key not in labels:
            labels[key] = len(labels)
        return labels[key]

    operands: list = []
    for u in g.exogenous:
        operands += [scm.priors[u], [lab(("u", u))]]
    for w, do in enumerate(worlds):
        do = do or {}
        for v in g.endogenous:
            if v in do:
                operands += [_indicator(scm, v, do[v]), [lab((w, v))]]
                continue
            u = g.exogenous_parent(v)
            ind = _indicator(scm, v)
            sub = [lab(("u", u)) if u is not None else lab(("dummy", v))]
            if u is None:
                ind = ind.sum(axis=0, keepdims=True)
            sub += [lab((w, v))] + [lab((w, p)) for p in g.endogenous_parents(v)]
            operands += [ind, sub]
    if len(labels) > 52:
        raise GraphError("model too large for exact enumeration")
    out = [lab(k) for k in keep]
    return np.einsum(*operands, out, optimize="greedy")


def exact_joint(scm: FullScm) -> JointTable:
    cols = list(scm.endogenous)
    t = _worlds_joint(scm, [None], [(0, v) for v in cols])
    probs = np.asarray(t).reshape(-1)
    return JointTable(tuple(cols), probs / probs.sum())


def ground_truth_metric(scm: FullScm, metric: MetricKind | str, x: str, y: str) -> float:
    """Exact PN/PS/PNS/w-PN/w-PS by summing over every exogenous state."""
    metric = MetricKind.parse(metric)
    if metric is MetricKind.PN or metric is MetricKind.PS:
        xv = 0 if metric is MetricKind.PN else 1
        t = _worlds_joint(scm, [None, {x: xv}], [(0, x), (0, y), (1, y)])
        obs = 1 - xv
        den = t[obs, obs].sum()
        if den <= 0:
            raise ZeroConditioningEvent({x: obs, y: obs})
        return float(t[obs, obs, xv] / den)
    if metric is MetricKind.PNS:
        t = _worlds_joint(scm, [{x: 1}, {x: 0}], [(0, y), (1, y)])
        return float(t[1, 0])
    xv = 0 if metric is MetricKind.WPN else 1
    t = _worlds_joint(scm, [{x: xv}], [(0, y)])
    return float(t[xv])


# -- random models ------------------------------------------------------------------


def random_graph(rng: np.random.Generator, n_endo: int, n_exo: int, max_in: int = 2) -> CausalGraph:
    """Random quasi-Markovian DAG where ``n_exo`` exogenous nodes cover all endogenous ones."""
    if not 1 <= n_exo <= n_endo:
        raise ValueError("need 1 <= n_exo <= n_endo")
    names = [f"V{i}" for i in range(n_endo)]
    edges = []
    for i in range(1, n_endo):
        k = int(rng.integers(0, min(i, max_in) + 1))
        for j in sorted(rng.choice(i, size=k, replace=False).tolist()):
            edges.append((names[j], names[i]))
    owner = list(range(n_exo)) + rng.integers(0, n_exo, size=n_endo - n_exo).tolist()
    owner = rng.permutation(owner)
    exo = [f"U{i}" for i in range(n_exo)]
    edges += [(exo[o], names[i]) for i, o in enumerate(owner)]
    return CausalGraph.from_edges(names, exo, edges)


def random_scm(
    rng: np.random.Generator,
    n_endo: int | None = None,
    n_exo: int | None = None,
    states: int = 4,
    max_in: int = 2,
    full_support: bool = True,
    require_pair: bool = True,
    attempts: int = 200,
) -> FullScm:
    """Random SCM with raw exogenous states and random mechanism tables.

    With ``full_support`` the exact joint puts positive mass on every cell,
    so every conditional the bounds need is defined.
    """
    for _ in range(attempts):
        ne = int(n_endo if n_endo is not None else rng.integers(2, 7))
        nx = int(n_exo if n_exo is not None else rng.integers(1, min(3, ne) + 1))
        g = random_graph(rng, ne, nx, max_in)
        if require_pair and not any(g.descendants([v]) & set(g.endogenous) for v in g.endogenous):
            continue
        priors = {}
        mechs = {}
        for u in g.exogenous:
            c = len(g.children(u))
            # enough states to cover every joint cell of the children
            k = max(states * c, 2 ** (c + 1))
            priors[u] = rng.dirichlet(np.ones(k))
        for v in g.endogenous:
            u = g.exogenous_parent(v)
            k = priors[u].size
            mechs[v] = rng.integers(0, 2, size=(k, 1 << len(g.endogenous_parents(v))))
        scm = FullScm(g, priors, mechs)
        if full_support and exact_joint(scm).probabilities.min() < 1e-6:
            continue
        return scm
    raise RuntimeError("could not draw a random SCM with the requested properties")


def cause_effect_pairs(g: CausalGraph) -> list[tuple[str, str]]:
    return [(x, y) for x in g.endogenous for y in sorted(g.descendants([x]) & set(g.endogenous))]
