"""Counterfactual graphs for PN/PS/PNS and interventional graphs for w-PN/w-PS.

A node is copied into an intervention world only when it descends from the
intervened variable; every other node is shared with the factual world since
it has the same mechanism and the same inputs there.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from functools import cached_property
from types import MappingProxyType
from typing import Iterable, Mapping

from .distribution import JointTable
from .errors import GraphError, TargetNotDescendant
from .graph import CausalGraph, d_separated, validate_graph


@dataclass(frozen=True, order=True)
class WorldLabel:
    """``intervention`` is ``None`` for the factual world, else ``(variable, value)``."""

    intervention: tuple[str, int] | None = None

    @property
    def factual(self) -> bool:
        return self.intervention is None

    def __str__(self):
        if self.intervention is None:
            return "factual"
        return f"do({self.intervention[0]}={self.intervention[1]})"


FACTUAL = WorldLabel()


def do(var: str, value: int) -> WorldLabel:
    return WorldLabel((var, int(value)))


@dataclass(frozen=True, order=True)
class CfNode:
    base: str
    world: WorldLabel = FACTUAL
    shared: bool = False

    @property
    def name(self) -> str:
        if self.world.factual:
            return self.base
        x, v = self.world.intervention
        return f"{self.base}_{{{x}={v}}}"

    def __str__(self):
        return self.name


@dataclass(frozen=True, eq=False)
class FixedRoots:
    """Endogenous roots whose joint law is pinned to the input distribution."""

    nodes: tuple[CfNode, ...]
    table: JointTable


@dataclass(frozen=True, eq=False)
class CounterfactualGraph:
    source: CausalGraph
    family: str  # "twin", "pns" or "interventional"
    cause: str
    effect: str
    nodes: tuple[CfNode, ...]
    exogenous: tuple[str, ...]
    parents: Mapping[CfNode, tuple[CfNode, ...]]
    exo_parent: Mapping[CfNode, str | None]
    intervened: Mapping[CfNode, int]
    query: tuple[tuple[CfNode, int], ...]
    conditioning: tuple[tuple[CfNode, int], ...] = ()
    fixed_roots: tuple[FixedRoots, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "parents", MappingProxyType(dict(self.parents)))
        object.__setattr__(self, "exo_parent", MappingProxyType(dict(self.exo_parent)))
        object.__setattr__(self, "intervened", MappingProxyType(dict(self.intervened)))

    @cached_property
    def by_name(self) -> dict[str, CfNode]:
        return {n.name: n for n in self.nodes}

    def node(self, name: str) -> CfNode:
        return self.by_name[name]

    @property
    def anchors(self) -> tuple[CfNode, ...]:
        return tuple(n for n, _ in self.query) + tuple(n for n, _ in self.conditioning)

    @cached_property
    def fixed_nodes(self) -> frozenset[CfNode]:
        return frozenset(n for fr in self.fixed_roots for n in fr.nodes)

    def children_of_exo(self, u: str) -> tuple[CfNode, ...]:
        return tuple(n for n in self.nodes if self.exo_parent.get(n) == u)

    def parents_map(self) -> dict:
        """Parents over both endogenous CfNodes and exogenous names."""
        out: dict = {u: () for u in self.exogenous}
        for n in self.nodes:
            ps = list(self.parents[n])
            u = self.exo_parent.get(n)
            if u is not None:
                ps.append(u)
            out[n] = tuple(ps)
        return out

    def ancestors(self, items: Iterable, include_self=False) -> set:
        pm = self.parents_map()
        items = list(items)
        seen = set(items) if include_self else set()
        stack = list(items)
        while stack:
            n = stack.pop()
            for p in pm[n]:
                if p not in seen:
                    seen.add(p)
                    stack.append(p)
        return seen

    def descendants(self, items: Iterable, include_self=False) -> set:
        pm = self.parents_map()
        ch: dict = {k: [] for k in pm}
        for n, ps in pm.items():
            for p in ps:
                ch[p].append(n)
        items = list(items)
        seen = set(items) if include_self else set()
        stack = list(items)
        while stack:
            n = stack.pop()
            for c in ch[n]:
                if c not in seen:
                    seen.add(c)
                    stack.append(c)
        return seen

    @property
    def degree(self) -> int:
        return len(self.exogenous)

    def to_text(self) -> str:
        """One line per node (with world tag) and per edge; stable for golden files."""
        lines = [f"# {self.family} cause={self.cause} effect={self.effect}"]
        for n in self.nodes:
            tags = [str(n.world)]
            if n.shared:
                tags.append("shared")
            if n in self.intervened:
                tags.append(f"fixed={self.intervened[n]}")
            if n in self.fixed_nodes:
                tags.append("marginal")
            lines.append(f"node {n.name} [{' '.join(tags)}]")
        for u in self.exogenous:
            lines.append(f"node {u} [exogenous]")
        for n in self.nodes:
            for p in self.parents[n]:
                lines.append(f"edge {p.name} -> {n.name}")
            u = self.exo_parent.get(n)
            if u is not None:
                lines.append(f"edge {u} -> {n.name}")
        for n, v in self.query:
            lines.append(f"query {n.name}={v}")
        for n, v in self.conditioning:
            lines.append(f"given {n.name}={v}")
        for fr in self.fixed_roots:
            lines.append("marginal " + ",".join(n.name for n in fr.nodes))
        return "\n".join(lines) + "\n"


# -- builders -------------------------------------------------------------------


def _prepare(g: CausalGraph, x: str, y: str) -> tuple[CausalGraph, set[str]]:
    validate_graph(g)
    g = g.with_explicit_noise()
    if x == y:
        raise GraphError("cause and effect must differ")
    for v in (x, y):
        if not g.is_endogenous(v):
            raise GraphError(f"{v!r} is not endogenous")
    desc = g.descendants([x])
    if y not in desc:
        raise TargetNotDescendant(x, y)
    return g, desc


def _build(g, x, y, family, worlds, query_spec, conditioning_spec) -> CounterfactualGraph:
    g, desc = _prepare(g, x, y)

    def node_for(v: str, w: WorldLabel) -> CfNode:
        if w.factual:
            return CfNode(v, FACTUAL, shared=(v != x and v not in desc))
        if v == x or v in desc:
            return CfNode(v, w)
        return CfNode(v, FACTUAL, shared=True)

    parents: dict[CfNode, tuple[CfNode, ...]] = {}
    exo_parent: dict[CfNode, str | None] = {}
    intervened: dict[CfNode, int] = {}
    order: list[CfNode] = []
    for w in worlds:
        for v in g.topological_order:
            if not g.is_endogenous(v):
                continue
            n = node_for(v, w)
            if n in parents:
                continue
            if not w.factual and v == x:
                parents[n] = ()
                exo_parent[n] = None
                intervened[n] = w.intervention[1]
            else:
                parents[n] = tuple(node_for(p, w) for p in g.endogenous_parents(v))
                exo_parent[n] = g.exogenous_parent(v)
            order.append(n)

    query = tuple((node_for(b, w), val) for b, w, val in query_spec)
    conditioning = tuple((node_for(b, w), val) for b, w, val in conditioning_spec)

    # keep ancestors of the query and conditioning nodes only
    keep = set(n for n, _ in query + conditioning)
    stack = list(keep)
    while stack:
        n = stack.pop()
        for p in parents[n]:
            if p not in keep:
                keep.add(p)
                stack.append(p)
    nodes = tuple(n for n in order if n in keep)
    exo = []
    for n in nodes:
        u = exo_parent[n]
        if u is not None and u not in exo:
            exo.append(u)
    exo.sort(key=g.declaration_index)
    return CounterfactualGraph(
        source=g,
        family=family,
        cause=x,
        effect=y,
        nodes=nodes,
        exogenous=tuple(exo),
        parents={n: parents[n] for n in nodes},
        exo_parent={n: exo_parent[n] for n in nodes},
        intervened={n: v for n, v in intervened.items() if n in keep},
        query=query,
        conditioning=conditioning,
    )


def build_pn_ps_graph(g: CausalGraph, x_var: str, x_val: int, y_var: str) -> CounterfactualGraph:
    """Factual world plus ``do(x_var = x_val)``.

    ``x_val = 0`` encodes PN (query ``Y_{X=0}=0`` given ``X=1, Y=1``);
    ``x_val = 1`` encodes PS (query ``Y_{X=1}=1`` given ``X=0, Y=0``).
    """
    x_val = int(x_val)
    w = do(x_var, x_val)
    obs = 1 - x_val
    return _build(
        g, x_var, y_var, "twin", [FACTUAL, w],
        [(y_var, w, x_val)],
        [(x_var, FACTUAL, obs), (y_var, FACTUAL, obs)],
    )


def build_pns_graph(g: CausalGraph, x_var: str, y_var: str) -> CounterfactualGraph:
    w1, w0 = do(x_var, 1), do(x_var, 0)
    return _build(g, x_var, y_var, "pns", [w1, w0], [(y_var, w1, 1), (y_var, w0, 0)], [])


def build_interventional_graph(g: CausalGraph, x_var: str, x_val: int, y_var: str) -> CounterfactualGraph:
    """Single world ``do(x_var = x_val)`` with query ``Y = x_val`` (w-PN for 0, w-PS for 1)."""
    x_val = int(x_val)
    w = do(x_var, x_val)
    return _build(g, x_var, y_var, "interventional", [w], [(y_var, w, x_val)], [])


# -- reduction --------------------------------------------------------------------


@dataclass(frozen=True)
class ReductionReport:
    removed_exogenous: frozenset[str] = frozenset()
    removed_endogenous: frozenset[CfNode] = frozenset()
    separator: frozenset[CfNode] = frozenset()
    fixed_marginals: tuple[tuple[CfNode, ...], ...] = ()

    @property
    def empty(self) -> bool:
        return not (self.removed_exogenous or self.removed_endogenous or self.separator)

    def merge(self, other: "ReductionReport") -> "ReductionReport":
        return ReductionReport(
            self.removed_exogenous | other.removed_exogenous,
            self.removed_endogenous | other.removed_endogenous,
            self.separator | other.separator,
            self.fixed_marginals + other.fixed_marginals,
        )

    def summary(self) -> str:
        if self.empty:
            return "none"
        z = ",".join(sorted(n.name for n in self.separator))
        ex = ",".join(sorted(self.removed_exogenous))
        en = ",".join(sorted(n.name for n in self.removed_endogenous)) or "-"
        return f"Z={{{z}}} removed-exogenous={{{ex}}} removed-endogenous={{{en}}}"


def _frontier(cg: CounterfactualGraph, cands: list[CfNode]) -> list[CfNode]:
    cset = set(cands)
    inner = set()
    for c in cands:
        inner |= cg.ancestors([c]) & cset
    return [c for c in cands if c not in inner]


def _check_separator(cg: CounterfactualGraph, z: list[CfNode]):
    """Return (ancestors, offending candidates) for separator ``z``."""
    zset = set(z)
    anc = cg.ancestors(z) - zset
    pm = cg.parents_map()
    bad_nodes = set()
    for n, ps in pm.items():
        if n in anc or n in zset:
            continue
        for p in ps:
            if p in anc:
                bad_nodes.add(p)
    anchors = set(cg.anchors)
    for a in anc:
        if isinstance(a, CfNode):
            if a in cg.intervened or not a.world.factual or a in cg.fixed_nodes or a in anchors:
                bad_nodes.add(a)
    offenders = [c for c in z if cg.ancestors([c]) & bad_nodes]
    return anc, offenders


def _reduce_once(cg: CounterfactualGraph, dist: JointTable):
    anchors = set(cg.anchors)
    blocked = cg.descendants(anchors, include_self=True)
    cands = [
        n for n in cg.nodes
        if n.world.factual
        and n not in blocked
        and n not in cg.intervened
        and n not in cg.fixed_nodes
        and cg.ancestors([n])
    ]
    targets = [n for n, _ in cg.query]
    given = [n for n, _ in cg.conditioning]
    while cands:
        z = _frontier(cg, cands)
        anc, offenders = _check_separator(cg, z)
        if offenders:
            drop = set(offenders)
            cands = [c for c in cands if c not in drop]
            continue
        if not anc:
            break
        if d_separated(cg.parents_map(), anc, targets, set(z) | set(given)):
            return _apply_reduction(cg, dist, z, anc)
        cands = cands[:-1]
    return cg, ReductionReport()


def _apply_reduction(cg, dist, z, anc):
    removed_endo = {a for a in anc if isinstance(a, CfNode)}
    removed_exo = {a for a in anc if isinstance(a, str)}
    z = sorted(z, key=lambda n: cg.nodes.index(n))
    keep_nodes = tuple(n for n in cg.nodes if n not in removed_endo)
    parents = {n: (() if n in z else cg.parents[n]) for n in keep_nodes}
    exo_parent = {n: (None if n in z else cg.exo_parent[n]) for n in keep_nodes}
    exo = tuple(u for u in cg.exogenous if u not in removed_exo and any(v == u for v in exo_parent.values()))
    table = dist.marginal([n.base for n in z])
    fixed = cg.fixed_roots + (FixedRoots(tuple(z), table),)
    new = replace(
        cg,
        nodes=keep_nodes,
        exogenous=exo,
        parents=parents,
        exo_parent=exo_parent,
        intervened={n: v for n, v in cg.intervened.items() if n not in removed_endo},
        fixed_roots=fixed,
    )
    report = ReductionReport(
        frozenset(set(cg.exogenous) - set(exo)),
        frozenset(removed_endo),
        frozenset(z),
        (tuple(z),),
    )
    return new, report


def reduce(cg: CounterfactualGraph, dist: JointTable) -> tuple[CounterfactualGraph, ReductionReport]:
    """Remove the ancestors of a separating set and pin its law to ``dist``.

    Repeats until no further separator is found. A separator qualifies when
    it holds only factual (or shared) nodes that do not descend from any
    query or conditioning node, its ancestors reach the rest of the graph only
    through it, and it d-separates those ancestors from the query nodes given
    itself and the conditioning nodes.
    """
    report = ReductionReport()
    while True:
        cg, step = _reduce_once(cg, dist)
        if step.empty:
            return cg, report
        report = report.merge(step)
