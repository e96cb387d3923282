"""Causal graphs for quasi-Markovian SCMs: validation, c-components, d-separation."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from typing import Hashable, Iterable, Mapping

from .errors import (
    CycleDetected,
    ExogenousHasParent,
    GraphError,
    MultipleExogenousParents,
    UnknownVariable,
)

ENDOGENOUS = "endogenous"
EXOGENOUS = "exogenous"
MAX_TABLE_VARIABLES = 20


@dataclass(frozen=True)
class CausalGraph:
    """DAG over endogenous and exogenous nodes.

    ``nodes`` keeps declaration order, which fixes parent ordering for
    canonical mechanism encodings and configuration enumeration.
    """

    nodes: tuple[tuple[str, str], ...]
    edges: tuple[tuple[str, str], ...]
    order: tuple[str, ...] | None = None
    cardinality: Mapping[str, int] | None = field(default=None, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "nodes", tuple((str(n), str(k)) for n, k in self.nodes))
        object.__setattr__(self, "edges", tuple((str(a), str(b)) for a, b in self.edges))
        if self.order is not None:
            object.__setattr__(self, "order", tuple(self.order))
        seen = set()
        for name, kind in self.nodes:
            if not name:
                raise GraphError("node names must be non-empty")
            if name in seen:
                raise GraphError(f"duplicate node {name!r}")
            if kind not in (ENDOGENOUS, EXOGENOUS):
                raise GraphError(f"node {name!r} has unknown kind {kind!r}")
            seen.add(name)
        for a, b in self.edges:
            for n in (a, b):
                if n not in seen:
                    raise UnknownVariable(n, "edge list")
        if len(set(self.edges)) != len(self.edges):
            raise GraphError("duplicate edge")
        card = dict(self.cardinality or {})
        for n in self.endogenous:
            card.setdefault(n, 2)
            if card[n] != 2:
                raise GraphError(f"only binary endogenous variables are supported ({n!r})")
        object.__setattr__(self, "cardinality", card)
        if self.order is not None:
            for n in self.order:
                if n not in seen:
                    raise UnknownVariable(n, "order")
                if self.kind(n) != ENDOGENOUS:
                    raise GraphError(f"order lists exogenous node {n!r}")

    @classmethod
    def from_edges(cls, endogenous, exogenous=(), edges=(), order=None):
        nodes = [(n, ENDOGENOUS) for n in endogenous] + [(n, EXOGENOUS) for n in exogenous]
        return cls(tuple(nodes), tuple(edges), order)

    # -- basic views -------------------------------------------------------

    @cached_property
    def _kinds(self) -> dict[str, str]:
        return dict(self.nodes)

    @cached_property
    def _index(self) -> dict[str, int]:
        return {n: i for i, (n, _) in enumerate(self.nodes)}

    @cached_property
    def _parents(self) -> dict[str, tuple[str, ...]]:
        out: dict[str, list[str]] = {n: [] for n, _ in self.nodes}
        for a, b in self.edges:
            out[b].append(a)
        idx = self._index
        return {n: tuple(sorted(ps, key=idx.__getitem__)) for n, ps in out.items()}

    @cached_property
    def _children(self) -> dict[str, tuple[str, ...]]:
        out: dict[str, list[str]] = {n: [] for n, _ in self.nodes}
        for a, b in self.edges:
            out[a].append(b)
        idx = self._index
        return {n: tuple(sorted(cs, key=idx.__getitem__)) for n, cs in out.items()}

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(n for n, _ in self.nodes)

    @cached_property
    def endogenous(self) -> tuple[str, ...]:
        return tuple(n for n, k in self.nodes if k == ENDOGENOUS)

    @cached_property
    def exogenous(self) -> tuple[str, ...]:
        return tuple(n for n, k in self.nodes if k == EXOGENOUS)

    @property
    def table_order(self) -> tuple[str, ...]:
        return self.order if self.order is not None else self.endogenous

    def __contains__(self, name) -> bool:
        return name in self._kinds

    def kind(self, name: str) -> str:
        try:
            return self._kinds[name]
        except KeyError:
            raise UnknownVariable(name) from None

    def is_endogenous(self, name: str) -> bool:
        return self.kind(name) == ENDOGENOUS

    def declaration_index(self, name: str) -> int:
        return self._index[name]

    def parents(self, name: str) -> tuple[str, ...]:
        self.kind(name)
        return self._parents[name]

    def children(self, name: str) -> tuple[str, ...]:
        self.kind(name)
        return self._children[name]

    def endogenous_parents(self, name: str) -> tuple[str, ...]:
        return tuple(p for p in self.parents(name) if self._kinds[p] == ENDOGENOUS)

    def exogenous_parents(self, name: str) -> tuple[str, ...]:
        return tuple(p for p in self.parents(name) if self._kinds[p] == EXOGENOUS)

    def exogenous_parent(self, name: str) -> str | None:
        ps = self.exogenous_parents(name)
        return ps[0] if ps else None

    def parents_map(self) -> dict[str, tuple[str, ...]]:
        return dict(self._parents)

    # -- order and reachability -------------------------------------------

    @cached_property
    def topological_order(self) -> tuple[str, ...]:
        """Kahn's algorithm; ties broken by declaration order."""
        indeg = {n: len(self._parents[n]) for n in self.names}
        idx = self._index
        ready = sorted((n for n, d in indeg.items() if d == 0), key=idx.__getitem__)
        out = []
        import heapq

        heap = [(idx[n], n) for n in ready]
        heapq.heapify(heap)
        while heap:
            _, n = heapq.heappop(heap)
            out.append(n)
            for c in self._children[n]:
                indeg[c] -= 1
                if indeg[c] == 0:
                    heapq.heappush(heap, (idx[c], c))
        if len(out) != len(self.names):
            raise CycleDetected(find_cycle(self._parents))
        return tuple(out)

    @cached_property
    def _topo_index(self) -> dict[str, int]:
        return {n: i for i, n in enumerate(self.topological_order)}

    def topo_key(self, name: str) -> int:
        return self._topo_index[name]

    def ancestors(self, names: Iterable[str], include_self: bool = False) -> set[str]:
        return _reach(self._parents, names, include_self)

    def descendants(self, names: Iterable[str], include_self: bool = False) -> set[str]:
        return _reach(self._children, names, include_self)

    # -- completion ---------------------------------------------------------

    def with_explicit_noise(self) -> "CausalGraph":
        """Give every endogenous node lacking an exogenous parent a private one.

        Drawn models usually omit independent noise terms; they are needed so
        that every c-component is paired with exactly one exogenous node.
        """
        missing = [v for v in self.endogenous if not self.exogenous_parents(v)]
        if not missing:
            return self
        taken = set(self.names)
        nodes = list(self.nodes)
        edges = list(self.edges)
        for v in missing:
            name = implicit_noise_name(v)
            while name in taken:
                name += "'"
            taken.add(name)
            nodes.append((name, EXOGENOUS))
            edges.append((name, v))
        return CausalGraph(tuple(nodes), tuple(edges), self.order, self.cardinality)

    def subgraph_without(self, removed: Iterable[str]) -> "CausalGraph":
        removed = set(removed)
        nodes = tuple(nk for nk in self.nodes if nk[0] not in removed)
        edges = tuple(e for e in self.edges if e[0] not in removed and e[1] not in removed)
        order = None
        if self.order is not None:
            order = tuple(n for n in self.order if n not in removed)
        return CausalGraph(nodes, edges, order, self.cardinality)


def implicit_noise_name(v: str) -> str:
    return f"U_{v}"


def _reach(adj, names, include_self):
    names = list(names)
    seen = set(names) if include_self else set()
    stack = list(names)
    while stack:
        n = stack.pop()
        for m in adj[n]:
            if m not in seen:
                seen.add(m)
                stack.append(m)
    return seen


def find_cycle(parents: Mapping[Hashable, Iterable[Hashable]]) -> list:
    """Return one directed cycle as a node list whose last entry repeats the first."""
    children: dict = {n: [] for n in parents}
    for n, ps in parents.items():
        for p in ps:
            children.setdefault(p, []).append(n)
    color = {n: 0 for n in children}
    stack_path: list = []

    def visit(n):
        color[n] = 1
        stack_path.append(n)
        for c in children[n]:
            if color[c] == 1:
                i = stack_path.index(c)
                return stack_path[i:] + [c]
            if color[c] == 0:
                found = visit(c)
                if found:
                    return found
        stack_path.pop()
        color[n] = 2
        return None

    for n in children:
        if color[n] == 0:
            found = visit(n)
            if found:
                return found
    return []


def validate_graph(g: CausalGraph) -> None:
    """Raise if ``g`` is not an acyclic quasi-Markovian graph."""
    for name in g.exogenous:
        if g.parents(name):
            raise ExogenousHasParent(name, g.parents(name)[0])
    for name in g.endogenous:
        exo = g.exogenous_parents(name)
        if len(exo) > 1:
            raise MultipleExogenousParents(name, exo)
    cycle = find_cycle(g.parents_map())
    if cycle:
        raise CycleDetected(cycle)


# -- c-components -------------------------------------------------------------


@dataclass(frozen=True)
class CComponent:
    """Endogenous members (topological order) and their exogenous node."""

    members: tuple[str, ...]
    exogenous: str

    def __contains__(self, v) -> bool:
        return v in self.members


def c_components(g: CausalGraph) -> list[CComponent]:
    validate_graph(g)
    full = g.with_explicit_noise()
    comps = []
    for u in full.exogenous:
        members = tuple(sorted(full.children(u), key=full.topo_key))
        if members:
            comps.append(CComponent(members, u))
    comps.sort(key=lambda c: min(c.members))
    return comps


def component_of(g: CausalGraph, v: str) -> CComponent:
    for c in c_components(g):
        if v in c.members:
            return c
    raise UnknownVariable(v)


def component_scope(g: CausalGraph, c: CComponent) -> tuple[str, ...]:
    """Order C ∪ (pa(C) ∩ V) topologically, placing members as early as possible.

    Any order consistent with ancestry is valid for the product factorization;
    scheduling outside parents late keeps each member's conditioning set small,
    so an estimated distribution is less likely to break implied independences.
    """
    members = set(c.members)
    scope = set(members)
    for v in c.members:
        scope.update(g.endogenous_parents(v))
    anc = {n: g.ancestors([n]) & scope for n in scope}
    placed: list[str] = []
    remaining = set(scope)
    while remaining:
        ready = [n for n in remaining if not (anc[n] & remaining)]
        ready.sort(key=lambda n: (n not in members, g.topo_key(n)))
        pick = ready[0]
        placed.append(pick)
        remaining.remove(pick)
    return tuple(placed)


def w_set(g: CausalGraph, v: str, c: CComponent) -> set[str]:
    """Endogenous variables preceding ``v`` within C ∪ pa(C)."""
    if v not in c.members:
        raise GraphError(f"{v!r} is not a member of component {c.members}")
    scope = component_scope(g, c)
    return set(scope[: scope.index(v)])


# -- d-separation ---------------------------------------------------------------


def _as_parents(g) -> Mapping:
    if isinstance(g, Mapping):
        return g
    return g.parents_map()


def d_separated(g, a: Iterable, b: Iterable, z: Iterable) -> bool:
    """Reachability ("Bayes ball") test for d-separation of ``a`` and ``b`` given ``z``.

    ``g`` is a :class:`CausalGraph`, any object with ``parents_map()``, or a
    mapping from node to its parents.
    """
    parents = _as_parents(g)
    a, b, z = set(a), set(b), set(z)
    if a & b:
        return False
    children: dict = {n: [] for n in parents}
    for n, ps in parents.items():
        for p in ps:
            children.setdefault(p, []).append(n)
    # ancestors of z (including z) decide whether colliders are open
    anc_z = set(z)
    stack = list(z)
    while stack:
        n = stack.pop()
        for p in parents.get(n, ()):
            if p not in anc_z:
                anc_z.add(p)
                stack.append(p)
    # (node, direction): "up" = arrived from a child, "down" = arrived from a parent
    queue = deque((n, "up") for n in a)
    visited = set()
    while queue:
        n, d = queue.popleft()
        if (n, d) in visited:
            continue
        visited.add((n, d))
        if n not in z and n in b:
            return False
        if d == "up" and n not in z:
            for p in parents.get(n, ()):
                queue.append((p, "up"))
            for c in children.get(n, ()):
                queue.append((c, "down"))
        elif d == "down":
            if n not in z:
                for c in children.get(n, ()):
                    queue.append((c, "down"))
            if n in anc_z:
                for p in parents.get(n, ()):
                    queue.append((p, "up"))
    return True
