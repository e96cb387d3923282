"""Linear constraint systems and multilinear objectives over canonical exogenous states.

Each surviving exogenous variable ``U`` gets a polytope of distributions ``q_U``
over its canonical states, constrained so the c-component reproduces the
observed factor ``prod P(V | W_V)``. The numerator ``P(query, conditioning)``
is multilinear in the ``q_U``. It is kept as a tensor network: every ``q_U``
enters only through ``Q_U = R_U^T q_U``, where ``R_U`` is the 0/1 response of
the component's copies in every world to their parents.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import cached_property
from typing import Mapping, Sequence

import numpy as np

from .canonical import CanonicalSpace, canonical_space
from .cfgraph import CfNode, CounterfactualGraph
from .distribution import JointTable
from .errors import DegreeTooHigh, UnknownVariable, ZeroConditioningEvent
from .graph import CComponent, c_components, component_scope, w_set

# einsum accepts at most 52 distinct sublist labels
_MAX_LABELS = 52
POLYNOMIAL_TERM_LIMIT = 1 << 22


@dataclass(frozen=True, eq=False)
class PolytopeSpec:
    """``{q >= 0 : matrix @ q = rhs}``; the last row is the normalization."""

    exo: str
    space: CanonicalSpace
    scope: tuple[str, ...]
    matrix: np.ndarray
    rhs: np.ndarray
    labels: tuple[str, ...]

    @property
    def dimension(self) -> int:
        return self.space.cardinality

    @property
    def n_rows(self) -> int:
        return self.matrix.shape[0]

    def residual(self, q: np.ndarray) -> float:
        return float(np.max(np.abs(self.matrix @ q - self.rhs)))

    def to_text(self) -> str:
        lines = [
            f"polytope {self.exo} dimension {self.dimension} "
            f"members {','.join(self.space.component.members)} scope {','.join(self.scope) or '-'}"
        ]
        for label, row, b in zip(self.labels, self.matrix, self.rhs):
            idx = " ".join(str(j) for j in np.flatnonzero(row))
            lines.append(f"  {label:<{max(len(self.scope), 4)}} = {b:.12g} : {idx}")
        return "\n".join(lines)


@dataclass(frozen=True, eq=False)
class Polynomial:
    """Sum of ``coefficient * prod_U q_U[state]`` with one state per variable."""

    variables: tuple[str, ...]
    terms: tuple[tuple[float, tuple[int, ...]], ...]

    @property
    def degree(self) -> int:
        if not self.terms:
            return 0
        return len(self.variables)

    def monomials(self):
        for coef, states in self.terms:
            yield coef, dict(zip(self.variables, states))

    def evaluate(self, q: Mapping[str, np.ndarray]) -> float:
        total = 0.0
        for coef, states in self.terms:
            term = coef
            for u, s in zip(self.variables, states):
                term *= q[u][s]
            total += term
        return float(total)

    def to_text(self) -> str:
        if not self.terms:
            return "objective 0"
        lines = [f"objective degree {self.degree} terms {len(self.terms)}"]
        for coef, states in self.terms:
            mono = " ".join(f"q[{u}][{s}]" for u, s in zip(self.variables, states))
            lines.append(f"  {coef:.12g} * {mono}")
        return "\n".join(lines)


@dataclass(frozen=True, eq=False)
class ResponseFactor:
    """0/1 tensor ``R[u, a_1, ..., a_k]`` over the free axes touched by one exogenous variable."""

    exo: str
    axes: tuple[CfNode, ...]
    tensor: np.ndarray

    @property
    def cardinality(self) -> int:
        return self.tensor.shape[0]

    @cached_property
    def matrix(self) -> np.ndarray:
        return self.tensor.reshape(self.cardinality, -1).astype(float)


@dataclass(frozen=True, eq=False)
class WeightFactor:
    axes: tuple[CfNode, ...]
    tensor: np.ndarray


@dataclass(frozen=True, eq=False)
class ObjectiveNetwork:
    """Tensor network whose full contraction is the numerator probability."""

    factors: tuple[ResponseFactor, ...]
    weights: tuple[WeightFactor, ...]
    axes: tuple[CfNode, ...]
    zero: bool = False

    @property
    def exogenous(self) -> tuple[str, ...]:
        return tuple(f.exo for f in self.factors)

    @cached_property
    def _labels(self) -> dict[CfNode, int]:
        return {a: i for i, a in enumerate(self.axes)}

    def _operands(self, marginals, mode: str, skip: int | None = None):
        """einsum operands for batched marginals ``(n_j, D_j)``.

        ``mode='outer'`` gives every factor its own batch axis; ``mode='diag'``
        shares one batch axis across factors (row ``s`` of each factor together).
        """
        label = self._labels
        n_axes = len(self.axes)
        operands: list = []
        out: list[int] = []
        next_batch = n_axes
        for j, (f, m) in enumerate(zip(self.factors, marginals)):
            if j == skip:
                continue
            m = np.asarray(m, dtype=float)
            sub = [label[a] for a in f.axes]
            if mode == "outer":
                b = next_batch
                next_batch += 1
                out.append(b)
            else:
                b = n_axes
                if not out:
                    out.append(b)
                    next_batch = n_axes + 1
            operands += [m.reshape((m.shape[0],) + (2,) * len(f.axes)), [b] + sub]
        if next_batch > _MAX_LABELS:
            raise DegreeTooHigh(f"objective network needs {next_batch} tensor labels (limit {_MAX_LABELS})")
        for w in self.weights:
            operands += [w.tensor, [label[a] for a in w.axes]]
        return operands, out

    def contract(self, marginals: Sequence[np.ndarray], mode: str = "outer") -> np.ndarray:
        """Contract with batched per-factor marginals ``Q_j`` of shape ``(n_j, D_j)``.

        Returns an array with one axis per factor (``outer``) or a single axis (``diag``).
        """
        if self.zero:
            if mode == "outer":
                return np.zeros([np.shape(m)[0] for m in marginals])
            return np.zeros(np.shape(marginals[0])[0] if marginals else ())
        operands, out = self._operands(marginals, mode)
        if not operands:
            return np.asarray(1.0)
        # scalar operands (weights with every axis fixed) are fine for einsum
        return np.asarray(np.einsum(*operands, out, optimize="greedy"))

    def value(self, qs: Sequence[np.ndarray]) -> float:
        marg = [np.asarray(q, dtype=float)[None, :] @ f.matrix for f, q in zip(self.factors, qs)]
        return float(np.asarray(self.contract(marg, "diag")).reshape(-1)[0]) if marg else float(self.contract([]))

    def values(self, qs: Sequence[np.ndarray]) -> np.ndarray:
        """Objective at rows of ``qs[j]`` taken together (all with the same number of rows)."""
        marg = [np.asarray(q, dtype=float) @ f.matrix for f, q in zip(self.factors, qs)]
        return np.asarray(self.contract(marg, "diag")).reshape(-1)

    def gradient(self, i: int, marginals: Sequence[np.ndarray | None], mode: str = "outer") -> np.ndarray:
        """Coefficient vector of ``Q_i`` for each batch of the other factors' marginals.

        Returns shape ``(rows, D_i)``.
        """
        d = 1 << len(self.factors[i].axes)
        if self.zero:
            return np.zeros((1, d))
        operands, out = self._operands(marginals, mode, skip=i)
        own = [self._labels[a] for a in self.factors[i].axes]
        # a ones tensor pins factor i's axes in the output even if nothing else touches them
        operands += [np.ones((2,) * len(own)), own]
        res = np.einsum(*operands, out + own, optimize="greedy")
        return np.asarray(res).reshape(-1, d)


@dataclass(frozen=True, eq=False)
class Program:
    cg: CounterfactualGraph
    polytopes: tuple[PolytopeSpec, ...]
    network: ObjectiveNetwork
    denominator: float
    event: str

    @property
    def degree(self) -> int:
        return 0 if self.network.zero else len(self.polytopes)

    @cached_property
    def objective(self) -> Polynomial:
        return build_polynomial(self.network)

    def evaluate(self, qs: Mapping[str, np.ndarray] | Sequence[np.ndarray]) -> float:
        """Objective divided by the denominator at a point of the product of polytopes."""
        if isinstance(qs, Mapping):
            qs = [qs[p.exo] for p in self.polytopes]
        return self.network.value(qs) / self.denominator

    def to_text(self, include_objective: bool = True) -> str:
        lines = [f"# event {self.event}", f"denominator {self.denominator:.12g}"]
        for p in self.polytopes:
            lines.append(p.to_text())
        if include_objective:
            lines.append(self.objective.to_text())
        return "\n".join(lines) + "\n"


# -- constraints ------------------------------------------------------------------


def _component_for(cg: CounterfactualGraph, u: str) -> CComponent:
    for c in c_components(cg.source):
        if c.exogenous == u:
            return c
    raise UnknownVariable(u, "counterfactual graph components")


def _conditional(dist: JointTable, v: str, value: int, given: Mapping[str, int]) -> float:
    den = dist.prob(given)
    if den <= 0.0:
        raise ZeroConditioningEvent(given)
    return dist.prob({**given, v: value}) / den


def build_polytope(cg: CounterfactualGraph, u: str, dist: JointTable) -> PolytopeSpec:
    g = cg.source
    comp = _component_for(cg, u)
    space = canonical_space(g, comp)
    members = space.component.members
    scope = tuple(sorted(set(component_scope(g, comp)), key=g.declaration_index))
    ws = {v: sorted(w_set(g, v, comp), key=g.declaration_index) for v in members}
    responses = {m.variable: (m, space.response(m.variable)) for m in space.layout}
    rows, rhs, labels = [], [], []
    for bits in itertools.product((0, 1), repeat=len(scope)):
        a = dict(zip(scope, bits))
        mask = np.ones(space.cardinality, dtype=bool)
        for v in members:
            m, r = responses[v]
            mask &= r[:, m.config_index(a)] == a[v]
        value = 1.0
        for v in members:
            value *= _conditional(dist, v, a[v], {w: a[w] for w in ws[v]})
        rows.append(mask.astype(np.uint8))
        rhs.append(value)
        labels.append("".join(str(b) for b in bits))
    rows.append(np.ones(space.cardinality, dtype=np.uint8))
    rhs.append(1.0)
    labels.append("sum")
    matrix = np.array(rows, dtype=np.uint8)
    rhs_arr = np.clip(np.array(rhs, dtype=float), 0.0, 1.0)
    matrix.setflags(write=False)
    rhs_arr.setflags(write=False)
    return PolytopeSpec(u, space, scope, matrix, rhs_arr, tuple(labels))


def build_constraints(cg: CounterfactualGraph, dist: JointTable) -> list[PolytopeSpec]:
    return [build_polytope(cg, u, dist) for u in cg.exogenous]


# -- objective -------------------------------------------------------------------


def _evidence(cg: CounterfactualGraph) -> tuple[dict[CfNode, int], bool]:
    fixed: dict[CfNode, int] = {}
    conflict = False
    for n, v in list(cg.intervened.items()) + list(cg.query) + list(cg.conditioning):
        if n in fixed and fixed[n] != v:
            conflict = True
        fixed.setdefault(n, int(v))
    return fixed, conflict


def build_network(cg: CounterfactualGraph) -> ObjectiveNetwork:
    fixed, conflict = _evidence(cg)
    free = tuple(n for n in cg.nodes if n not in fixed)
    g = cg.source
    factors = []
    for u in cg.exogenous:
        comp = _component_for(cg, u)
        space = canonical_space(g, comp)
        copies = [n for n in cg.nodes if cg.exo_parent.get(n) == u and n not in cg.fixed_nodes]
        touched = set()
        for n in copies:
            touched.add(n)
            touched.update(cg.parents[n])
        axes = tuple(n for n in free if n in touched)
        k = len(axes)
        tensor = np.zeros((space.cardinality,) + (2,) * k, dtype=np.uint8)
        for bits in itertools.product((0, 1), repeat=k):
            val = dict(fixed)
            val.update(zip(axes, bits))
            ok = np.ones(space.cardinality, dtype=bool)
            for n in copies:
                m = space.member(n.base)
                pa = {p.base: val[p] for p in cg.parents[n]}
                ok &= space.response(n.base)[:, m.config_index(pa)] == val[n]
            tensor[(slice(None),) + bits] = ok
        tensor.setflags(write=False)
        factors.append(ResponseFactor(u, axes, tensor))
    weights = []
    for fr in cg.fixed_roots:
        t = fr.table.tensor
        idx = tuple(fixed[n] if n in fixed else slice(None) for n in fr.nodes)
        axes = tuple(n for n in fr.nodes if n not in fixed)
        weights.append(WeightFactor(axes, np.asarray(t[idx], dtype=float)))
    return ObjectiveNetwork(tuple(factors), tuple(weights), free, zero=conflict)


def build_polynomial(net: ObjectiveNetwork, limit: int = POLYNOMIAL_TERM_LIMIT) -> Polynomial:
    """Expand the network into explicit monomials (one canonical state per exogenous variable)."""
    variables = net.exogenous
    if net.zero:
        return Polynomial(variables, ())
    size = 1
    for f in net.factors:
        size *= f.cardinality
    if size > limit:
        raise DegreeTooHigh(f"objective has {size} potential monomials (limit {limit})")
    coef = net.contract([f.matrix for f in net.factors], "outer")
    coef = np.asarray(coef).reshape([f.cardinality for f in net.factors])
    terms = []
    for states in zip(*np.nonzero(coef)):
        c = float(coef[states])
        if c != 0.0:
            terms.append((c, tuple(int(s) for s in states)))
    return Polynomial(variables, tuple(terms))


def build_objective(cg: CounterfactualGraph, dist: JointTable | None = None) -> Polynomial:
    """Numerator ``P(query, conditioning)`` as an explicit polynomial.

    ``dist`` is accepted for symmetry with the other builders; fixed-root
    marginals were already taken from it during reduction.
    """
    return build_polynomial(build_network(cg))


def build_denominator(cg: CounterfactualGraph, dist: JointTable) -> float:
    if not cg.conditioning:
        return 1.0
    event = {n.base: v for n, v in cg.conditioning}
    p = dist.prob(event)
    if p <= 0.0:
        raise ZeroConditioningEvent(event)
    return p


def describe_event(cg: CounterfactualGraph) -> str:
    q = ", ".join(f"{n.name}={v}" for n, v in cg.query)
    if cg.conditioning:
        c = ", ".join(f"{n.name}={v}" for n, v in cg.conditioning)
        return f"P({q} | {c})"
    return f"P({q})"


def build_program(cg: CounterfactualGraph, dist: JointTable) -> Program:
    denominator = build_denominator(cg, dist)
    polytopes = tuple(build_constraints(cg, dist))
    network = build_network(cg)
    return Program(cg, polytopes, network, denominator, describe_event(cg))
