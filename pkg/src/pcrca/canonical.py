"""Canonical exogenous state spaces: one state per tuple of deterministic mechanisms.

Within a member, the mechanism index is the output column over parent
configurations read as a binary number, first configuration most significant.
Across members, the topologically first member occupies the high digits.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Mapping

import numpy as np

from .errors import IndexOutOfRange, MissingParentValue, UnknownVariable
from .graph import CausalGraph, CComponent

MAX_CARDINALITY = 1 << 22


@dataclass(frozen=True)
class MemberLayout:
    variable: str
    parents: tuple[str, ...]
    stride: int

    @property
    def n_configs(self) -> int:
        return 1 << len(self.parents)

    @property
    def cardinality(self) -> int:
        return 1 << self.n_configs

    def config_index(self, pa: Mapping[str, int]) -> int:
        idx = 0
        for p in self.parents:
            if p not in pa:
                raise MissingParentValue(f"no value for parent {p!r} of {self.variable!r}")
            idx = (idx << 1) | int(pa[p])
        return idx


@dataclass(frozen=True)
class MechanismTable:
    """Deterministic map from endogenous-parent configurations to {0, 1}."""

    variable: str
    parents: tuple[str, ...]
    outputs: tuple[int, ...]

    def __post_init__(self):
        if len(self.outputs) != 1 << len(self.parents):
            raise ValueError("mechanism table must cover every parent configuration once")

    def __call__(self, pa: Mapping[str, int]) -> int:
        idx = 0
        for p in self.parents:
            if p not in pa:
                raise MissingParentValue(f"no value for parent {p!r} of {self.variable!r}")
            idx = (idx << 1) | int(pa[p])
        return self.outputs[idx]

    @property
    def index(self) -> int:
        idx = 0
        for b in self.outputs:
            idx = (idx << 1) | b
        return idx


@dataclass(frozen=True)
class CanonicalSpace:
    component: CComponent
    cardinality: int
    layout: tuple[MemberLayout, ...]

    def member(self, v: str) -> MemberLayout:
        for m in self.layout:
            if m.variable == v:
                return m
        raise UnknownVariable(v, f"component {self.component.members}")

    @cached_property
    def _responses(self) -> dict[str, np.ndarray]:
        out = {}
        states = np.arange(self.cardinality, dtype=np.int64)
        for m in self.layout:
            digit = (states // m.stride) % m.cardinality
            shifts = np.arange(m.n_configs - 1, -1, -1, dtype=np.int64)
            table = ((digit[:, None] >> shifts[None, :]) & 1).astype(np.uint8)
            table.setflags(write=False)
            out[m.variable] = table
        return out

    def response(self, v: str) -> np.ndarray:
        """Array ``r[u, config]`` giving the output of ``v``'s mechanism under state ``u``."""
        self.member(v)
        return self._responses[v]


def canonical_space(g: CausalGraph, c: CComponent) -> CanonicalSpace:
    members = sorted(c.members, key=g.topo_key)
    digits = [(v, g.endogenous_parents(v)) for v in members]
    sizes = [1 << (1 << len(pa)) for _, pa in digits]
    total = 1
    for s in sizes:
        total *= s
    if total > MAX_CARDINALITY:
        from .errors import DegreeTooHigh

        raise DegreeTooHigh(
            f"canonical space for component {tuple(members)} has {total} states (limit {MAX_CARDINALITY})"
        )
    layout = []
    stride = total
    for (v, pa), size in zip(digits, sizes):
        stride //= size
        layout.append(MemberLayout(v, pa, stride))
    return CanonicalSpace(CComponent(tuple(members), c.exogenous), total, tuple(layout))


def _check(s: CanonicalSpace, u: int):
    if not 0 <= u < s.cardinality:
        raise IndexOutOfRange(f"canonical state {u} outside 0..{s.cardinality - 1}")


def decode(s: CanonicalSpace, u: int, v: str) -> MechanismTable:
    _check(s, u)
    m = s.member(v)
    digit = (u // m.stride) % m.cardinality
    outputs = tuple((digit >> (m.n_configs - 1 - i)) & 1 for i in range(m.n_configs))
    return MechanismTable(v, m.parents, outputs)


def encode(s: CanonicalSpace, tables: Mapping[str, MechanismTable]) -> int:
    u = 0
    for m in s.layout:
        t = tables[m.variable]
        if t.parents != m.parents:
            raise ValueError(f"mechanism for {m.variable!r} uses parents {t.parents}, expected {m.parents}")
        u += t.index * m.stride
    return u


def apply(s: CanonicalSpace, u: int, v: str, pa: Mapping[str, int]) -> int:
    _check(s, u)
    m = s.member(v)
    return int(s.response(v)[u, m.config_index(pa)])


def decode_table_text(s: CanonicalSpace) -> str:
    """Stable text dump of every canonical state's mechanisms."""
    lines = [
        f"component {{{', '.join(s.component.members)}}} exogenous {s.component.exogenous} "
        f"cardinality {s.cardinality}"
    ]
    for m in s.layout:
        cfgs = []
        for i in range(m.n_configs):
            bits = format(i, f"0{len(m.parents)}b") if m.parents else ""
            cfgs.append(bits or "-")
        pa = ",".join(m.parents) or "-"
        lines.append(f"member {m.variable} parents ({pa}) configs {' '.join(cfgs)} stride {m.stride}")
    for u in range(s.cardinality):
        parts = []
        for m in s.layout:
            out = "".join(str(int(b)) for b in s.response(m.variable)[u])
            parts.append(f"{m.variable}={out}")
        lines.append(f"{u:>6} " + " ".join(parts))
    return "\n".join(lines) + "\n"
