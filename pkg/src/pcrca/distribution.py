"""Joint probability tables over binary variables and their estimation from data."""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Mapping, Sequence

import numpy as np

from .errors import (
    DistributionError,
    EmptyDataset,
    UnknownVariable,
    ZeroConditioningEvent,
)
from .graph import MAX_TABLE_VARIABLES, CausalGraph, c_components, w_set

SUM_TOLERANCE = 1e-9


def assignment_index(values: Sequence[int]) -> int:
    """Index of a full binary assignment; the first variable is the most significant bit."""
    idx = 0
    for v in values:
        idx = (idx << 1) | int(v)
    return idx


def index_bits(index: int, n: int) -> tuple[int, ...]:
    return tuple((index >> (n - 1 - i)) & 1 for i in range(n))


def _frozen(arr) -> np.ndarray:
    arr = np.array(arr, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class JointTable:
    """Explicit probability table over the full binary cube of ``variables``."""

    variables: tuple[str, ...]
    probabilities: np.ndarray

    def __post_init__(self):
        variables = tuple(str(v) for v in self.variables)
        object.__setattr__(self, "variables", variables)
        if len(set(variables)) != len(variables):
            raise DistributionError("duplicate variable in joint table")
        if len(variables) > MAX_TABLE_VARIABLES:
            raise DistributionError(
                f"joint table over {len(variables)} variables exceeds the cap of {MAX_TABLE_VARIABLES}"
            )
        probs = np.asarray(self.probabilities, dtype=float).reshape(-1)
        if probs.size != 2 ** len(variables):
            raise DistributionError(
                f"expected {2 ** len(variables)} probabilities for {len(variables)} variables, got {probs.size}"
            )
        if np.any(~np.isfinite(probs)) or np.any(probs < 0):
            raise DistributionError("probabilities must be finite and non-negative")
        total = float(probs.sum())
        if abs(total - 1.0) > SUM_TOLERANCE:
            raise DistributionError(f"probabilities sum to {total!r}, not 1")
        object.__setattr__(self, "probabilities", _frozen(probs))

    @classmethod
    def from_mapping(cls, variables, mapping: Mapping[str, float]) -> "JointTable":
        variables = tuple(variables)
        n = len(variables)
        probs = np.full(2**n, np.nan)
        for key, p in mapping.items():
            key = str(key)
            if len(key) != n or set(key) - {"0", "1"}:
                raise DistributionError(f"assignment {key!r} is not a {n}-bit string")
            i = int(key, 2)
            if not np.isnan(probs[i]):
                raise DistributionError(f"assignment {key!r} listed twice")
            probs[i] = float(p)
        if np.isnan(probs).any():
            missing = [format(i, f"0{n}b") for i in np.flatnonzero(np.isnan(probs))]
            raise DistributionError(f"missing assignments: {', '.join(missing[:8])}")
        return cls(variables, probs)

    @cached_property
    def tensor(self) -> np.ndarray:
        t = self.probabilities.reshape((2,) * len(self.variables))
        return t

    @cached_property
    def _pos(self) -> dict[str, int]:
        return {v: i for i, v in enumerate(self.variables)}

    def position(self, name: str) -> int:
        try:
            return self._pos[name]
        except KeyError:
            raise UnknownVariable(name, "joint table") from None

    def __len__(self):
        return len(self.variables)

    def prob(self, assignment: Mapping[str, int]) -> float:
        """Marginal probability of a partial assignment."""
        index = [slice(None)] * len(self.variables)
        for name, value in assignment.items():
            if value not in (0, 1):
                raise DistributionError(f"value {value!r} for {name!r} is not binary")
            index[self.position(name)] = int(value)
        return float(np.sum(self.tensor[tuple(index)]))

    def marginal(self, names: Sequence[str]) -> "JointTable":
        names = tuple(names)
        pos = [self.position(n) for n in names]
        if len(set(pos)) != len(pos):
            raise DistributionError("duplicate variable in marginal request")
        drop = tuple(i for i in range(len(self.variables)) if i not in pos)
        t = self.tensor.sum(axis=drop) if drop else self.tensor
        kept = [i for i in range(len(self.variables)) if i in pos]
        t = np.transpose(t, [kept.index(p) for p in pos]) if names else np.asarray(t)
        probs = np.asarray(t).reshape(-1)
        # renormalize float drift from summation
        return JointTable(names, probs / probs.sum())

    def items(self):
        n = len(self.variables)
        for i, p in enumerate(self.probabilities):
            yield format(i, f"0{n}b") if n else "", float(p)


def query(t: JointTable, event: Mapping[str, int], given: Mapping[str, int] | None = None) -> float:
    """P(event | given) read off the table."""
    given = dict(given or {})
    event = dict(event)
    for k, v in event.items():
        if k in given and given[k] != v:
            if t.prob(given) <= 0.0:
                raise ZeroConditioningEvent(given)
            return 0.0
    joint = t.prob({**given, **event})
    if not given:
        return joint
    denom = t.prob(given)
    if denom <= 0.0:
        raise ZeroConditioningEvent(given)
    return joint / denom


@dataclass(frozen=True, eq=False)
class Dataset:
    """Rows of binary observations over named endogenous columns."""

    columns: tuple[str, ...]
    rows: np.ndarray

    def __post_init__(self):
        cols = tuple(str(c) for c in self.columns)
        if len(set(cols)) != len(cols):
            raise DistributionError("duplicate dataset column")
        rows = np.asarray(self.rows)
        if rows.size == 0:
            rows = rows.reshape(0, len(cols))
        if rows.ndim != 2 or rows.shape[1] != len(cols):
            raise DistributionError(f"rows must have shape (n, {len(cols)})")
        if not np.all((rows == 0) | (rows == 1)):
            raise DistributionError("dataset cells must be 0 or 1")
        rows = rows.astype(np.uint8)
        rows.setflags(write=False)
        object.__setattr__(self, "columns", cols)
        object.__setattr__(self, "rows", rows)

    def __len__(self):
        return self.rows.shape[0]

    def select(self, columns: Sequence[str]) -> "Dataset":
        idx = []
        for c in columns:
            if c not in self.columns:
                raise UnknownVariable(c, "dataset")
            idx.append(self.columns.index(c))
        return Dataset(tuple(columns), self.rows[:, idx])


def estimate_distribution(d: Dataset, smoothing: float = 0.0) -> JointTable:
    """Relative frequencies with ``smoothing`` pseudo-counts added to every cell."""
    if smoothing < 0:
        raise DistributionError("smoothing must be non-negative")
    n = len(d)
    if n == 0:
        raise EmptyDataset()
    k = len(d.columns)
    weights = (1 << np.arange(k - 1, -1, -1)).astype(np.int64)
    codes = d.rows.astype(np.int64) @ weights
    counts = np.bincount(codes, minlength=2**k).astype(float)
    probs = (counts + smoothing) / (n + smoothing * 2**k)
    return JointTable(d.columns, probs)


def component_product(g: CausalGraph, t: JointTable) -> np.ndarray:
    """Product over c-components of ``P(v | W_v)``, as a cube shaped like ``t.tensor``.

    Cells whose conditioning event has zero mass contribute 0. A table
    generated by an SCM with graph ``g`` equals this product everywhere.
    """
    cube = t.tensor
    n = len(t.variables)

    def margin(names) -> np.ndarray:
        keep = {t.position(v) for v in names}
        drop = tuple(i for i in range(n) if i not in keep)
        return cube.sum(axis=drop, keepdims=True) if drop else cube

    out = np.ones_like(cube)
    for c in c_components(g):
        for v in c.members:
            w = w_set(g, v, c)
            num = margin(w | {v})
            den = margin(w)
            out = out * np.divide(num, den, out=np.zeros_like(num), where=den > 0)
    return out
