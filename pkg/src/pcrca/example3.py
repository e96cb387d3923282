"""Built-in worked example: PN and PNS bounds for X -> Y through a confounded mediator.

The model has seven endogenous nodes S, X, Y, Z, T, R, W. X and Y share U1;
Z has its own noise U2 and parents S and X; T feeds S; R and W hang off X
and Y and drop out of every query. The input distribution is a fixed raw
16-entry vector over (S, X, Y, Z).

Two entries of the raw vector cannot be right (it sums to 1.63);
replacing 0.3 at index 3 by 0.03 and 0.4 at index 11 by 0.04 gives a
distribution that sums to 1. The vector is read with S as the most
significant bit followed by X, Y, Z. With that reading the PNS bounds and
the joint probability ``P(Y_{X=0}=0, X=1, Y=1)`` match the expected
intervals; the conditional PN divides the latter by ``P(X=1, Y=1)``.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .distribution import JointTable
from .graph import CausalGraph
from .metrics import MetricKind, SolveOptions, evaluate_metric
from .solve import BoundInterval, sample_oracle

RAW_VECTOR = (
    0.30375, 0.0075, 0.03375, 0.3, 0.12, 0.0225, 0.03, 0.2025,
    0.0675, 0.01, 0.0075, 0.4, 0.01, 0.01125, 0.0025, 0.10125,
)  # fmt: skip
CORRECTIONS = {3: 0.03, 11: 0.04}
READ_ORDER = ("S", "X", "Y", "Z")

# P(T=1 | S=s) used only to extend the table for runs without reduction
T_GIVEN_S = (0.3, 0.8)

EXPECTED = {MetricKind.PN: (0.175, 0.245), MetricKind.PNS: (0.35, 0.49)}
TOLERANCE = 1e-3
CAUSE, EFFECT = "X", "Y"


def graph() -> CausalGraph:
    return CausalGraph.from_edges(
        ["S", "X", "Y", "Z", "T", "R", "W"],
        ["U1", "U2", "U3", "U4", "U5", "U6"],
        [
            ("U1", "X"), ("U1", "Y"), ("U2", "Z"), ("U3", "R"), ("U4", "W"), ("U5", "S"), ("U6", "T"),
            ("X", "Z"), ("Z", "Y"), ("Y", "W"), ("X", "R"), ("S", "Z"), ("T", "S"),
        ],
    )  # fmt: skip


def corrected_vector() -> np.ndarray:
    v = np.array(RAW_VECTOR, dtype=float)
    for i, value in CORRECTIONS.items():
        v[i] = value
    return v


def distribution(include_t: bool = False) -> JointTable:
    """Corrected input table; ``include_t`` adds T with a fixed ``P(T | S)``."""
    base = JointTable(READ_ORDER, corrected_vector())
    if not include_t:
        return base
    t = base.tensor
    p_t = np.array([[1 - T_GIVEN_S[0], T_GIVEN_S[0]], [1 - T_GIVEN_S[1], T_GIVEN_S[1]]])
    ext = np.einsum("sxyz,st->sxyzt", t, p_t)
    return JointTable(READ_ORDER + ("T",), ext.reshape(-1))


@dataclass(frozen=True)
class Example3Result:
    metric: MetricKind
    interval: BoundInterval
    reported: tuple[float, float]
    expected: tuple[float, float]
    denominator: float
    degree: int
    dimensions: tuple[int, ...]
    seconds: float
    oracle: BoundInterval | None = None

    @property
    def passed(self) -> bool:
        return all(abs(a - b) <= TOLERANCE for a, b in zip(self.reported, self.expected))

    @property
    def oracle_contained(self) -> bool | None:
        if self.oracle is None:
            return None
        return self.interval.contains(self.oracle, 1e-9)

    def record(self) -> dict:
        out = {
            "metric": str(self.metric),
            "lower": self.interval.lower,
            "upper": self.interval.upper,
            "reported_lower": self.reported[0],
            "reported_upper": self.reported[1],
            "expected_lower": self.expected[0],
            "expected_upper": self.expected[1],
            "denominator": self.denominator,
            "degree": self.degree,
            "dimensions": list(self.dimensions),
            "passed": self.passed,
        }
        if self.oracle is not None:
            out["oracle_lower"] = self.oracle.lower
            out["oracle_upper"] = self.oracle.upper
            out["oracle_contained"] = self.oracle_contained
        return out


def reproduce(
    use_reduction: bool = True,
    oracle_samples: int = 0,
    seed: int = 0,
    options: SolveOptions | None = None,
) -> list[Example3Result]:
    """Solve PN and PNS and compare with the expected intervals.

    For PN the compared pair is the joint-probability form (interval times
    the conditioning mass); ``interval`` always holds the conditional value.
    """
    g = graph()
    dist = distribution(include_t=not use_reduction)
    base = options or SolveOptions()
    opts = SolveOptions(use_reduction, base.budget, base.tolerances, base.method, seed)
    out = []
    for metric in (MetricKind.PN, MetricKind.PNS):
        t0 = time.perf_counter()
        r = evaluate_metric(g, dist, metric, CAUSE, EFFECT, opts)
        seconds = time.perf_counter() - t0
        den = r.program.denominator
        reported = (r.lower * den, r.upper * den)
        oracle = sample_oracle(r.program, oracle_samples, seed) if oracle_samples > 0 else None
        out.append(
            Example3Result(
                metric,
                r.interval,
                reported,
                EXPECTED[metric],
                den,
                r.degree,
                tuple(p.dimension for p in r.program.polytopes),
                seconds,
                oracle,
            )
        )
    return out
