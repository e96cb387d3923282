"""Global bounds of a multilinear objective over a product of polytopes.

A multilinear function over a product of polytopes attains its extrema at
products of vertices. Instead of enumerating vertices of the raw canonical
polytopes (which can be huge), each factor is projected onto the directions
that can change the objective: first onto ``Q = R^T q`` (the only way ``q``
enters the network), then onto the span of the objective's possible
gradients with respect to that factor. Vertices of the projected polytopes,
each with a feasible witness ``q``, are enough to reach the exact extrema.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.linalg import null_space
from scipy.optimize import linprog
from scipy.spatial import ConvexHull, QhullError

from .errors import DegreeTooHigh, InfeasiblePolytope
from .program import PolytopeSpec, Program

DEFAULT_BUDGET = 10**8
PIVOT_TOL = 1e-10
FEAS_TOL = 1e-8
TIE_TOL = 1e-12
BASIS_SCAN_LIMIT = 50_000
_CHUNK = 1 << 20


@dataclass(frozen=True)
class Tolerances:
    pivot: float = PIVOT_TOL
    feasibility: float = FEAS_TOL


@dataclass(frozen=True, eq=False)
class VertexSet:
    polytope: str
    vertices: np.ndarray  # (n, dimension)

    def __len__(self):
        return self.vertices.shape[0]


@dataclass(frozen=True, eq=False)
class BoundInterval:
    lower: float
    upper: float
    argmin: dict = field(default_factory=dict)
    argmax: dict = field(default_factory=dict)
    vertex_counts: dict = field(default_factory=dict)
    evaluations: int = 0

    def __post_init__(self):
        if not (self.lower <= self.upper + 1e-12):
            raise ValueError(f"empty interval [{self.lower}, {self.upper}]")

    @property
    def width(self) -> float:
        return self.upper - self.lower

    def contains(self, other: "BoundInterval", tol: float = 1e-9) -> bool:
        return self.lower - tol <= other.lower and other.upper <= self.upper + tol

    def __iter__(self):
        yield self.lower
        yield self.upper


def _clean(q: np.ndarray) -> np.ndarray:
    q = np.where(q < 0.0, 0.0, q)
    return q


def _dedupe(points: np.ndarray, tol: float) -> np.ndarray:
    keep: list[int] = []
    for i in range(points.shape[0]):
        if keep and np.min(np.max(np.abs(points[keep] - points[i]), axis=1)) <= tol:
            continue
        keep.append(i)
    return np.asarray(keep, dtype=int)


def _independent_rows(a: np.ndarray, tol: float) -> list[int]:
    """Row indices forming a basis of the row space (Gaussian elimination, partial pivoting)."""
    m = np.array(a, dtype=float).T.copy()  # columns of m are rows of a
    rows, cols = m.shape
    chosen: list[int] = []
    r = 0
    for c in range(cols):
        if r >= rows:
            break
        p = r + int(np.argmax(np.abs(m[r:, c])))
        if abs(m[p, c]) <= tol:
            continue
        m[[r, p]] = m[[p, r]]
        m[r + 1 :] -= np.outer(m[r + 1 :, c] / m[r, c], m[r])
        chosen.append(c)
        r += 1
    return chosen


def _forced_zero_columns(p: PolytopeSpec, tol: float) -> np.ndarray:
    zero_rows = p.rhs <= tol
    if not zero_rows.any():
        return np.zeros(p.dimension, dtype=bool)
    return p.matrix[zero_rows].astype(bool).any(axis=0)


def _basis_scan(a: np.ndarray, b: np.ndarray, tol: Tolerances, limit: int | None) -> list[np.ndarray]:
    """All basic feasible solutions of ``a x = b, x >= 0``."""
    rows = _independent_rows(a, tol.pivot)
    a_r, b_r = a[rows], b[rows]
    n, rank = a.shape[1], len(rows)
    if rank == 0:
        return [np.zeros(n)] if np.allclose(b, 0.0, atol=tol.feasibility) else []
    count = math.comb(n, rank)
    if limit is not None and count > limit:
        raise DegreeTooHigh(f"basis enumeration needs {count} column subsets (limit {limit})")
    found: list[np.ndarray] = []
    combos = itertools.combinations(range(n), rank)
    while True:
        block = list(itertools.islice(combos, 4096))
        if not block:
            break
        idx = np.asarray(block)
        mats = a_r[:, idx].transpose(1, 0, 2)
        dets = np.linalg.det(mats)
        ok = np.abs(dets) > tol.pivot
        if not ok.any():
            continue
        idx, mats = idx[ok], mats[ok]
        sols = np.linalg.solve(mats, np.broadcast_to(b_r, (len(idx), rank))[..., None])[..., 0]
        feas = sols.min(axis=1) >= -tol.feasibility
        for cols, sol in zip(idx[feas], sols[feas]):
            x = np.zeros(n)
            x[cols] = sol
            x = _clean(x)
            if np.max(np.abs(a @ x - b)) <= tol.feasibility:
                found.append(x)
    return found


def enumerate_vertices(p: PolytopeSpec, tol: Tolerances = Tolerances(), limit: int | None = None) -> VertexSet:
    """Basic feasible solutions of ``{q >= 0 : A q = b}``, deduplicated, in scan order."""
    a = p.matrix.astype(float)
    b = np.asarray(p.rhs, dtype=float)
    live = ~_forced_zero_columns(p, tol.feasibility)
    cols = np.flatnonzero(live)
    sols = _basis_scan(a[:, cols], b, tol, limit)
    if not sols:
        raise InfeasiblePolytope(p.exo)
    full = np.zeros((len(sols), p.dimension))
    full[:, cols] = np.array(sols)
    keep = _dedupe(full, tol.feasibility)
    verts = full[keep]
    verts.setflags(write=False)
    return VertexSet(p.exo, verts)


# -- effective vertices ---------------------------------------------------------------


def _lp(c: np.ndarray, a: np.ndarray, b: np.ndarray, exo: str) -> np.ndarray:
    res = linprog(c, A_eq=a, b_eq=b, bounds=(0, None), method="highs")
    if res.status == 2:
        raise InfeasiblePolytope(exo)
    if res.status != 0:
        raise InfeasiblePolytope(exo)
    return _clean(np.asarray(res.x, dtype=float))


def _polish(x: np.ndarray, a: np.ndarray, b: np.ndarray, tol: Tolerances) -> np.ndarray:
    support = np.flatnonzero(x > 1e-12)
    if support.size == 0:
        return x
    sol, *_ = np.linalg.lstsq(a[:, support], b, rcond=None)
    if sol.min() < -tol.feasibility:
        return x
    y = np.zeros_like(x)
    y[support] = np.maximum(sol, 0.0)
    if np.max(np.abs(a @ y - b)) <= np.max(np.abs(a @ x - b)) + 1e-15:
        return y
    return x


@dataclass(eq=False)
class _Factor:
    """Geometry of one polytope as seen through its response matrix."""

    exo: str
    a: np.ndarray  # constraint matrix restricted to the support
    b: np.ndarray
    support: np.ndarray
    dimension: int
    response: np.ndarray  # (support size, D)
    q0: np.ndarray  # relative-interior point on the support
    image_basis: np.ndarray  # (D, r) orthonormal directions of the Q image

    @property
    def image_rank(self) -> int:
        return self.image_basis.shape[1]

    @property
    def Q0(self) -> np.ndarray:
        return self.q0 @ self.response

    def lift(self, x: np.ndarray) -> np.ndarray:
        q = np.zeros(self.dimension)
        q[self.support] = x
        return q


SUPPORT_SCALE = 1e6
POSITIVE = 1e-10


def _scaled_interior(a: np.ndarray, b: np.ndarray) -> np.ndarray | None:
    """Feasible point positive on most of the support, or None if the LP is unreliable.

    Solves ``max sum t`` over ``A y = tau b``, ``0 <= t <= min(y, 1)``,
    ``1 <= tau <= SUPPORT_SCALE``; a scaled relative-interior point sets
    ``t_j = 1`` wherever the coordinate can reach ``1 / SUPPORT_SCALE``.
    """
    m, n = a.shape
    c = np.concatenate([np.zeros(n), -np.ones(n), [0.0]])
    a_eq = np.hstack([a, np.zeros((m, n)), -b[:, None]])
    a_ub = np.hstack([-np.eye(n), np.eye(n), np.zeros((n, 1))])
    bnds = [(0, None)] * n + [(0, 1)] * n + [(1, SUPPORT_SCALE)]
    res = linprog(c, A_ub=a_ub, b_ub=np.zeros(n), A_eq=a_eq, b_eq=np.zeros(m), bounds=bnds, method="highs")
    if res.status != 0:
        return None
    x = _clean(res.x[:n] / res.x[-1])
    if np.max(np.abs(a @ x - b), initial=0.0) > 1e-9:
        return None
    return x


def _support(a: np.ndarray, b: np.ndarray, exo: str) -> tuple[np.ndarray, np.ndarray]:
    """Coordinates that can be positive, and a feasible point positive on all of them."""
    n = a.shape[1]
    if n == 0:
        raise InfeasiblePolytope(exo)
    points = []
    first = _scaled_interior(a, b)
    if first is not None:
        points.append(first)
    positive = set(np.flatnonzero(first > POSITIVE).tolist()) if first is not None else set()
    unknown = set(range(n)) - positive
    # every remaining coordinate is either found positive or certified zero
    while unknown:
        c = np.zeros(n)
        c[sorted(unknown)] = -1.0
        x = _lp(c, a, b, exo)
        points.append(x)
        hit = {j for j in unknown if x[j] > POSITIVE}
        if not hit:
            break
        positive |= hit
        unknown -= hit
    keep = np.array(sorted(positive), dtype=int)
    q0 = np.mean([x[keep] for x in points], axis=0)
    return keep, q0


def _analyze(p: PolytopeSpec, response: np.ndarray, tol: Tolerances) -> _Factor:
    a_full = p.matrix.astype(float)
    b = np.asarray(p.rhs, dtype=float)
    live = np.flatnonzero(~_forced_zero_columns(p, tol.feasibility))
    a = a_full[:, live]
    keep, q0 = _support(a, b, p.exo)
    support = live[keep]
    a_s = a[:, keep]
    resp = response[support]
    if len(keep):
        n = null_space(a_s, rcond=1e-10)
        dirs = resp.T @ n if n.size else np.zeros((resp.shape[1], 0))
    else:
        dirs = np.zeros((resp.shape[1], 0))
    basis = _orth(dirs)
    return _Factor(p.exo, a_s, b, support, p.dimension, resp, q0, basis)


def _orth(m: np.ndarray, rel: float = 1e-9) -> np.ndarray:
    if m.size == 0:
        return np.zeros((m.shape[0], 0))
    u, s, _ = np.linalg.svd(m, full_matrices=False)
    if s.size == 0 or s[0] <= 1e-14:
        return np.zeros((m.shape[0], 0))
    r = int(np.sum(s > rel * max(1.0, s[0])))
    return u[:, :r]


def _affine_points(f: _Factor) -> np.ndarray:
    q0 = f.Q0
    return np.vstack([q0[None, :], q0[None, :] + f.image_basis.T])


def _relevant_directions(prog: Program, factors: list[_Factor], i: int, seed: int) -> np.ndarray:
    """Orthonormal directions in ``Q_i`` space along which the objective can change."""
    fi = factors[i]
    if fi.image_rank == 0:
        return np.zeros((fi.response.shape[1], 0))
    net = prog.network
    others = [j for j in range(len(factors)) if j != i]
    combos = 1
    for j in others:
        combos *= factors[j].image_rank + 1
    marg: list = [None] * len(factors)
    if combos <= 20_000:
        for j in others:
            marg[j] = _affine_points(factors[j])
        grads = net.gradient(i, marg, "outer")
    else:
        rng = np.random.default_rng(seed + 7919 * i)
        n = 4 * fi.image_rank + 16
        for j in others:
            f = factors[j]
            t = rng.standard_normal((n, f.image_rank))
            marg[j] = f.Q0[None, :] + t @ f.image_basis.T
        grads = net.gradient(i, marg, "diag")
    proj = grads @ fi.image_basis
    if not np.any(proj):
        return np.zeros((fi.response.shape[1], 0))
    c = _orth(proj.T)
    return fi.image_basis @ c


def _lp_direction(f: _Factor, w: np.ndarray, tol: Tolerances) -> np.ndarray:
    """Feasible vertex maximizing ``w . (R^T q)``, polished, on the support."""
    x = _lp(-(f.response @ w), f.a, f.b, f.exo)
    return _polish(x, f.a, f.b, tol)


def _projected_vertices(f: _Factor, dirs: np.ndarray, tol: Tolerances, limit: int) -> list[np.ndarray]:
    d = dirs.shape[1]
    proj = f.response @ dirs  # (support, d)
    if d == 0:
        return [_lp_direction(f, np.zeros(f.response.shape[1]), tol)]
    if d == 1:
        lo = _lp_direction(f, -dirs[:, 0], tol)
        hi = _lp_direction(f, dirs[:, 0], tol)
        if abs((lo - hi) @ proj[:, 0]) <= 1e-12:
            return [lo]
        return [lo, hi]
    rows = len(_independent_rows(f.a, tol.pivot))
    if math.comb(f.a.shape[1], rows) <= limit:
        sols = _basis_scan(f.a, f.b, tol, None)
        if not sols:
            raise InfeasiblePolytope(f.exo)
        pts = np.array(sols) @ proj
        keep = _hull_vertices(pts)
        return [sols[k] for k in keep]
    return _hull_by_lp(f, dirs, proj, tol)


def _hull_vertices(pts: np.ndarray) -> list[int]:
    uniq = _dedupe(pts, 1e-11)
    if len(uniq) <= pts.shape[1] + 1:
        return uniq.tolist()
    sub = pts[uniq]
    try:
        hull = ConvexHull(sub)
    except QhullError:
        return uniq.tolist()
    return sorted(uniq[hull.vertices].tolist())


def _hull_by_lp(f: _Factor, dirs: np.ndarray, proj: np.ndarray, tol: Tolerances) -> list[np.ndarray]:
    d = dirs.shape[1]
    xs: list[np.ndarray] = []
    zs: list[np.ndarray] = []

    def add(x):
        z = x @ proj
        if zs and np.min(np.max(np.abs(np.array(zs) - z), axis=1)) <= 1e-11:
            return False
        xs.append(x)
        zs.append(z)
        return True

    for k in range(d):
        for sgn in (1.0, -1.0):
            add(_lp_direction(f, sgn * dirs[:, k], tol))
    rng = np.random.default_rng(12345)
    tries = 0
    while len(zs) <= d and tries < 8 * d:
        w = rng.standard_normal(d)
        add(_lp_direction(f, dirs @ w, tol))
        tries += 1
    if len(zs) <= d:
        return xs
    confirmed: set[tuple] = set()
    for _ in range(10_000):
        try:
            hull = ConvexHull(np.array(zs))
        except QhullError:
            return xs
        grew = False
        for eq in hull.equations:
            key = tuple(np.round(eq, 9))
            if key in confirmed:
                continue
            normal, offset = eq[:-1], -eq[-1]
            x = _lp_direction(f, dirs @ normal, tol)
            if (x @ proj) @ normal > offset + 1e-9 and add(x):
                grew = True
            else:
                confirmed.add(key)
        if not grew:
            break
    keep = _hull_vertices(np.array(zs))
    return [xs[k] for k in keep]


@dataclass(frozen=True, eq=False)
class EffectiveVertices:
    exo: str
    witnesses: np.ndarray  # (n, dimension) feasible q vectors
    relevant_rank: int


def effective_vertices(
    prog: Program, tol: Tolerances = Tolerances(), seed: int = 0, scan_limit: int = BASIS_SCAN_LIMIT
) -> list[EffectiveVertices]:
    factors = [_analyze(p, f.matrix, tol) for p, f in zip(prog.polytopes, prog.network.factors)]
    out = []
    for i, f in enumerate(factors):
        dirs = _relevant_directions(prog, factors, i, seed)
        xs = _projected_vertices(f, dirs, tol, scan_limit)
        qs = np.array([f.lift(x) for x in xs])
        qs.setflags(write=False)
        out.append(EffectiveVertices(f.exo, qs, dirs.shape[1]))
    return out


# -- optimization -------------------------------------------------------------------


def _first_at(values: np.ndarray, target: float, sign: float) -> int:
    if sign > 0:
        hits = np.flatnonzero(values <= target + TIE_TOL)
    else:
        hits = np.flatnonzero(values >= target - TIE_TOL)
    return int(hits[0])


def _product_extrema(prog: Program, pools: Sequence[np.ndarray], budget: int):
    net = prog.network
    sizes = [p.shape[0] for p in pools]
    total = math.prod(sizes)
    if total > budget:
        raise DegreeTooHigh(f"vertex product has {total} combinations (budget {budget})")
    marg = [p @ f.matrix for p, f in zip(pools, net.factors)]
    if not marg:
        v = float(net.contract([], "outer"))
        return v, (), v, (), 1
    rest = total // sizes[0]
    step = max(1, _CHUNK // max(rest, 1))

    def block(start):
        stop = min(sizes[0], start + step)
        vals = net.contract([marg[0][start:stop]] + marg[1:], "outer")
        return np.asarray(vals).reshape(-1), start * rest

    starts = list(range(0, sizes[0], step))
    mins, maxs = [], []
    for s in starts:
        vals, _ = block(s)
        mins.append(float(vals.min()))
        maxs.append(float(vals.max()))
    lo, hi = min(mins), max(maxs)

    def locate(extreme, chunk_vals, sign):
        for s, cv in zip(starts, chunk_vals):
            if (sign > 0 and cv <= extreme + TIE_TOL) or (sign < 0 and cv >= extreme - TIE_TOL):
                vals, offset = block(s)
                return offset + _first_at(vals, extreme, sign)
        raise AssertionError("extremum not located")

    i_lo = np.unravel_index(locate(lo, mins, 1.0), sizes)
    i_hi = np.unravel_index(locate(hi, maxs, -1.0), sizes)
    return lo, tuple(int(k) for k in i_lo), hi, tuple(int(k) for k in i_hi), total


def _finish(prog: Program, pools, lo_idx, hi_idx, total, counts) -> BoundInterval:
    exos = [p.exo for p in prog.polytopes]
    arg_lo = {u: pools[k][j].copy() for k, (u, j) in enumerate(zip(exos, lo_idx))}
    arg_hi = {u: pools[k][j].copy() for k, (u, j) in enumerate(zip(exos, hi_idx))}
    lower = prog.evaluate([arg_lo[u] for u in exos])
    upper = prog.evaluate([arg_hi[u] for u in exos])
    lower = min(max(lower, 0.0), 1.0)
    upper = min(max(upper, 0.0), 1.0)
    return BoundInterval(lower, max(upper, lower), arg_lo, arg_hi, counts, total)


def optimize(
    prog: Program,
    budget: int = DEFAULT_BUDGET,
    tol: Tolerances = Tolerances(),
    method: str = "effective",
    seed: int = 0,
) -> BoundInterval:
    """Exact minimum and maximum of the objective over the product of polytopes.

    ``method='vertices'`` evaluates every product of raw vertices (small programs
    only); ``method='effective'`` uses projected vertex sets with the same extrema.
    """
    if method == "vertices":
        pools = [np.asarray(enumerate_vertices(p, tol).vertices) for p in prog.polytopes]
    elif method == "effective":
        pools = [ev.witnesses for ev in effective_vertices(prog, tol, seed)]
    else:
        raise ValueError(f"unknown method {method!r}")
    counts = {p.exo: len(v) for p, v in zip(prog.polytopes, pools)}
    lo, lo_idx, hi, hi_idx, total = _product_extrema(prog, pools, budget)
    return _finish(prog, pools, lo_idx, hi_idx, total, counts)


def sample_oracle(prog: Program, n: int, seed: int, tol: Tolerances = Tolerances()) -> BoundInterval:
    """Objective at ``n`` random feasible points; an inner approximation of the bounds."""
    if n <= 0:
        raise ValueError("sample_oracle needs at least one sample")
    rng = np.random.default_rng(seed)
    pools = []
    for p, ev in zip(prog.polytopes, effective_vertices(prog, tol, seed)):
        f = _analyze(p, np.eye(p.dimension), tol)
        extra = []
        for _ in range(8):
            w = rng.standard_normal(p.dimension)
            extra.append(f.lift(_lp_direction(f, w, tol)))
        pool = np.vstack([ev.witnesses] + [np.array(extra)])
        pools.append(pool)
    exos = [p.exo for p in prog.polytopes]
    best_lo, best_hi = math.inf, -math.inf
    arg_lo: dict = {}
    arg_hi: dict = {}
    done = 0
    while done < n:
        m = min(4096, n - done)
        qs = []
        for pool in pools:
            alpha = rng.choice([0.2, 1.0])
            w = rng.dirichlet(np.full(pool.shape[0], alpha), size=m)
            qs.append(w @ pool)
        if qs:
            vals = prog.network.values(qs) / prog.denominator
        else:
            vals = np.full(m, prog.evaluate([]))
        k_lo, k_hi = int(np.argmin(vals)), int(np.argmax(vals))
        if vals[k_lo] < best_lo:
            best_lo = float(vals[k_lo])
            arg_lo = {u: q[k_lo].copy() for u, q in zip(exos, qs)}
        if vals[k_hi] > best_hi:
            best_hi = float(vals[k_hi])
            arg_hi = {u: q[k_hi].copy() for u, q in zip(exos, qs)}
        done += m
    counts = {u: pool.shape[0] for u, pool in zip(exos, pools)}
    return BoundInterval(best_lo, best_hi, arg_lo, arg_hi, counts, n)
