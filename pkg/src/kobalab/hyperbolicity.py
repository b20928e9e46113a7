"""Gromov products, four-point scans, thin-triangle defects and fat-triangle witnesses."""
from __future__ import annotations

import heapq
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import mpmath
import numpy as np

from .domains import Ball, Domain, Polydisk, interior_point, sphere_directions
from .errors import BudgetExhausted, PreconditionError
from .kobayashi import (
    DEFAULT_BUDGET,
    distance_interval,
    distance_lower,
    distance_upper,
    exact_distance,
    segment_lengths,
    SAFETY,
)
from .linalg import norm, to_pairs


@dataclass(frozen=True)
class GromovProductInterval:
    lower: float
    upper: float
    basepoint: np.ndarray

    def to_json(self):
        return {"lower": self.lower, "upper": self.upper, "basepoint": to_pairs(self.basepoint)}


def gromov_product(dom: Domain, x, y, o, budget: int = DEFAULT_BUDGET) -> GromovProductInterval:
    x, y, o = (np.asarray(v, dtype=complex) for v in (x, y, o))
    for v in (x, y, o):
        if not dom.contains(v):
            raise PreconditionError(f"point {v} is not in the domain")
    if np.array_equal(x, o) or np.array_equal(y, o):
        return GromovProductInterval(0.0, 0.0, o)
    ox = distance_interval(dom, o, x, budget)
    oy = distance_interval(dom, o, y, budget)
    xy = distance_interval(dom, x, y, budget)
    lo = 0.5 * (ox[0] + oy[0] - xy[1])
    up = 0.5 * (ox[1] + oy[1] - xy[0])
    return GromovProductInterval(float(lo), float(up), o)


# ---------------------------------------------------------------------------
# four-point scan

@dataclass(frozen=True)
class LayeredSampler:
    """Points c + s t(u) u with s = 1 - 2^{-j} U(1/2, 1), j uniform in 1..k.

    c is a deep interior point, u a Gaussian direction and t(u) the boundary exit,
    so the layer j sits at relative depth about 2^{-j}.
    """

    max_level: int
    radius: float = 10.0

    def sample(self, dom: Domain, n: int, rng: np.random.Generator, center) -> np.ndarray:
        d = dom.dim
        g = rng.normal(size=(n, d)) + 1j * rng.normal(size=(n, d))
        g /= norm(g)[:, None]
        t = dom.ray_exit(np.broadcast_to(center, g.shape), g, r_max=self.radius)
        t = np.where(np.isfinite(t), t, self.radius)
        j = rng.integers(1, self.max_level + 1, size=n)
        s = 1.0 - 2.0 ** (-j.astype(float)) * rng.uniform(0.5, 1.0, size=n)
        return center + (s * t)[:, None] * g


@dataclass
class HyperbolicityReport:
    delta_lower: float
    delta_upper_estimate: float
    sample_count: int
    seed: int
    per_scale: list = field(default_factory=list)

    def to_json(self):
        return {
            "delta_lower": self.delta_lower,
            "delta_upper_estimate": self.delta_upper_estimate,
            "seed": self.seed,
            "samples": self.sample_count,
            "per_scale": self.per_scale,
        }


_PAIRS = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]
_PAIR_INDEX = {p: i for i, p in enumerate(_PAIRS)}


def _pair(i, j):
    return _PAIR_INDEX[(min(i, j), max(i, j))]


def _pairwise_intervals(dom: Domain, Q: np.ndarray, budget: int, workers: int = 1):
    """Q: (N, 4, d). Returns (lower, upper) arrays of shape (N, 6)."""
    n = Q.shape[0]
    lo = np.empty((n, 6))
    up = np.empty((n, 6))
    a = Q[:, [p[0] for p in _PAIRS]].reshape(-1, dom.dim)
    b = Q[:, [p[1] for p in _PAIRS]].reshape(-1, dom.dim)
    ex = exact_distance(dom, a, b)
    if ex is not None:
        ex = np.asarray(ex).reshape(n, 6)
        return ex, ex
    def row(r):
        return [distance_interval(dom, Q[r, i], Q[r, j], budget) for i, j in _PAIRS]

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(row, range(n)))
    else:
        rows = [row(r) for r in range(n)]
    for r, vals in enumerate(rows):
        lo[r], up[r] = zip(*vals)
    return lo, up


def four_point_defects(lo: np.ndarray, up: np.ndarray):
    """Certified and estimated four-point defects over all 12 role assignments.

    For base o, pair (x, y) and third point z the defect is
    min{(x|z)_o, (z|y)_o} - (x|y)_o.
    """
    n = lo.shape[0]
    cert = np.zeros(n)
    est = np.full(n, -np.inf)

    def gp(i, j, o, a, b):
        # (i|j)_o from distance arrays a (used for the + terms) and b (for the - term)
        if i == o or j == o:
            return np.zeros(n)
        return 0.5 * (a[:, _pair(o, i)] + a[:, _pair(o, j)] - b[:, _pair(i, j)])

    for o in range(4):
        rest = [k for k in range(4) if k != o]
        for z in rest:
            x, y = [k for k in rest if k != z]
            c = np.minimum(gp(x, z, o, lo, up), gp(z, y, o, lo, up)) - gp(x, y, o, up, lo)
            e = np.minimum(gp(x, z, o, up, lo), gp(z, y, o, up, lo)) - gp(x, y, o, lo, up)
            cert = np.maximum(cert, c)
            est = np.maximum(est, e)
    return cert, np.maximum(est, 0.0)


def four_point_scan(dom: Domain, n: int = 10_000, levels=range(4, 13), seed: int = 0,
                    budget: int = DEFAULT_BUDGET, radius: float = 10.0, workers: int = 1) -> HyperbolicityReport:
    """Four-point scan, one batch of n quadruples per layered sampler depth k."""
    if n <= 0:
        raise PreconditionError("need at least one quadruple")
    center = interior_point([dom], seed=seed)
    if center is None:
        raise PreconditionError("no interior point found")
    per_scale = []
    best_lo, best_up = 0.0, 0.0
    for k in levels:
        rng = np.random.default_rng([seed, int(k)])
        sampler = LayeredSampler(int(k), radius)
        Q = sampler.sample(dom, 4 * n, rng, center).reshape(n, 4, dom.dim)
        lo, up = _pairwise_intervals(dom, Q, budget, workers)
        cert, est = four_point_defects(lo, up)
        rec = {"k": int(k), "delta_lower": float(cert.max()), "delta_upper_estimate": float(est.max())}
        per_scale.append(rec)
        best_lo = max(best_lo, rec["delta_lower"])
        best_up = max(best_up, rec["delta_upper_estimate"])
    return HyperbolicityReport(best_lo, max(best_up, best_lo), n * len(per_scale), seed, per_scale)


# ---------------------------------------------------------------------------
# certified distance from a point to a segment

class _ExactMetric:
    """Exact distances on (scaled) balls and polydisks in extended precision.

    Points are stored in the coordinates of the unit model, which is an affine
    change of variables, so segments and curves can be formed there directly.
    """

    def __init__(self, dom: Domain):
        self.dom = dom
        self.ball = isinstance(dom, Ball)

    def point(self, z):
        dom = self.dom
        scale = [dom.radius] * dom.dim if self.ball else list(dom.radii)
        return [(mpmath.mpc(complex(zi)) - mpmath.mpc(complex(ci))) / r
                for zi, ci, r in zip(z, dom.center, scale)]

    def to_complex(self, u):
        dom = self.dom
        scale = [dom.radius] * dom.dim if self.ball else list(dom.radii)
        return np.array([complex(ui * r) + ci for ui, ci, r in zip(u, dom.center, scale)])

    def dist(self, a, b):
        if self.ball:
            na = mpmath.fsum(abs(x) ** 2 for x in a)
            nb = mpmath.fsum(abs(x) ** 2 for x in b)
            ab = mpmath.fsum(x * mpmath.conj(y) for x, y in zip(a, b))
            num = mpmath.fsum(abs(x - y) ** 2 for x, y in zip(a, b)) - (na * nb - abs(ab) ** 2)
            return mpmath.atanh(mpmath.sqrt(max(num, 0)) / abs(1 - ab))
        return max(mpmath.atanh(abs(x - y) / abs(1 - x * mpmath.conj(y))) for x, y in zip(a, b))

    def length_upper(self, a, b):
        """Upper bound for the Kobayashi length of the segment [a, b]."""
        if self.ball:
            nd = mpmath.sqrt(mpmath.fsum(abs(x - y) ** 2 for x, y in zip(a, b)))
            r2 = max(mpmath.fsum(abs(x) ** 2 for x in a), mpmath.fsum(abs(x) ** 2 for x in b))
            return nd / (1 - r2)
        return max(abs(x - y) / (1 - max(abs(x), abs(y)) ** 2) for x, y in zip(a, b))

    def lerp(self, a, b, s):
        return [x + s * (y - x) for x, y in zip(a, b)]


class _BracketMetric:
    """Bracket lower bounds and Simpson length bounds on general domains (float64)."""

    def __init__(self, dom: Domain):
        self.dom = dom

    def dist(self, a, b):
        a, b = np.asarray(a, dtype=complex), np.asarray(b, dtype=complex)
        if np.array_equal(a, b):
            return 0.0
        return distance_lower(self.dom, a, b)

    def length_upper(self, a, b):
        a, b = np.asarray(a, dtype=complex), np.asarray(b, dtype=complex)
        return SAFETY * float(segment_lengths(self.dom, a[None], b[None])[0])

    def point(self, z):
        return np.asarray(z, dtype=complex)

    def to_complex(self, u):
        return np.asarray(u, dtype=complex)

    def lerp(self, a, b, s):
        return a + float(s) * (b - a)


def _metric_for(dom: Domain):
    return _ExactMetric(dom) if isinstance(dom, (Ball, Polydisk)) else _BracketMetric(dom)


def segment_distance_lower(metric, x, a, b, target=np.inf, tol: float = 1e-3, max_evals: int = 400) -> float:
    """Certified lower bound for inf_s d(x, a + s(b - a)).

    On each sub-interval [s_i, s_{i+1}], d(x, .) >= (d_i + d_{i+1} - L_i) / 2 where L_i
    bounds the length of the sub-segment. Intervals with the worst bound are bisected.
    """
    s_vals = [mpmath.mpf(i) / 8 for i in range(9)] if isinstance(metric, _ExactMetric) else [i / 8 for i in range(9)]
    pts = [metric.lerp(a, b, s) for s in s_vals]
    ds = [metric.dist(x, p) for p in pts]
    heap = []
    for i in range(8):
        L = metric.length_upper(pts[i], pts[i + 1])
        bound = (ds[i] + ds[i + 1] - L) / 2
        heapq.heappush(heap, (float(bound), i, s_vals[i], s_vals[i + 1], pts[i], pts[i + 1], ds[i], ds[i + 1]))
    evals = 9
    counter = 8
    while True:
        bound, _, s0, s1, p0, p1, d0, d1 = heap[0]
        if bound >= target or float(min(d0, d1)) - bound <= tol or evals >= max_evals:
            return max(float(bound), 0.0)
        heapq.heappop(heap)
        sm = (s0 + s1) / 2
        pm = metric.lerp(a, b, sm)
        dm = metric.dist(x, pm)
        evals += 1
        for (sa, sb, pa, pb, da, db) in ((s0, sm, p0, pm, d0, dm), (sm, s1, pm, p1, dm, d1)):
            L = metric.length_upper(pa, pb)
            counter += 1
            heapq.heappush(heap, (float((da + db - L) / 2), counter, sa, sb, pa, pb, da, db))


def ray_distance_lower(metric, x, o, tail_from, target=np.inf, tol: float = 1e-3) -> float:
    """Certified lower bound for d(x, [o, y)) using the segment [o, tail_from] and a tail bound.

    Along a ray from o in a convex domain d(o, .) is nondecreasing, so points past
    tail_from are at distance >= d(o, tail_from) - d(o, x) from x.
    """
    head = segment_distance_lower(metric, x, o, tail_from, target, tol)
    tail = metric.dist(o, tail_from) - metric.dist(o, x)
    return min(head, max(float(tail), 0.0))


# ---------------------------------------------------------------------------
# fat triangles

@dataclass
class TriangleDefect:
    vertices: tuple
    defect_lower: float
    side_point: np.ndarray | None = None
    T: float | None = None
    t0: float | None = None
    history: list = field(default_factory=list)

    def to_json(self):
        return {
            "vertices": [to_pairs(np.asarray(v, dtype=complex)) for v in self.vertices],
            "defect_lower": self.defect_lower,
            "side_point": None if self.side_point is None else to_pairs(self.side_point),
            "T": self.T,
            "t0": self.t0,
            "history": self.history,
        }


def _near_boundary(dom: Domain, z, toward, eps=1e-7) -> bool:
    z = np.asarray(z, dtype=complex)
    w = np.asarray(toward, dtype=complex) - z
    return (not dom.contains(z)) and dom.contains(z + eps * w / norm(w))


def check_boundary_disk(dom: Domain, o, x, y, n_phase: int = 16, radius: float = 0.25) -> None:
    """Validate that x lies in an open affine disk of the boundary in the line through x, y."""
    o, x, y = (np.asarray(v, dtype=complex) for v in (o, x, y))
    if not dom.contains(o):
        raise PreconditionError("o must be an interior point")
    if not _near_boundary(dom, x, o) or not _near_boundary(dom, y, o):
        raise PreconditionError("x and y must be boundary points")
    phases = np.exp(2j * np.pi * np.arange(n_phase) / n_phase)
    for r in (radius, radius / 4):
        for ph in phases:
            z = x + r * ph * (y - x)
            if dom.contains(z) or not _near_boundary(dom, z, o):
                raise PreconditionError("the complex line through x and y does not meet the boundary in a disk around x")


def _curve(metric, start, o, t):
    """start + e^{-2t} (o - start), with start and o already in the metric's coordinates."""
    if isinstance(metric, _ExactMetric):
        e = mpmath.exp(-2 * mpmath.mpf(t))
        return [s + e * (c - s) for s, c in zip(start, o)]
    return start + np.exp(-2 * t) * (o - start)


def _estimate_segment(metric, x, a, b, depth: int):
    """Sampled (uncertified) minimum of d(x, .) on [a, b], refined toward both ends."""
    one = mpmath.mpf(1) if isinstance(metric, _ExactMetric) else 1.0
    fr = [one * k / 32 for k in range(33)]
    for j in range(6, depth, 2):
        fr += [one / 2 ** j, 1 - one / 2 ** j]
    return min(float(metric.dist(x, metric.lerp(a, b, f))) for f in fr)


def fat_triangle_witness(dom: Domain, o, x, y, M: float, max_doublings: int = 8,
                         n_grid: int = 64, n_certify: int = 3, tol: float = 1e-3) -> TriangleDefect:
    """Triangle (o, x_T, y_T) whose side point x_{t0} is farther than M from the other sides.

    T doubles from 1. For each T the side-point parameter t0 is scanned on a 64-point
    grid of (0, T) with sampled distance estimates; the best few candidates, and the
    previous round's t0, are then certified.
    """
    o, x, y = (np.asarray(v, dtype=complex) for v in (o, x, y))
    check_boundary_disk(dom, o, x, y)
    metric = _metric_for(dom)
    best_t0 = None
    history = []
    T = 1.0
    best = None
    for _ in range(max_doublings + 1):
        S = 4 * T + 8
        prec = 30 + int(2 * S / np.log(10))
        depth = int(2 * T / np.log(2)) + 8
        with mpmath.workdps(prec):
            oo, xx, yy = metric.point(o), metric.point(x), metric.point(y)
            xT = _curve(metric, xx, oo, T)
            yT = _curve(metric, yy, oo, T)
            tail = _curve(metric, yy, oo, S)
            grid = [float(t) for t in T * np.arange(1, n_grid) / n_grid]
            scores = []
            for t0 in grid:
                a = _curve(metric, xx, oo, t0)
                far = min(float(metric.dist(a, _curve(metric, yy, oo, s))) for s in np.linspace(0, S, 49))
                near = _estimate_segment(metric, a, xT, yT, depth)
                scores.append((min(far, near), t0))
            scores.sort(reverse=True)
            cands = [t for _, t in scores[:n_certify]]
            if best_t0 is not None and best_t0 < T and best_t0 not in cands:
                cands.append(best_t0)
            round_best = (-np.inf, None)
            for t0 in cands:
                a = _curve(metric, xx, oo, t0)
                far = ray_distance_lower(metric, a, oo, tail, tol=tol)
                if far <= round_best[0]:
                    continue
                near = segment_distance_lower(metric, a, xT, yT, target=far, tol=tol)
                val = min(far, near)
                if val > round_best[0]:
                    round_best = (val, t0)
            val, t0 = round_best
            best_t0 = t0
            history.append({"T": T, "t0": float(t0), "defect_lower": float(val)})
            best = TriangleDefect((o, metric.to_complex(xT), metric.to_complex(yT)), float(val),
                                  metric.to_complex(_curve(metric, xx, oo, t0)), T, float(t0), list(history))
        if val > M:
            return best
        T *= 2
    raise BudgetExhausted(f"no witness with defect > {M} up to T = {T / 2}", partial=best)


def _evenly_spaced(dom: Domain, poly, n: int, sub: int = 64):
    """n points along a polyline, evenly spaced in (upper-bound) Kobayashi length."""
    if len(poly) == 1:
        return poly
    s = np.arange(sub + 1) / sub
    fine = np.vstack([a + s[:-1, None] * (b - a) for a, b in zip(poly[:-1], poly[1:])] + [poly[-1:]])
    seg = segment_lengths(dom, fine[:-1], fine[1:])
    cum = np.concatenate([[0.0], np.cumsum(seg)])
    targets = cum[-1] * np.linspace(0, 1, n)
    j = np.clip(np.searchsorted(cum, targets, side="right") - 1, 0, len(seg) - 1)
    with np.errstate(invalid="ignore", divide="ignore"):
        f = np.where(seg[j] > 0, (targets - cum[j]) / seg[j], 0.0)
    return fine[j] + np.clip(f, 0, 1)[:, None] * (fine[j + 1] - fine[j])


def thin_triangle_defect(dom: Domain, x, y, z, samples: int = 32, budget: int = DEFAULT_BUDGET,
                         sides: str = "geodesic", tol: float = 1e-3) -> TriangleDefect:
    """max over sample points of side xy of a certified lower bound for their distance to the other sides."""
    x, y, z = (np.asarray(v, dtype=complex) for v in (x, y, z))
    for v in (x, y, z):
        if not dom.contains(v):
            raise PreconditionError(f"point {v} is not in the domain")
    if np.array_equal(x, y) and np.array_equal(y, z):
        return TriangleDefect((x, y, z), 0.0)

    def side(a, b):
        if np.array_equal(a, b):
            return a[None]
        if sides == "segments":
            return np.stack([a, b])
        return distance_upper(dom, a, b, budget)[1].nodes

    xy, yz, zx = side(x, y), side(y, z), side(z, x)
    metric = _metric_for(dom)
    probes = _evenly_spaced(dom, xy, samples)
    best, best_pt = 0.0, None
    with mpmath.workdps(30):
        for pt in probes:
            a = metric.point(pt)
            dist = np.inf
            for poly in (yz, zx):
                if len(poly) == 1:
                    dist = min(dist, float(metric.dist(a, metric.point(poly[0]))))
                    continue
                for u, v in zip(poly[:-1], poly[1:]):
                    dist = min(dist, segment_distance_lower(metric, a, metric.point(u), metric.point(v),
                                                            tol=tol))
            if dist > best:
                best, best_pt = dist, pt
    return TriangleDefect((x, y, z), float(best), best_pt)
