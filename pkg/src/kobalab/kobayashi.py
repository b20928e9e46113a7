"""Kobayashi metric bounds, exact model distances and certified distance brackets."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .domains import (
    AffineImage,
    Ball,
    Domain,
    HalfSpace,
    Polydisk,
    dir_distance_batch,
    interior_point,
)
from .errors import KobalabError, PreconditionError
from .linalg import hdot, norm, to_pairs

SIMPSON_SAMPLES = 33
SAFETY = 1.01
START_NODES = 8
MAX_NODES = 64
DEFAULT_BUDGET = 40


# ---------------------------------------------------------------------------
# closed forms on the model domains

def _arctanh_ratio(num, den):
    return np.arctanh(np.minimum(num / den, 1.0))


def dist_disk(z1, z2):
    """Kobayashi (Poincare) distance on the unit disk."""
    z1, z2 = np.asarray(z1, dtype=complex), np.asarray(z2, dtype=complex)
    if np.any(np.abs(z1) >= 1) or np.any(np.abs(z2) >= 1):
        raise PreconditionError("arguments must lie in the open unit disk")
    out = _arctanh_ratio(np.abs(z1 - z2), np.abs(1 - z1 * np.conj(z2)))
    return float(out) if out.ndim == 0 else out


def dist_halfplane(z1, z2):
    """Kobayashi distance on the upper half-plane."""
    z1, z2 = np.asarray(z1, dtype=complex), np.asarray(z2, dtype=complex)
    if np.any(z1.imag <= 0) or np.any(z2.imag <= 0):
        raise PreconditionError("arguments must lie in the upper half-plane")
    x = np.abs(z1 - z2) ** 2 / (2 * z1.imag * z2.imag)
    # arccosh(1 + x) written to stay accurate for small x
    out = 0.5 * np.log1p(x + np.sqrt(x * (x + 2)))
    return float(out) if out.ndim == 0 else out


def dist_ball(p, q):
    """Kobayashi distance on the unit ball of C^d (rows of p, q are points)."""
    p, q = np.asarray(p, dtype=complex), np.asarray(q, dtype=complex)
    if np.any(norm(p) >= 1) or np.any(norm(q) >= 1):
        raise PreconditionError("arguments must lie in the open unit ball")
    # |1 - <p,q>|^2 - (1-|p|^2)(1-|q|^2) = |p-q|^2 - sum_{i<j} |p_i q_j - p_j q_i|^2
    num = norm(p - q) ** 2
    d = p.shape[-1]
    for i in range(d):
        for j in range(i + 1, d):
            num = num - np.abs(p[..., i] * q[..., j] - p[..., j] * q[..., i]) ** 2
    out = _arctanh_ratio(np.sqrt(np.maximum(num, 0.0)), np.abs(1 - hdot(p, q)))
    return float(out) if np.ndim(out) == 0 else out


def dist_polydisk(p, q):
    p, q = np.asarray(p, dtype=complex), np.asarray(q, dtype=complex)
    out = np.max(dist_disk(p, q), axis=-1)
    return float(out) if np.ndim(out) == 0 else out


def metric_disk(z, v):
    z, v = np.asarray(z, dtype=complex), np.asarray(v, dtype=complex)
    return np.abs(v) / (1 - np.abs(z) ** 2)


def metric_halfplane(z, v):
    z, v = np.asarray(z, dtype=complex), np.asarray(v, dtype=complex)
    return np.abs(v) / (2 * z.imag)


def metric_ball(p, v):
    p, v = np.asarray(p, dtype=complex), np.asarray(v, dtype=complex)
    s = 1 - norm(p) ** 2
    return np.sqrt(norm(v) ** 2 / s + np.abs(hdot(p, v)) ** 2 / s ** 2)


def metric_polydisk(p, v):
    return np.max(metric_disk(p, v), axis=-1)


MODELS = ("disk", "halfplane", "ball", "polydisk")


def exact_oracle(model: str, p, q) -> float:
    """Exact distance on a unit model domain."""
    if model == "disk":
        return dist_disk(np.asarray(p, dtype=complex).reshape(()), np.asarray(q, dtype=complex).reshape(()))
    if model == "halfplane":
        return dist_halfplane(np.asarray(p, dtype=complex).reshape(()), np.asarray(q, dtype=complex).reshape(()))
    if model == "ball":
        return dist_ball(p, q)
    if model == "polydisk":
        return dist_polydisk(p, q)
    raise ValueError(f"unsupported model {model!r}; choose from {MODELS}")


def _halfspace_coord(dom: HalfSpace, Z):
    # i (z conj(n) - offset) lies in the upper half-plane exactly when z is in dom
    return 1j * (np.asarray(Z)[..., 0] * np.conj(dom.normal[0]) - dom.offset)


def exact_distance(dom: Domain, p, q):
    """Exact distance when dom is (an affine image of) a model domain, else None."""
    p, q = np.asarray(p, dtype=complex), np.asarray(q, dtype=complex)
    if isinstance(dom, Ball):
        return dist_ball((p - dom.center) / dom.radius, (q - dom.center) / dom.radius)
    if isinstance(dom, Polydisk):
        return dist_polydisk((p - dom.center) / dom.radii, (q - dom.center) / dom.radii)
    if isinstance(dom, HalfSpace) and dom.dim == 1:
        return dist_halfplane(_halfspace_coord(dom, p), _halfspace_coord(dom, q))
    if isinstance(dom, AffineImage):
        return exact_distance(dom.base, dom._pull(p), dom._pull(q))
    return None


def exact_metric(dom: Domain, p, v):
    """Exact infinitesimal Kobayashi metric when available, else None."""
    p, v = np.asarray(p, dtype=complex), np.asarray(v, dtype=complex)
    if isinstance(dom, Ball):
        return metric_ball((p - dom.center) / dom.radius, v / dom.radius)
    if isinstance(dom, Polydisk):
        return metric_polydisk((p - dom.center) / dom.radii, v / dom.radii)
    if isinstance(dom, HalfSpace) and dom.dim == 1:
        dw = 1j * v[..., 0] * np.conj(dom.normal[0])
        return metric_halfplane(_halfspace_coord(dom, p), dw)
    if isinstance(dom, AffineImage):
        return exact_metric(dom.base, dom._pull(p), v @ dom._linv.T)
    return None


# ---------------------------------------------------------------------------
# infinitesimal bounds

@dataclass(frozen=True)
class FinslerBracket:
    lower: float
    upper: float

    def __contains__(self, x):
        return self.lower <= x <= self.upper

    def to_json(self):
        return {"lower": self.lower, "upper": self.upper}


def _require_proper(dom: Domain):
    if not dom.c_proper:
        raise PreconditionError("domain is not C-proper; Kobayashi distance is degenerate")


def _require_members(dom: Domain, *pts):
    out = []
    for p in pts:
        p = np.asarray(p, dtype=complex)
        dom._check_dim(p)
        if not dom.contains(p):
            raise PreconditionError(f"point {p} is not in the domain")
        out.append(p)
    return out


def finsler_bracket_batch(dom: Domain, P, V):
    """Rows of (lower, upper) = (|v| / 2 delta(p;v), |v| / delta(p;v))."""
    nv = norm(np.atleast_2d(V))
    dd = dir_distance_batch(dom, P, V)
    return nv / (2 * dd), nv / dd


def finsler_bracket(dom: Domain, p, v) -> FinslerBracket:
    _require_proper(dom)
    (p,) = _require_members(dom, p)
    v = np.asarray(v, dtype=complex)
    if norm(v) == 0:
        raise PreconditionError("direction must be nonzero")
    lo, up = finsler_bracket_batch(dom, p[None], v[None])
    return FinslerBracket(float(lo[0]), float(up[0]))


def finsler_upper(dom: Domain, P, V) -> np.ndarray:
    """Pointwise upper bound for K(p; v) used as the path integrand.

    On domains with closed-form slices this is the Poincare metric of the best
    disk or half-plane inscribed in the slice (never worse than |v| / delta(p;v));
    elsewhere it is |v| / delta(p;v).
    """
    P = np.atleast_2d(np.asarray(P, dtype=complex))
    V = np.atleast_2d(np.asarray(V, dtype=complex))
    P, V = np.broadcast_arrays(P, V)
    nv = norm(V)
    out = np.full(P.shape[0], np.inf)
    inside = dom.contains_batch(P)
    if not np.any(inside):
        return out
    idx = np.flatnonzero(inside)
    U = V[idx] / nv[idx, None]
    sh = dom.slice_shapes(P[idx], U)
    if sh is not None:
        k = sh.finsler_upper()
    else:
        k = 1.0 / dir_distance_batch(dom, P[idx], U)
    out[idx] = nv[idx] * k
    return out


# ---------------------------------------------------------------------------
# distance lower bounds

def _line_ratio_bound(dom: Domain, p, q, n_phase: int = 64) -> float:
    """max over boundary points xi of the complex line through p, q of |log(|p-xi|/|q-xi|)| / 2."""
    u = (q - p) / norm(q - p)
    thetas = 2 * np.pi * np.arange(n_phase) / n_phase
    best = 0.0
    for origin in (p, q):
        def value(th):
            rays = np.exp(1j * th)[:, None] * u
            t = dom.ray_exit(np.broadcast_to(origin, rays.shape), rays)
            with np.errstate(divide="ignore", invalid="ignore"):
                xi = origin + t[:, None] * rays
                v = 0.5 * np.abs(np.log(norm(p - xi) / norm(q - xi)))
            return np.where(np.isfinite(v), v, 0.0)

        vals = value(thetas)
        k = int(np.argmax(vals))
        best = max(best, float(vals[k]))
        # golden-section maximisation around the best grid phase
        step = 2 * np.pi / n_phase
        a, b = thetas[k] - step, thetas[k] + step
        g = (np.sqrt(5) - 1) / 2
        x1, x2 = b - g * (b - a), a + g * (b - a)
        f1, f2 = value(np.array([x1]))[0], value(np.array([x2]))[0]
        for _ in range(40):
            if f1 > f2:
                b, x2, f2 = x2, x1, f1
                x1 = b - g * (b - a)
                f1 = value(np.array([x1]))[0]
            else:
                a, x1, f1 = x1, x2, f2
                x2 = a + g * (b - a)
                f2 = value(np.array([x2]))[0]
        best = max(best, f1, f2)
    return best


def _log_ratio_bound(dom: Domain, p, q) -> float:
    dd = dir_distance_batch(dom, np.stack([p, q]), np.stack([q - p, p - q]))
    return float(0.5 * np.log1p(norm(p - q) / np.min(dd)))


def distance_lower_parts(dom: Domain, p, q) -> dict:
    p, q = _require_members(dom, p, q)
    if np.array_equal(p, q):
        return {"line-ratio": 0.0, "log-ratio": 0.0}
    return {"line-ratio": _line_ratio_bound(dom, p, q), "log-ratio": _log_ratio_bound(dom, p, q)}


def distance_lower(dom: Domain, p, q) -> float:
    _require_proper(dom)
    return max(distance_lower_parts(dom, p, q).values())


# ---------------------------------------------------------------------------
# distance upper bound: optimised polylines

@dataclass
class PathPolyline:
    nodes: np.ndarray
    length_upper: float

    def to_json(self):
        return [to_pairs(n) for n in self.nodes]


def segments_inside(dom: Domain, nodes, samples: int = 32) -> bool:
    """All nodes, and `samples` interior points of every segment, are members."""
    nodes = np.asarray(nodes)
    if not np.all(dom.contains_batch(nodes)):
        return False
    if len(nodes) < 2:
        return True
    s = np.arange(1, samples + 1) / (samples + 1)
    a, b = nodes[:-1], nodes[1:]
    pts = a[:, None, :] + s[None, :, None] * (b - a)[:, None, :]
    return bool(np.all(dom.contains_batch(pts.reshape(-1, nodes.shape[1]))))


_SIMPSON_W = np.ones(SIMPSON_SAMPLES)
_SIMPSON_W[1:-1:2] = 4.0
_SIMPSON_W[2:-1:2] = 2.0
_SIMPSON_W /= 3.0 * (SIMPSON_SAMPLES - 1)
_SIMPSON_S = np.linspace(0.0, 1.0, SIMPSON_SAMPLES)
_HALF_W = np.ones(SIMPSON_SAMPLES // 2 + 1)
_HALF_W[1:-1:2] = 4.0
_HALF_W[2:-1:2] = 2.0
_HALF_W /= 3.0 * (SIMPSON_SAMPLES // 2)


def segment_lengths(dom: Domain, a, b, with_error: bool = False):
    """Simpson integral of finsler_upper along each segment a_i -> b_i."""
    a, b = np.atleast_2d(a), np.atleast_2d(b)
    m, d = a.shape
    diff = b - a
    pts = a[:, None, :] + _SIMPSON_S[None, :, None] * diff[:, None, :]
    vals = finsler_upper(dom, pts.reshape(-1, d), np.repeat(diff, SIMPSON_SAMPLES, axis=0))
    vals = vals.reshape(m, SIMPSON_SAMPLES)
    zero = norm(diff) == 0
    with np.errstate(invalid="ignore"):
        full = vals @ _SIMPSON_W
        full = np.where(zero, 0.0, full)
        if not with_error:
            return full
        half = vals[:, ::2] @ _HALF_W
        err = np.where(zero, 0.0, np.abs(full - half) / 15.0)
    return full, err


def _path_from_fractions(nodes, seg, k):
    """Resample a polyline at k interior nodes equally spaced in integrated length."""
    cum = np.concatenate([[0.0], np.cumsum(seg)])
    targets = cum[-1] * np.arange(1, k + 1) / (k + 1)
    j = np.clip(np.searchsorted(cum, targets, side="right") - 1, 0, len(seg) - 1)
    with np.errstate(invalid="ignore", divide="ignore"):
        frac = np.where(seg[j] > 0, (targets - cum[j]) / seg[j], 0.0)
    inner = nodes[j] + frac[:, None] * (nodes[j + 1] - nodes[j])
    return np.vstack([nodes[:1], inner, nodes[-1:]])


def _straight(p, q, k):
    s = np.arange(k + 2) / (k + 1)
    return p + s[:, None] * (q - p)


def _bent(p, q, c, k):
    k1 = max(k // 2, 1)
    first = _straight(p, c, k1)
    second = _straight(c, q, k - k1 - 1 + 1)
    return np.vstack([first, second[1:]])


def _arc_seeds(dom: Domain, p, q, k):
    """Poincare geodesics of the disks and half-planes bounding the slice through p, q."""
    u = (q - p) / norm(q - p)
    sh = dom.slice_shapes(p[None], u[None])
    if sh is None:
        return []
    L = norm(q - p)
    frac = np.arange(k + 2) / (k + 1)
    seeds = []
    for c, r in zip(sh.disk_c[0], sh.disk_r[0]):
        if not np.isfinite(r):
            continue
        w1, w2 = (0 - c) / r, (L - c) / r
        phi2 = (w2 - w1) / (1 - np.conj(w1) * w2)
        rho = np.tanh(frac * np.arctanh(min(abs(phi2), 1 - 1e-16)))
        s = rho * (phi2 / abs(phi2) if abs(phi2) > 0 else 1.0)
        w = (s + w1) / (1 + np.conj(w1) * s)
        zeta = c + r * w
        seeds.append(p + zeta[:, None] * u)
    for nu, h in zip(sh.hp_nu[0], sh.hp_h[0]):
        if not np.isfinite(h):
            continue
        # zeta -> i (zeta conj(nu) + h) maps the half-plane onto the upper half-plane
        w1 = 1j * h
        w2 = 1j * (L * np.conj(nu) + h)
        phi2 = (w2 - w1) / (w2 - np.conj(w1))
        rho = np.tanh(frac * np.arctanh(min(abs(phi2), 1 - 1e-16)))
        s = rho * (phi2 / abs(phi2) if abs(phi2) > 0 else 1.0)
        w = (w1 - np.conj(w1) * s) / (1 - s)
        zeta = (w / 1j - h) * nu
        seeds.append(p + zeta[:, None] * u)
    return seeds


def _deepest(dom: Domain, seed: int):
    cache = dom.__dict__.setdefault("_deepest_cache", {})
    if seed not in cache:
        cache[seed] = interior_point([dom], seed=seed)
    return cache[seed]


def _path_value(dom, nodes):
    return float(np.sum(segment_lengths(dom, nodes[:-1], nodes[1:])))


def _descend(dom: Domain, nodes, sweeps: int):
    """Red-black pattern search on interior nodes of a polyline.

    Nodes of equal parity share no segment, so each moves independently to the
    best of its 4d axis trials; the step shrinks when a sweep makes no progress.
    """
    nodes = nodes.copy()
    n_int = len(nodes) - 2
    if n_int <= 0 or sweeps <= 0:
        return nodes
    d = nodes.shape[1]
    axes = np.concatenate([np.eye(d), 1j * np.eye(d)]).astype(complex)
    moves = np.concatenate([axes, -axes])
    n_mv = moves.shape[0]
    seg = segment_lengths(dom, nodes[:-1], nodes[1:])
    scale = 0.25
    for _ in range(sweeps):
        improved = False
        for parity in (0, 1):
            idx = np.arange(1 + parity, n_int + 1, 2)
            if idx.size == 0:
                continue
            local = 0.5 * (norm(nodes[idx] - nodes[idx - 1]) + norm(nodes[idx + 1] - nodes[idx]))
            trial = nodes[idx][None] + scale * local[None, :, None] * moves[:, None, :]
            trial = trial.reshape(-1, d)
            prev = np.tile(nodes[idx - 1], (n_mv, 1))
            nxt = np.tile(nodes[idx + 1], (n_mv, 1))
            both = segment_lengths(dom, np.vstack([prev, trial]), np.vstack([trial, nxt]))
            m = trial.shape[0]
            left = both[:m].reshape(n_mv, -1)
            right = both[m:].reshape(n_mv, -1)
            tot = left + right
            best = np.argmin(tot, axis=0)
            cols = np.arange(idx.size)
            better = tot[best, cols] < (seg[idx - 1] + seg[idx]) * (1 - 1e-12)
            if np.any(better):
                improved = True
                acc = idx[better]
                bsel, csel = best[better], cols[better]
                nodes[acc] = trial.reshape(n_mv, -1, d)[bsel, csel]
                seg[acc - 1] = left[bsel, csel]
                seg[acc] = right[bsel, csel]
        if not improved:
            scale *= 0.5
            if scale < 1e-4:
                break
    return nodes


def distance_upper(dom: Domain, p, q, budget: int = DEFAULT_BUDGET, seed: int = 0):
    """Upper bound for d(p, q) with its witness polyline.

    Returns (value, path, quadrature_error). The value is the Simpson length of the
    best polyline found, inflated by the 1.01 safety factor (or by the estimated
    quadrature error when that is larger).
    """
    p, q = _require_members(dom, p, q)
    if np.array_equal(p, q):
        return 0.0, PathPolyline(p[None].copy(), 0.0), 0.0
    k = START_NODES
    seeds = [_straight(p, q, k)]
    deep = _deepest(dom, seed)
    if deep is not None and norm(deep - p) > 0 and norm(deep - q) > 0:
        seeds.append(_bent(p, q, deep, k))
    seeds.extend(_arc_seeds(dom, p, q, k))
    scored = [(_path_value(dom, s), i, s) for i, s in enumerate(seeds)]
    scored = [t for t in scored if np.isfinite(t[0])]
    if not scored:
        raise KobalabError("no seed path stays inside the domain")
    value, _, nodes = min(scored, key=lambda t: (t[0], t[1]))
    nodes = _descend(dom, nodes, budget)
    seg = segment_lengths(dom, nodes[:-1], nodes[1:])
    value = float(seg.sum())
    while k < MAX_NODES:
        k *= 2
        cand = _descend(dom, _path_from_fractions(nodes, seg, k), budget)
        cseg = segment_lengths(dom, cand[:-1], cand[1:])
        cval = float(cseg.sum())
        if not cval < value:
            break
        gain = (value - cval) / value
        nodes, seg, value = cand, cseg, cval
        if gain <= 0.01:
            break
    seg, err = segment_lengths(dom, nodes[:-1], nodes[1:], with_error=True)
    value = float(seg.sum())
    qerr = float(err.sum())
    upper = max(SAFETY * value, value + qerr)
    return upper, PathPolyline(nodes, upper), qerr


# ---------------------------------------------------------------------------
# brackets

@dataclass
class DistanceBracket:
    lower: float
    upper: float
    methods: list = field(default_factory=list)
    path: PathPolyline | None = None
    quadrature_error: float = 0.0

    def __contains__(self, x):
        return self.lower <= x <= self.upper

    def to_json(self):
        return {
            "lower": self.lower,
            "upper": self.upper,
            "path": [] if self.path is None else self.path.to_json(),
            "methods": list(self.methods),
            "quadrature_error": self.quadrature_error,
        }


def _canonical(p, q):
    key_p = tuple(np.concatenate([p.real, p.imag]))
    key_q = tuple(np.concatenate([q.real, q.imag]))
    return (p, q) if key_p <= key_q else (q, p)


def distance_bracket(dom: Domain, p, q, budget: int = DEFAULT_BUDGET, seed: int = 0) -> DistanceBracket:
    """Certified interval for d(p, q), symmetric in (p, q)."""
    _require_proper(dom)
    p, q = _require_members(dom, p, q)
    if np.array_equal(p, q):
        return DistanceBracket(0.0, 0.0, ["trivial"], PathPolyline(p[None].copy(), 0.0))
    a, b = _canonical(p, q)
    parts = distance_lower_parts(dom, a, b)
    tag, lower = max(parts.items(), key=lambda kv: kv[1])
    upper, path, qerr = distance_upper(dom, a, b, budget, seed)
    if lower > upper * (1 + 1e-9):
        raise KobalabError(f"bracket inversion: lower {lower} > upper {upper}")
    return DistanceBracket(lower, upper, [f"lower:{tag}", "upper:polyline-simpson"], path, qerr)


def distance_interval(dom: Domain, p, q, budget: int = DEFAULT_BUDGET, seed: int = 0):
    """(lower, upper): exact and degenerate on model domains, a bracket elsewhere."""
    ex = exact_distance(dom, p, q)
    if ex is not None:
        return float(ex), float(ex)
    br = distance_bracket(dom, p, q, budget, seed)
    return br.lower, br.upper


# ---------------------------------------------------------------------------
# quasi-geodesic rays toward a boundary point

@dataclass(frozen=True)
class QuasiGeodesicCert:
    p: np.ndarray
    x: np.ndarray
    epsilon: float
    A: float
    B: float = 0.0

    def point(self, t):
        t = np.asarray(t, dtype=float)
        return self.x + np.exp(-2 * t)[..., None] * (self.p - self.x)

    def to_json(self):
        return {"p": to_pairs(self.p), "x": to_pairs(self.x), "epsilon": self.epsilon, "A": self.A, "B": self.B}


BOUNDARY_TOL = 1e-7


def quasi_geodesic(dom: Domain, p, x) -> QuasiGeodesicCert:
    """The curve t -> x + e^{-2t}(p - x) with its (2/eps, 0) certificate."""
    (p,) = _require_members(dom, p)
    x = np.asarray(x, dtype=complex)
    dom._check_dim(x)
    L = norm(x - p)
    if L == 0 or dom.contains(x):
        raise PreconditionError("x must be a boundary point distinct from p")
    if not dom.contains(p + (1 - BOUNDARY_TOL / L) * (x - p)):
        raise PreconditionError("x is not within the boundary residual of the domain")
    eps = float(dir_distance_batch(dom, p[None], (x - p)[None])[0]) / L
    if not eps > 0:
        raise PreconditionError("direction x - p is tangentially trapped (epsilon <= 0)")
    return QuasiGeodesicCert(p, x, eps, 2.0 / eps, 0.0)


@dataclass
class QuasiGeodesicCheck:
    ok: bool
    pairs: list

    def to_json(self):
        return {"ok": self.ok, "pairs": self.pairs}


def verify_quasi_geodesic(dom: Domain, cert: QuasiGeodesicCert, t_grid=None, budget: int = 10, tol: float = 1e-6):
    """Check |dt| <= d_upper and d_lower <= A |dt| on all grid pairs."""
    t_grid = np.arange(0, 4.0001, 0.25) if t_grid is None else np.asarray(t_grid, dtype=float)
    pts = cert.point(t_grid)
    pairs = []
    ok = True
    for i in range(len(t_grid)):
        for j in range(i + 1, len(t_grid)):
            lo, up = distance_interval(dom, pts[i], pts[j], budget)
            dt = abs(t_grid[j] - t_grid[i])
            good = (up >= dt - tol) and (lo <= cert.A * dt + cert.B + tol)
            ok &= good
            pairs.append({"t1": float(t_grid[i]), "t2": float(t_grid[j]), "lower": lo, "upper": up, "ok": bool(good)})
    return QuasiGeodesicCheck(bool(ok), pairs)
