"""Numerical line type and m-convexity estimates at the boundary of convex domains."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import null_space

from .domains import (
    Domain,
    boundary_distance_batch,
    defining_gradient,
    dir_distance_batch,
    interior_point,
    sphere_directions,
)
from .errors import PreconditionError
from .linalg import cvec, norm

RHO_EXPONENTS = np.arange(4, 17)
NOISE_FLOOR = 1e-13
BOUNDARY_RESIDUAL = 1e-8


@dataclass(frozen=True)
class LineTypeResult:
    value: int | None  # None means ">= cap"
    cap: int
    slopes: tuple

    @property
    def label(self) -> str:
        return f">= {self.cap}" if self.value is None else str(self.value)

    def to_json(self):
        return {"line_type": self.label, "cap": self.cap, "slopes": [None if np.isinf(s) else s for s in self.slopes]}


def complex_tangent_basis(dom: Domain, x) -> np.ndarray:
    """Orthonormal basis (columns) of the complex tangent space {v : sum v_j dr/dz_j = 0}."""
    g = defining_gradient(dom, x)
    if g is None or norm(g) == 0:
        raise PreconditionError("defining function unavailable or singular at x")
    dz = 0.5 * np.conj(g)  # dr/dz_j = (d/dx_j - i d/dy_j) r / 2
    return null_space(dz[None, :])


def restriction_slope(dom: Domain, x, v, n_phase: int = 16) -> float:
    """Log-log slope of the phase-averaged |r(x + rho e^{i theta} v)| against rho (inf if it vanishes)."""
    x, v = cvec(x), cvec(v) / norm(cvec(v))
    rho = 2.0 ** (-RHO_EXPONENTS.astype(float))
    th = 2 * np.pi * np.arange(n_phase) / n_phase
    pts = x + (rho[:, None, None] * np.exp(1j * th)[None, :, None]) * v
    r0 = float(dom.defining(x[None])[0])
    vals = np.abs(dom.defining(pts.reshape(-1, x.size)) - r0).reshape(len(rho), n_phase).mean(axis=1)
    floor = NOISE_FLOOR * (1.0 + float(norm(x)) ** 2)
    keep = vals > floor
    if keep.sum() < 3:
        return np.inf
    return float(np.polyfit(np.log(rho[keep]), np.log(vals[keep]), 1)[0])


def line_type(dom: Domain, x, cap: int = 16, n_dirs: int = 16, seed: int = 0) -> LineTypeResult:
    """Maximal vanishing order of the defining function along complex tangent lines at x."""
    x = cvec(x)
    r0 = float(dom.defining(x[None])[0])
    if abs(r0) > BOUNDARY_RESIDUAL * (1.0 + float(norm(x)) ** 2):
        raise PreconditionError(f"x is not on the boundary (r(x) = {r0:.3g})")
    basis = complex_tangent_basis(dom, x)
    if basis.shape[1] == 0:
        return LineTypeResult(0, cap, ())
    dirs = [basis[:, j] for j in range(basis.shape[1])]
    if basis.shape[1] > 1:
        dirs += list(sphere_directions(n_dirs, basis, seed))
    slopes = tuple(restriction_slope(dom, x, v) for v in dirs)
    top = max(slopes)
    if not np.isfinite(top) or top > cap:
        return LineTypeResult(None, cap, slopes)
    even = int(2 * round(top / 2))
    return LineTypeResult(even, cap, slopes)


@dataclass
class MConvexityReport:
    m: float
    C_est: float
    per_layer: list = field(default_factory=list)
    escapes: bool = False
    seed: int = 0
    samples: int = 0

    def to_json(self):
        return {"m": self.m, "C_est": self.C_est, "per_layer": self.per_layer, "escapes": self.escapes,
                "seed": self.seed, "samples": self.samples}


def m_convexity_constant(dom: Domain, m: float, R: float = 2.0, samples: int = 10_000, seed: int = 0,
                         levels=range(1, 15)) -> MConvexityReport:
    """max of delta(p; v) / delta(p)^{1/m} over points layered at boundary distances 2^{-k}.

    Half of the directions are random; the other half are orthogonal to the inward
    ray at p, which is where flat boundary directions show up.
    """
    if m < 1:
        raise PreconditionError("m must be >= 1")
    levels = list(levels)
    c = interior_point([dom], R, seed)
    if c is None:
        raise PreconditionError("no interior samples in B_R(0)")
    rng = np.random.default_rng(seed)
    per = max(samples // len(levels), 2)
    d = dom.dim
    per_layer = []
    total = 0
    for k in levels:
        g = rng.normal(size=(per, d)) + 1j * rng.normal(size=(per, d))
        g /= norm(g)[:, None]
        t = dom.ray_exit(np.broadcast_to(c, g.shape), g)
        ok = np.isfinite(t) & (t > 2.0 ** -k)
        xi = c + t[:, None] * g
        p = xi - 2.0 ** -k * g
        ok &= norm(p) < R
        p, g = p[ok], g[ok]
        if p.shape[0] == 0:
            per_layer.append({"k": k, "max_ratio": None, "count": 0})
            continue
        v = rng.normal(size=p.shape) + 1j * rng.normal(size=p.shape)
        half = p.shape[0] // 2
        # tangential part: remove the component along the ray direction
        v[:half] -= (np.sum(v[:half] * np.conj(g[:half]), axis=1))[:, None] * g[:half]
        v /= norm(v)[:, None]
        dp = boundary_distance_batch(dom, p)
        dpv = dir_distance_batch(dom, p, v)
        ratio = dpv / dp ** (1.0 / m)
        per_layer.append({"k": k, "max_ratio": float(np.max(ratio)), "count": int(p.shape[0])})
        total += p.shape[0]
    vals = [r["max_ratio"] for r in per_layer if r["max_ratio"] is not None]
    if not vals:
        raise PreconditionError("no interior samples in B_R(0)")
    head = np.mean(vals[:3])
    tail = np.mean(vals[-3:])
    return MConvexityReport(m, float(max(vals)), per_layer, bool(tail > 2 * head), seed, total)
