"""Affine blow-ups at boundary points and convergence monitors for rescaled domains."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.linalg import null_space

from .domains import (
    AffineImage,
    Domain,
    PolynomialGraph,
    local_hausdorff,
    nearest_boundary_in,
)
from .errors import BoundarySearchError, KobalabError, PreconditionError
from .kobayashi import DEFAULT_BUDGET, distance_bracket
from .linalg import AffineMap, apply_affine, cvec, norm, to_pairs
from .polynomial import HermitianPolynomial

TAU_MIN = 1e-12
MAX_HAUSDORFF_DIRS = 16384


@dataclass(frozen=True)
class RescalingFrame:
    q: np.ndarray
    points: np.ndarray  # rows x_0 .. x_{d-1}
    tau: np.ndarray
    T: AffineMap
    U: np.ndarray
    Lambda: np.ndarray
    composite: AffineMap

    def normalization_error(self) -> float:
        img = apply_affine(self.composite, self.points)
        return float(np.max(np.abs(img - np.eye(len(self.tau)))))

    def to_json(self):
        return {
            "q": to_pairs(self.q),
            "points": [to_pairs(x) for x in self.points],
            "tau": [float(t) for t in self.tau],
            "composite": self.composite.to_json(),
        }


def gaussier_frame(dom: Domain, q, seed: int = 0) -> RescalingFrame:
    """Successive nearest boundary points in mutually orthogonal complex directions.

    x_0 is a closest boundary point to q; x_{k+1} is a closest boundary point inside
    the complex affine plane through q orthogonal to the lines q -> x_0, ..., q -> x_k.
    The composite Lambda U T sends q to 0 and x_i to e_i.
    """
    q = cvec(q)
    if not dom.contains(q):
        raise PreconditionError("q must lie in the domain")
    d = dom.dim
    dirs = []
    taus = []
    for k in range(d):
        if k == 0:
            basis = np.eye(d, dtype=complex)
        else:
            basis = null_space(np.conj(np.array(dirs)))
        try:
            tau, u = nearest_boundary_in(dom, q, basis, seed=seed + k)
        except BoundarySearchError as exc:
            raise BoundarySearchError(f"frame step {k}: {exc}") from exc
        if k == 0:
            closed = dom.closest_point_closed(q)
            if closed is not None and norm(closed - q) > 0:
                tau = float(norm(closed - q))
                u = (closed - q) / tau
        if tau < TAU_MIN:
            raise PreconditionError(f"q is too close to the boundary (tau_{k} = {tau:.3g})")
        # re-orthogonalise against earlier directions to remove round-off drift
        for w in dirs:
            u = u - np.vdot(w, u) * w
        u = u / norm(u)
        dirs.append(u)
        taus.append(tau)
    Umat = np.conj(np.array(dirs))
    tau = np.array(taus)
    points = q + tau[:, None] * np.array(dirs)
    Lam = np.diag(1.0 / tau).astype(complex)
    T = AffineMap.translation_by(-q)
    lin = Lam @ Umat
    composite = AffineMap(lin, -(lin @ q))
    return RescalingFrame(q, points, tau, T, Umat, Lam, composite)


def g1_containment(dom: Domain, frame: RescalingFrame, c: float = 0.1, samples: int = 256, seed: int = 0):
    """Sample c * P(q) (polydisk with radii tau_i along the frame axes) and test membership.

    Returns (all_inside, fraction_inside).
    """
    rng = np.random.default_rng(seed)
    d = len(frame.tau)
    r = np.sqrt(rng.uniform(size=(samples, d)))
    w = r * np.exp(2j * np.pi * rng.uniform(size=(samples, d)))
    pts = frame.q + (c * w * frame.tau) @ np.conj(frame.U)
    inside = dom.contains_batch(pts)
    return bool(np.all(inside)), float(np.mean(inside))


def g2_constant(dom: Domain, frame: RescalingFrame, L: int) -> float:
    """Smallest c with tau_0 <= c(-r(q)) and tau_j <= c(-r(q))^{1/L} for the domain's defining r."""
    rq = -float(np.atleast_1d(dom.defining(frame.q[None]))[0])
    if rq <= 0:
        raise PreconditionError("defining function must be negative at q")
    c = frame.tau[0] / rq
    if len(frame.tau) > 1:
        c = max(c, float(np.max(frame.tau[1:])) / rq ** (1.0 / L))
    return float(c)


# ---------------------------------------------------------------------------
# blow-up along a sequence approaching a boundary point

def inward_normal(dom: Domain, xi, h: float = 1e-6) -> np.ndarray:
    """Unit inward normal at a boundary point from the defining function gradient."""
    xi = cvec(xi)
    d = dom.dim
    try:
        grad = np.zeros(d, dtype=complex)
        for j in range(d):
            for unit, part in ((1.0, "re"), (1j, "im")):
                e = np.zeros(d, dtype=complex)
                e[j] = unit * h
                diff = (dom.defining((xi + e)[None]) - dom.defining((xi - e)[None]))[0] / (2 * h)
                grad[j] += diff if part == "re" else 1j * diff
        if norm(grad) > 0:
            return -grad / norm(grad)
    except NotImplementedError:
        pass
    hint = dom.interior_hint()
    if hint is None:
        raise PreconditionError("cannot determine an inward direction; supply one")
    v = np.asarray(hint) - xi
    return v / norm(v)


@dataclass
class BlowupStep:
    n: int
    q: np.ndarray
    frame: RescalingFrame
    hausdorff: float | None = None
    resolution: float | None = None
    n_directions: int | None = None

    def to_json(self):
        return {
            "n": self.n,
            "q": to_pairs(self.q),
            "tau": [float(t) for t in self.frame.tau],
            "hausdorff": self.hausdorff,
            "resolution": self.resolution,
            "n_directions": self.n_directions,
        }


@dataclass
class BlowupTrace:
    steps: list = field(default_factory=list)

    def hausdorff(self) -> np.ndarray:
        return np.array([s.hausdorff for s in self.steps], dtype=float)

    def to_json(self):
        return [s.to_json() for s in self.steps]


def monitored_hausdorff(dom1: Domain, dom2: Domain, R: float, n_dirs: int = 4096, seed: int = 0):
    """Local Hausdorff estimate, doubling the direction count while the gap is within 2x the resolution."""
    est = local_hausdorff(dom1, dom2, R, n_dirs, seed)
    while est.value <= 2 * est.resolution and est.n_directions < MAX_HAUSDORFF_DIRS:
        est = local_hausdorff(dom1, dom2, R, 2 * est.n_directions, seed)
    return est


def blowup_sequence(dom: Domain, xi, n_max: int, direction=None, rate: float = 2.0, R: float = 2.0,
                    target: Domain | None = None, n_dirs: int = 4096, seed: int = 0) -> BlowupTrace:
    """Frames at q_n = xi + rate^{-n} v, n = 1..n_max, and optionally d_H^{(R)}(A_n dom, target)."""
    xi = cvec(xi)
    if dom.contains(xi):
        raise PreconditionError("xi must be a boundary point")
    v = inward_normal(dom, xi) if direction is None else cvec(direction) / norm(cvec(direction))
    trace = BlowupTrace()
    for n in range(1, n_max + 1):
        q = xi + rate ** (-n) * v
        if not dom.contains(q):
            raise PreconditionError(f"step {n}: q_n left the domain")
        try:
            frame = gaussier_frame(dom, q, seed)
        except KobalabError as exc:
            raise type(exc)(f"step {n}: {exc}") from exc
        step = BlowupStep(n, q, frame)
        if target is not None:
            est = monitored_hausdorff(AffineImage(frame.composite, dom), target, R, n_dirs, seed)
            step.hausdorff, step.resolution, step.n_directions = est.value, est.resolution, est.n_directions
        trace.steps.append(step)
    return trace


def quadric_model(dim: int = 2) -> Domain:
    """{Re(1 - w_0) > |w_1|^2 + ...}: the blow-up limit of the unit ball at e_0 in frame coordinates."""
    poly = HermitianPolynomial.zero(dim - 1)
    for i in range(dim - 1):
        poly = poly + HermitianPolynomial.abs_power(dim - 1, i, 1)
    flip = np.eye(dim, dtype=complex)
    flip[0, 0] = -1
    shift = np.zeros(dim, dtype=complex)
    shift[0] = 1
    return AffineImage(AffineMap(flip, shift), PolynomialGraph(poly))


# ---------------------------------------------------------------------------
# infinite-type scaling

def default_profile(z):
    z = np.abs(np.asarray(z, dtype=complex))
    with np.errstate(divide="ignore", over="ignore"):
        return np.where(z > 0, np.exp(-1.0 / np.where(z > 0, z, 1.0)), 0.0)


def _default_log_profile(z):
    z = np.abs(np.asarray(z, dtype=complex))
    with np.errstate(divide="ignore"):
        return -1.0 / z


# profiles may carry a `log` attribute so ratios avoid underflow
default_profile.log = _default_log_profile


@dataclass(frozen=True)
class InfiniteTypeScaling:
    n: int
    z_n: complex
    a_n: float
    f_zn: float
    map: AffineMap
    profile: Callable = field(repr=False, compare=False, default=default_profile)

    def rescaled_profile(self, w):
        """f_n(w) = f(z_n w) / f(z_n)."""
        w = np.asarray(w, dtype=complex)
        log = getattr(self.profile, "log", None)
        if log is not None:
            return np.exp(log(self.z_n * w) - log(self.z_n))
        return self.profile(self.z_n * w) / self.f_zn


def _profile_grid(rho: float, n_r: int = 400, n_phase: int = 16):
    r = rho * np.logspace(-6, 0, n_r)
    th = 2 * np.pi * np.arange(n_phase) / n_phase
    return (r[:, None] * np.exp(1j * th)[None, :]).ravel()


def infinite_type_maps(n: int, profile: Callable = default_profile, rho: float | None = None) -> InfiniteTypeScaling:
    """A_n = diag(1 / f(z_n), 1 / z_n) with z_n maximising f(w)/|w|^n over |w| <= rho_n.

    At the maximiser, a_n = f(z_n)/|z_n|^n dominates f(w)/|w|^n on the whole disk,
    which is checked on a log-polar grid; violations are rejected.
    """
    if n < 1:
        raise PreconditionError("n must be a positive integer")
    rho = 1.0 / n ** 2 if rho is None else float(rho)
    W = _profile_grid(rho)
    fw = profile(W)
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        logg = np.log(fw) - n * np.log(np.abs(W))
    logg = np.where(np.isfinite(logg), logg, -np.inf)
    top = np.max(logg)
    # ties (e.g. radial profiles) go to the first grid point, which has phase 0
    k = int(np.flatnonzero(logg >= top - 1e-12 * max(1.0, abs(top)))[0])
    z_n = complex(W[k])
    if abs(z_n) <= rho * 1e-6 * (1 + 1e-9):
        raise PreconditionError("f(w)/|w|^n is unbounded near 0: profile is of finite type at order <= n")
    f_zn = float(profile(np.array([z_n]))[0])
    if not f_zn > 0:
        raise PreconditionError("profile vanishes identically near 0 (boundary contains a disk)")
    a_n = f_zn / abs(z_n) ** n
    inner = W[np.abs(W) <= abs(z_n)]
    bad = profile(inner) > a_n * np.abs(inner) ** n * (1 + 1e-12)
    if np.any(bad):
        w = complex(inner[np.flatnonzero(bad)[0]])
        raise PreconditionError(f"domination f(w) <= a_n |w|^n fails at w = {w}")
    amap = AffineMap.diagonal([1.0 / f_zn, 1.0 / z_n])
    return InfiniteTypeScaling(n, z_n, a_n, f_zn, amap, profile)


# ---------------------------------------------------------------------------
# continuity of distances along converging domains

@dataclass
class ContinuityReport:
    records: list
    max_terminal_gap: float
    overlap_from: list

    def to_json(self):
        return {"records": self.records, "max_terminal_gap": self.max_terminal_gap, "overlap_from": self.overlap_from}


def interval_gap(a, b) -> float:
    """Hausdorff distance between intervals a = (lo, up) and b."""
    return float(max(abs(a[0] - b[0]), abs(a[1] - b[1])))


def distance_continuity_check(domains, limit: Domain, probes, labels=None, budget: int = DEFAULT_BUDGET,
                              seed: int = 0) -> ContinuityReport:
    """Compare distance brackets on each domain of a sequence with those on the limit."""
    domains = list(domains)
    labels = list(range(1, len(domains) + 1)) if labels is None else list(labels)
    probes = [(cvec(p), cvec(q)) for p, q in probes]
    for p, q in probes:
        if not (limit.contains(p) and limit.contains(q)):
            raise PreconditionError("probe points must lie in the limit domain")
    member = [all(dom.contains(p) and dom.contains(q) for p, q in probes) for dom in domains]
    n0 = None
    for i in range(len(domains)):
        if all(member[i:]):
            n0 = i
            break
    if n0 is None:
        raise PreconditionError("probes leave every tail of the sequence")
    records = []
    overlap_from = []
    terminal = 0.0
    for j, (p, q) in enumerate(probes):
        ref = distance_bracket(limit, p, q, budget, seed)
        ref_iv = (ref.lower, ref.upper)
        first_overlap = None
        for i in range(n0, len(domains)):
            br = distance_bracket(domains[i], p, q, budget, seed)
            iv = (br.lower, br.upper)
            gap = interval_gap(iv, ref_iv)
            overlap = iv[0] <= ref_iv[1] and ref_iv[0] <= iv[1]
            if overlap and first_overlap is None:
                first_overlap = labels[i]
            if not overlap:
                first_overlap = None
            records.append({"probe": j, "n": labels[i], "lower": iv[0], "upper": iv[1],
                            "limit_lower": ref_iv[0], "limit_upper": ref_iv[1], "gap": gap,
                            "overlap": bool(overlap)})
            if i == len(domains) - 1:
                terminal = max(terminal, gap)
        overlap_from.append(first_overlap)
    return ContinuityReport(records, terminal, overlap_from)
