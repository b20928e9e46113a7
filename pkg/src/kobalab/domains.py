"""C-proper convex open sets with membership, boundary-hit and distance queries.

Every domain answers batched membership queries. Domains whose slices by complex
lines are intersections of disks and half-planes (balls, polydisks, half-spaces,
their affine images and intersections) also expose those slices in closed form;
everything else goes through ray bracketing and bisection on the membership oracle.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize, minimize_scalar
from scipy.stats import qmc

from .errors import BoundarySearchError, DimensionError, PreconditionError
from .linalg import AffineMap, apply_affine, cvec, from_pairs, hdot, norm, to_pairs
from .polynomial import HermitianPolynomial

R_MAX = 1e6
HIT_TOL = 1e-10
PHASE_GRID = 64
N_DIRECTIONS = 256
GOLDEN_STEPS = 24


# ---------------------------------------------------------------------------
# slices of a domain by a complex line p + C u, in the coordinate zeta (p at 0)

@dataclass
class SliceShapes:
    """Intersection of disks |zeta - c| < r and half-planes Re(zeta conj(nu)) > -h.

    Arrays are (N, k); an infinite radius or offset means "no constraint".
    """

    disk_c: np.ndarray
    disk_r: np.ndarray
    hp_nu: np.ndarray
    hp_h: np.ndarray

    @classmethod
    def empty(cls, n):
        z = np.zeros((n, 0))
        return cls(z.astype(complex), z, z.astype(complex), z)

    def concat(self, other: "SliceShapes") -> "SliceShapes":
        return SliceShapes(
            np.concatenate([self.disk_c, other.disk_c], axis=1),
            np.concatenate([self.disk_r, other.disk_r], axis=1),
            np.concatenate([self.hp_nu, other.hp_nu], axis=1),
            np.concatenate([self.hp_h, other.hp_h], axis=1),
        )

    def scaled(self, s) -> "SliceShapes":
        s = np.asarray(s)[:, None]
        return SliceShapes(self.disk_c * s, self.disk_r * s, self.hp_nu, self.hp_h * s)

    def rotated(self, phase) -> "SliceShapes":
        """Shapes seen along the ray direction e^{i phase} (zeta -> zeta e^{-i phase})."""
        rot = np.exp(-1j * np.asarray(phase))[:, None]
        return SliceShapes(self.disk_c * rot, self.disk_r, self.hp_nu * rot, self.hp_h)

    def distance(self) -> np.ndarray:
        """Distance from zeta = 0 to the complement of the slice."""
        with np.errstate(invalid="ignore"):
            dd = self.disk_r - np.abs(self.disk_c)
        dd = np.where(np.isinf(self.disk_r), np.inf, dd)
        out = np.full(self.disk_r.shape[0], np.inf)
        if dd.shape[1]:
            out = np.minimum(out, dd.min(axis=1))
        if self.hp_h.shape[1]:
            out = np.minimum(out, self.hp_h.min(axis=1))
        return out

    def ray_exit(self) -> np.ndarray:
        """Exit parameter along the positive real ray zeta = t."""
        out = np.full(self.disk_r.shape[0], np.inf)
        if self.disk_r.shape[1]:
            with np.errstate(invalid="ignore"):
                disc = np.sqrt(np.maximum(self.disk_r ** 2 - self.disk_c.imag ** 2, 0.0))
                t = self.disk_c.real + disc
            t = np.where(np.isinf(self.disk_r), np.inf, t)
            out = np.minimum(out, t.min(axis=1))
        if self.hp_h.shape[1]:
            re = self.hp_nu.real
            with np.errstate(divide="ignore", invalid="ignore"):
                t = np.where(re < 0, self.hp_h / np.where(re < 0, -re, 1.0), np.inf)
            t = np.where(np.isinf(self.hp_h), np.inf, t)
            out = np.minimum(out, t.min(axis=1))
        return out

    def finsler_upper(self) -> np.ndarray:
        """Upper bound for the Kobayashi metric of the slice at 0 (unit tangent).

        Minimum over: the disk of radius dist(0, complement) centred at 0, and every
        shape homothetically shrunk toward 0 until it fits inside all the others.
        Each candidate is a disk or half-plane contained in the slice, so its exact
        Poincare metric bounds the slice metric from above.
        """
        dist = self.distance()
        with np.errstate(divide="ignore"):
            best = 1.0 / dist
        n, k1 = self.disk_r.shape
        k2 = self.hp_h.shape[1]
        for i in range(k1):
            ci, ri = self.disk_c[:, i], self.disk_r[:, i]
            active = np.isfinite(ri)
            if not np.any(active):
                continue
            lam = np.ones(n)
            for j in range(k1):
                if j == i:
                    continue
                cj, rj = self.disk_c[:, j], self.disk_r[:, j]
                lam = np.minimum(lam, _disk_in_disk_scale(ci, ri, cj, rj))
            for j in range(k2):
                nu, h = self.hp_nu[:, j], self.hp_h[:, j]
                denom = ri - (ci * np.conj(nu)).real
                with np.errstate(divide="ignore", invalid="ignore"):
                    lj = np.where(denom > 0, h / np.where(denom > 0, denom, 1.0), np.inf)
                lj = np.where(np.isinf(h), np.inf, lj)
                lam = np.minimum(lam, lj)
            with np.errstate(divide="ignore", invalid="ignore"):
                k_i = ri / (ri ** 2 - np.abs(ci) ** 2) / lam
            k_i = np.where(active & (lam > 0), k_i, np.inf)
            best = np.minimum(best, k_i)
        for i in range(k2):
            nu_i, h_i = self.hp_nu[:, i], self.hp_h[:, i]
            active = np.isfinite(h_i)
            lam = np.ones(n)
            for j in range(k1):
                lam = np.where(np.isfinite(self.disk_r[:, j]), 0.0, lam)
            for j in range(k2):
                if j == i:
                    continue
                nu_j, h_j = self.hp_nu[:, j], self.hp_h[:, j]
                parallel = np.abs(nu_i - nu_j) < 1e-12
                with np.errstate(divide="ignore", invalid="ignore"):
                    lj = np.where(parallel, h_j / h_i, 0.0)
                lj = np.where(np.isinf(h_j), np.inf, lj)
                lam = np.minimum(lam, lj)
            with np.errstate(divide="ignore", invalid="ignore"):
                k_i = 1.0 / (2.0 * h_i * lam)
            k_i = np.where(active & (lam > 0), k_i, np.inf)
            best = np.minimum(best, k_i)
        return best


def _disk_in_disk_scale(ci, ri, cj, rj):
    """Largest lam <= 1 with lam*D(ci, ri) (scaled toward 0) inside D(cj, rj)."""
    out = np.ones_like(ri)
    finite = np.isfinite(rj)
    A = np.abs(ci) ** 2 - ri ** 2
    B = 2.0 * (ri * rj - (ci * np.conj(cj)).real)
    C = np.abs(cj) ** 2 - rj ** 2
    with np.errstate(invalid="ignore", divide="ignore"):
        disc = B ** 2 - 4 * A * C
        root = 2 * C / (-B - np.sqrt(np.maximum(disc, 0.0)))
    crosses = (B > 0) & (disc >= 0)
    lam = np.where(crosses, root, np.inf)
    with np.errstate(divide="ignore"):
        lam = np.minimum(lam, rj / ri)
    return np.where(finite, np.minimum(out, lam), out)


# ---------------------------------------------------------------------------
# domains

class Domain:
    """Base class. Subclasses implement ``contains_batch`` and optionally closed forms."""

    dim: int

    # membership ---------------------------------------------------------------
    def contains_batch(self, Z) -> np.ndarray:
        raise NotImplementedError

    def contains(self, p) -> bool:
        p = np.asarray(p, dtype=complex)
        self._check_dim(p)
        return bool(self.contains_batch(p[None])[0])

    def _check_dim(self, p):
        if p.shape[-1] != self.dim:
            raise DimensionError(f"domain lives in C^{self.dim}, got a point in C^{p.shape[-1]}")

    # closed forms (None when unavailable) --------------------------------------
    def slice_shapes(self, P, U):
        return None

    def euclid_distance_closed(self, P):
        return None

    def closest_point_closed(self, p):
        return None

    def defining(self, Z):
        raise NotImplementedError(f"{type(self).__name__} has no defining function")

    def interior_hint(self):
        return None

    @property
    def c_proper(self) -> bool:
        return True

    @property
    def has_slices(self) -> bool:
        return self.slice_shapes(np.zeros((1, self.dim), complex), np.eye(self.dim, dtype=complex)[:1]) is not None

    # rays -----------------------------------------------------------------------
    def ray_exit(self, P, U, r_max: float = R_MAX) -> np.ndarray:
        """Parameter t at which p + t u leaves the domain (inf if beyond r_max)."""
        P = np.atleast_2d(np.asarray(P, dtype=complex))
        U = np.atleast_2d(np.asarray(U, dtype=complex))
        P, U = np.broadcast_arrays(P, U)
        un = norm(U)
        sh = self.slice_shapes(P, U / un[:, None])
        if sh is not None:
            t = sh.ray_exit() / un
            return np.where(t * un > r_max, np.inf, t)
        return _bisect_exit(self, P, U, un, r_max)[0]

    def to_json(self) -> dict:
        raise NotImplementedError


def _bisect_exit(dom: Domain, P, U, un, r_max):
    n = P.shape[0]
    lo = np.zeros(n)
    hi = 1.0 / un
    inside = dom.contains_batch(P + hi[:, None] * U)
    for _ in range(64):
        if not np.any(inside):
            break
        lo = np.where(inside, hi, lo)
        hi = np.where(inside, hi * 2.0, hi)
        beyond = hi * un > r_max
        inside = inside & ~beyond
        if np.any(inside):
            idx = np.flatnonzero(inside)
            inside[idx] = dom.contains_batch(P[idx] + hi[idx, None] * U[idx])
    unbounded = hi * un > r_max
    for _ in range(200):
        width = (hi - lo) * un
        todo = (width > HIT_TOL) & ~unbounded
        if not np.any(todo):
            break
        idx = np.flatnonzero(todo)
        mid = 0.5 * (lo[idx] + hi[idx])
        ins = dom.contains_batch(P[idx] + mid[:, None] * U[idx])
        lo[idx] = np.where(ins, mid, lo[idx])
        hi[idx] = np.where(ins, hi[idx], mid)
    t = 0.5 * (lo + hi)
    t = np.where(unbounded, np.inf, t)
    return t, (hi - lo) * un


class Ball(Domain):
    def __init__(self, center, radius: float):
        self.center = cvec(center)
        self.radius = float(radius)
        if not self.radius > 0:
            raise ValueError("radius must be positive")
        self.dim = self.center.size

    def contains_batch(self, Z):
        return norm(np.asarray(Z) - self.center) < self.radius

    def slice_shapes(self, P, U):
        w = P - self.center
        b = hdot(w, U)
        r2 = self.radius ** 2 - norm(w) ** 2 + np.abs(b) ** 2
        sh = SliceShapes.empty(P.shape[0])
        sh.disk_c = (-b)[:, None]
        sh.disk_r = np.sqrt(np.maximum(r2, 0.0))[:, None]
        return sh

    def euclid_distance_closed(self, P):
        return self.radius - norm(np.asarray(P) - self.center)

    def closest_point_closed(self, p):
        w = np.asarray(p) - self.center
        nw = norm(w)
        if nw == 0:
            return None
        return self.center + self.radius * w / nw

    def defining(self, Z):
        return norm(np.asarray(Z) - self.center) ** 2 - self.radius ** 2

    def interior_hint(self):
        return self.center

    def to_json(self):
        return {"type": "ball", "center": to_pairs(self.center), "radius": self.radius}

    def __repr__(self):
        return f"Ball(center={self.center}, radius={self.radius})"


class Polydisk(Domain):
    def __init__(self, center, radii):
        self.center = cvec(center)
        self.radii = np.array(radii, dtype=float).reshape(-1)
        if self.radii.size != self.center.size or np.any(self.radii <= 0):
            raise ValueError("radii must be positive, one per coordinate")
        self.radii.setflags(write=False)
        self.dim = self.center.size

    def contains_batch(self, Z):
        return np.all(np.abs(np.asarray(Z) - self.center) < self.radii, axis=-1)

    def slice_shapes(self, P, U):
        w = P - self.center
        au = np.abs(U)
        nz = au > 1e-300
        with np.errstate(divide="ignore", invalid="ignore"):
            c = np.where(nz, -w / np.where(nz, U, 1.0), 0.0)
            r = np.where(nz, self.radii / np.where(nz, au, 1.0), np.inf)
        sh = SliceShapes.empty(P.shape[0])
        sh.disk_c, sh.disk_r = c, r
        return sh

    def euclid_distance_closed(self, P):
        return np.min(self.radii - np.abs(np.asarray(P) - self.center), axis=-1)

    def closest_point_closed(self, p):
        w = np.asarray(p) - self.center
        gaps = self.radii - np.abs(w)
        i = int(np.argmin(gaps))
        phase = w[i] / abs(w[i]) if abs(w[i]) > 0 else 1.0
        x = np.array(p, dtype=complex)
        x[i] = self.center[i] + self.radii[i] * phase
        return x

    def defining(self, Z):
        return np.max(np.abs(np.asarray(Z) - self.center) ** 2 - self.radii ** 2, axis=-1)

    def interior_hint(self):
        return self.center

    def to_json(self):
        return {"type": "polydisk", "center": to_pairs(self.center), "radii": [float(r) for r in self.radii]}

    def __repr__(self):
        return f"Polydisk(center={self.center}, radii={self.radii})"


class HalfSpace(Domain):
    """{z : Re <z, normal> > offset} with <a, b> = sum a_i conj(b_i)."""

    def __init__(self, normal, offset: float = 0.0):
        self.normal = cvec(normal)
        if norm(self.normal) == 0:
            raise ValueError("normal must be nonzero")
        self.offset = float(offset)
        self.dim = self.normal.size

    @property
    def c_proper(self):
        return self.dim == 1

    def _height(self, P):
        return hdot(np.asarray(P), self.normal).real - self.offset

    def contains_batch(self, Z):
        return self._height(Z) > 0

    def slice_shapes(self, P, U):
        s = self._height(P)
        a = hdot(U, self.normal)
        aa = np.abs(a)
        nz = aa > 1e-300
        sh = SliceShapes.empty(P.shape[0])
        with np.errstate(divide="ignore", invalid="ignore"):
            sh.hp_nu = np.where(nz, np.conj(a) / np.where(nz, aa, 1.0), 1.0)[:, None]
            sh.hp_h = np.where(nz, s / np.where(nz, aa, 1.0), np.inf)[:, None]
        return sh

    def euclid_distance_closed(self, P):
        return self._height(P) / norm(self.normal)

    def closest_point_closed(self, p):
        n2 = norm(self.normal) ** 2
        return np.asarray(p) - self._height(p) * self.normal / n2

    def defining(self, Z):
        return -self._height(Z) / norm(self.normal)

    def interior_hint(self):
        n2 = norm(self.normal) ** 2
        return (self.offset + 1.0) * self.normal / n2

    def to_json(self):
        return {"type": "halfspace", "normal": to_pairs(self.normal), "offset": self.offset}

    def __repr__(self):
        return f"HalfSpace(normal={self.normal}, offset={self.offset})"


class PolynomialGraph(Domain):
    """{(z_0, z') : Re z_0 > P(z')}."""

    def __init__(self, poly: HermitianPolynomial):
        self.poly = poly
        self.dim = poly.dim + 1
        self._c_proper = None

    @property
    def c_proper(self):
        if self._c_proper is None:
            from .polynomial import nondegenerate_check

            self._c_proper = nondegenerate_check(self.poly).passed
        return self._c_proper

    def contains_batch(self, Z):
        Z = np.atleast_2d(np.asarray(Z, dtype=complex))
        return Z[:, 0].real > self.poly.eval(Z[:, 1:])

    def defining(self, Z):
        Z = np.atleast_2d(np.asarray(Z, dtype=complex))
        return self.poly.eval(Z[:, 1:]) - Z[:, 0].real

    def ray_exit(self, P, U, r_max: float = R_MAX) -> np.ndarray:
        """Smallest positive root of g(t) = Re(p_0 + t u_0) - P(p' + t u').

        g is concave along real lines, so the ray leaves the domain at its first
        positive zero. Roots come from batched companion matrices, are polished by
        Newton steps and checked by sign; rows failing the check use bisection.
        """
        P = np.atleast_2d(np.asarray(P, dtype=complex))
        U = np.atleast_2d(np.asarray(U, dtype=complex))
        P, U = np.broadcast_arrays(P, U)
        un = norm(U)
        coef = _graph_restriction(self.poly, P, U)
        t = _first_positive_root(coef)
        scale = np.maximum(t, 1.0)
        delta = np.maximum(0.5 * HIT_TOL / un, 1e-12 * scale)
        with np.errstate(invalid="ignore", over="ignore"):
            ok = np.isinf(t) | ((_horner(coef, t - delta) > 0) & (_horner(coef, t + delta) <= 0))
        if not np.all(ok):
            bad = np.flatnonzero(~ok)
            t[bad] = _bisect_exit(self, P[bad], U[bad], un[bad], r_max)[0]
        return np.where(t * un > r_max, np.inf, t)

    def interior_hint(self):
        p = np.zeros(self.dim, dtype=complex)
        p[0] = 1.0
        return p

    def to_json(self):
        return {"type": "polynomial_graph", "poly": self.poly.to_json()}

    def __repr__(self):
        return f"PolynomialGraph({self.poly!r})"


def _line_restriction(poly: HermitianPolynomial, P, U) -> np.ndarray:
    """c[:, j, k] with P(p' + zeta u') = sum c_jk zeta^j conj(zeta)^k for each row."""
    A, B, C = poly._arrays()
    n = P.shape[0]
    deg = int(max(A.sum(axis=1).max(initial=0), B.sum(axis=1).max(initial=0)))
    a, w = P[:, 1:], U[:, 1:]
    total = np.zeros((n, deg + 1, deg + 1), dtype=complex)
    for alpha, beta, c in zip(A, B, C):
        hol = np.zeros((n, deg + 1), dtype=complex)
        hol[:, 0] = c
        k = 0
        for i in range(poly.dim):
            for _ in range(alpha[i]):
                hol[:, 1:k + 2] = hol[:, 1:k + 2] * a[:, i, None] + hol[:, 0:k + 1] * w[:, i, None]
                hol[:, 0] *= a[:, i]
                k += 1
        anti = np.zeros((n, deg + 1), dtype=complex)
        anti[:, 0] = 1.0
        k = 0
        for i in range(poly.dim):
            ac, wc = np.conj(a[:, i]), np.conj(w[:, i])
            for _ in range(beta[i]):
                anti[:, 1:k + 2] = anti[:, 1:k + 2] * ac[:, None] + anti[:, 0:k + 1] * wc[:, None]
                anti[:, 0] *= ac
                k += 1
        total += hol[:, :, None] * anti[:, None, :]
    return total


def graph_phase_exits(dom: "PolynomialGraph", P, U, thetas) -> np.ndarray:
    """Ray exits of p + t e^{i theta} u for every row and phase, shape (n, len(thetas))."""
    c = _line_restriction(dom.poly, P, U)
    n, m, _ = c.shape
    j = np.arange(m)
    phase = np.exp(1j * np.multiply.outer(thetas, j[:, None] - j[None, :]))  # (T, m, m)
    deg = np.add.outer(j, j)
    D = max(1, 2 * (m - 1))
    coef = np.zeros((n, len(thetas), D + 1))
    weighted = np.einsum("njk,tjk->ntjk", c, phase)
    for s_ in range(2 * m - 1):
        mask = deg == s_
        coef[:, :, s_] = -weighted[:, :, mask].sum(axis=-1).real
    coef[:, :, 0] += P[:, 0].real[:, None]
    coef[:, :, 1] += (np.exp(1j * thetas)[None] * U[:, 0, None]).real
    t = _first_positive_root(coef.reshape(-1, D + 1)).reshape(n, len(thetas))
    return np.where(t * norm(U)[:, None] > R_MAX, np.inf, t)


def _graph_restriction(poly: HermitianPolynomial, P, U) -> np.ndarray:
    """Ascending real coefficients of t -> Re(p_0 + t u_0) - P(p' + t u') for each row."""
    A, B, C = poly._arrays()
    n = P.shape[0]
    deg = max(1, int((A + B).sum(axis=1).max(initial=0)))
    a, w = P[:, 1:], U[:, 1:]
    total = np.zeros((n, deg + 1), dtype=complex)
    for alpha, beta, c in zip(A, B, C):
        acc = np.zeros((n, deg + 1), dtype=complex)
        acc[:, 0] = c
        k = 0
        for i in range(poly.dim):
            for base, step, times in ((a[:, i], w[:, i], alpha[i]), (np.conj(a[:, i]), np.conj(w[:, i]), beta[i])):
                for _ in range(times):
                    acc[:, 1:k + 2] = acc[:, 1:k + 2] * base[:, None] + acc[:, 0:k + 1] * step[:, None]
                    acc[:, 0] *= base
                    k += 1
        total += acc
    g = -total.real
    g[:, 0] += P[:, 0].real
    g[:, 1] += U[:, 0].real
    return g


def _horner(coef, t):
    out = np.zeros_like(t)
    for k in range(coef.shape[1] - 1, -1, -1):
        out = out * t + coef[:, k]
    return out


def _low_degree_root(coef, D):
    """Smallest positive real root of a linear or quadratic (stable quadratic formula)."""
    c0, c1 = coef[:, 0], coef[:, 1]
    with np.errstate(divide="ignore", invalid="ignore"):
        if D == 1:
            r = -c0 / c1
            return np.where(r > 0, r, np.inf)
        c2 = coef[:, 2]
        disc = c1 * c1 - 4 * c2 * c0
        sq = np.sqrt(np.maximum(disc, 0.0))
        q = -0.5 * (c1 + np.where(c1 >= 0, sq, -sq))
        r1 = np.where(q != 0, q / c2, 0.0)
        r2 = np.where(q != 0, c0 / q, 0.0)
        r1 = np.where(r1 > 0, r1, np.inf)
        r2 = np.where(r2 > 0, r2, np.inf)
        return np.where(disc >= 0, np.minimum(r1, r2), np.inf)


def _first_positive_root(coef) -> np.ndarray:
    """Smallest positive root per row of a polynomial with g(0) > 0, concave for t > 0.

    Degrees 1 and 2 are solved in closed form. Otherwise the root is bracketed by
    doubling or halving from t = 1; Newton's method started to the right of the
    root of a concave function decreases monotonically onto it.
    """
    n, m = coef.shape
    t = np.full(n, np.inf)
    mag = np.abs(coef).max(axis=1)
    lead = np.zeros(n, dtype=int)
    for k in range(m):
        lead = np.where(np.abs(coef[:, k]) > 1e-13 * mag, k, lead)
    low = lead <= 2
    for D in (1, 2):
        rows = np.flatnonzero(lead == D)
        if rows.size:
            t[rows] = _low_degree_root(coef[rows], D)
    rows = np.flatnonzero(~low)
    if rows.size == 0:
        return t
    c = coef[rows]
    d = np.arange(1, m)[None] * c[:, 1:]
    # bracket: x with g(x) <= 0 and g(x / 2) > 0, searching up or down from 1
    x = np.ones(rows.size)
    gx = _horner(c, x)
    up = gx > 0
    act = np.flatnonzero(up)
    while act.size and x[act[0]] < R_MAX * 1e3:
        x[act] *= 2
        act = act[_horner(c[act], x[act]) > 0]
    found = _horner(c, x) <= 0
    act = np.flatnonzero(~up)
    for _ in range(60):
        if not act.size:
            break
        half = 0.5 * x[act]
        still = _horner(c[act], half) <= 0
        x[act[still]] = half[still]
        act = act[still]
    # Newton from the right on the rows that are still moving
    act = np.flatnonzero(found)
    for _ in range(80):
        if not act.size:
            break
        g = _horner(c[act], x[act])
        dg = _horner(d[act], x[act])
        with np.errstate(divide="ignore", invalid="ignore"):
            step = np.where(dg < 0, g / dg, 0.0)
        x[act] -= step
        act = act[np.abs(step) > 1e-14 * np.abs(x[act])]
    t[rows] = np.where(found, x, np.inf)
    return t

class AffineImage(Domain):
    """map(base) = {map(z) : z in base}."""

    def __init__(self, amap: AffineMap, base: Domain):
        if amap.dim != base.dim:
            raise DimensionError("map and base domain disagree in dimension")
        self.map = amap
        self.base = base
        self.dim = base.dim
        self._linv = amap.inverse_linear()

    def _pull(self, Z):
        return (np.asarray(Z) - self.map.translation) @ self._linv.T

    @property
    def c_proper(self):
        return self.base.c_proper

    def contains_batch(self, Z):
        return self.base.contains_batch(self._pull(Z))

    def slice_shapes(self, P, U):
        Ub = U @ self._linv.T
        s = norm(Ub)
        sh = self.base.slice_shapes(self._pull(P), Ub / s[:, None])
        return None if sh is None else sh.scaled(1.0 / s)

    def ray_exit(self, P, U, r_max: float = R_MAX):
        P = np.atleast_2d(np.asarray(P, dtype=complex))
        U = np.atleast_2d(np.asarray(U, dtype=complex))
        P, U = np.broadcast_arrays(P, U)
        if self.base.has_slices:
            return Domain.ray_exit(self, P, U, r_max)
        t = self.base.ray_exit(self._pull(P), U @ self._linv.T, r_max=np.inf)
        return np.where(t * norm(U) > r_max, np.inf, t)

    def defining(self, Z):
        return self.base.defining(self._pull(Z))

    def interior_hint(self):
        h = self.base.interior_hint()
        return None if h is None else apply_affine(self.map, h)

    def to_json(self):
        return {"type": "affine_image", "map": self.map.to_json(), "base": self.base.to_json()}

    def __repr__(self):
        return f"AffineImage({self.base!r})"


class Intersection(Domain):
    def __init__(self, parts):
        parts = list(parts)
        if not parts:
            raise ValueError("intersection needs at least one part")
        dims = {p.dim for p in parts}
        if len(dims) != 1:
            raise DimensionError("parts disagree in dimension")
        self.parts = parts
        self.dim = parts[0].dim

    @property
    def c_proper(self):
        return any(p.c_proper for p in self.parts)

    def contains_batch(self, Z):
        out = np.ones(np.atleast_2d(Z).shape[0], dtype=bool)
        for p in self.parts:
            out &= p.contains_batch(Z)
        return out

    def slice_shapes(self, P, U):
        shapes = [p.slice_shapes(P, U) for p in self.parts]
        if any(s is None for s in shapes):
            return None
        out = shapes[0]
        for s in shapes[1:]:
            out = out.concat(s)
        return out

    def ray_exit(self, P, U, r_max: float = R_MAX):
        out = None
        for p in self.parts:
            t = p.ray_exit(P, U, r_max)
            out = t if out is None else np.minimum(out, t)
        return out

    def euclid_distance_closed(self, P):
        vals = [p.euclid_distance_closed(P) for p in self.parts]
        if any(v is None for v in vals):
            return None
        return np.min(np.stack(vals), axis=0)

    def closest_point_closed(self, p):
        vals = [q.euclid_distance_closed(np.asarray(p)[None]) for q in self.parts]
        if any(v is None for v in vals):
            return None
        i = int(np.argmin([v[0] for v in vals]))
        return self.parts[i].closest_point_closed(p)

    def defining(self, Z):
        return np.max(np.stack([p.defining(Z) for p in self.parts]), axis=0)

    def interior_hint(self):
        for part in self.parts:
            h = part.interior_hint()
            if h is not None and self.contains(h):
                return h
        return None

    def to_json(self):
        return {"type": "intersection", "parts": [p.to_json() for p in self.parts]}

    def __repr__(self):
        return f"Intersection({self.parts!r})"


def domain_from_json(doc: dict) -> Domain:
    kind = doc["type"]
    if kind == "ball":
        return Ball(from_pairs(doc["center"]), doc["radius"])
    if kind == "polydisk":
        return Polydisk(from_pairs(doc["center"]), doc["radii"])
    if kind == "halfspace":
        return HalfSpace(from_pairs(doc["normal"]), doc.get("offset", 0.0))
    if kind == "polynomial_graph":
        return PolynomialGraph(HermitianPolynomial.from_json(doc["poly"]))
    if kind == "affine_image":
        return AffineImage(AffineMap.from_json(doc["map"]), domain_from_json(doc["base"]))
    if kind == "intersection":
        return Intersection([domain_from_json(p) for p in doc["parts"]])
    raise ValueError(f"unknown domain type {kind!r}")


def unit_disk() -> Ball:
    return Ball([0], 1.0)


def upper_half_plane() -> HalfSpace:
    # Re(z * conj(i)) = Im z
    return HalfSpace([1j], 0.0)


# ---------------------------------------------------------------------------
# operations

@dataclass(frozen=True)
class BoundaryHit:
    t_hit: float
    point: np.ndarray
    bracket_width: float


def _require_member(dom: Domain, p):
    p = np.asarray(p, dtype=complex)
    dom._check_dim(p)
    if not dom.contains(p):
        raise PreconditionError(f"point {p} is not in the domain")
    return p


def contains(dom: Domain, p) -> bool:
    return dom.contains(p)


def boundary_hit(dom: Domain, p, u) -> BoundaryHit:
    """First exit of the real ray p + t u, u normalised to unit length."""
    p = _require_member(dom, p)
    u = np.asarray(u, dtype=complex)
    u = u / norm(u)
    sh = dom.slice_shapes(p[None], u[None])
    if sh is not None:
        t = float(sh.ray_exit()[0])
        width = 0.0
    else:
        t_arr, w_arr = _bisect_exit(dom, p[None], u[None], np.ones(1), R_MAX)
        t, width = float(t_arr[0]), float(w_arr[0])
    if not np.isfinite(t):
        raise BoundarySearchError(f"no boundary hit within {R_MAX} along {u}")
    return BoundaryHit(t, p + t * u, width)


def dir_distance_batch(dom: Domain, P, V) -> np.ndarray:
    """delta(p; v) for rows of P, V: distance to the complement inside p + C v."""
    P = np.atleast_2d(np.asarray(P, dtype=complex))
    V = np.atleast_2d(np.asarray(V, dtype=complex))
    P, V = np.broadcast_arrays(P, V)
    U = V / norm(V)[:, None]
    sh = dom.slice_shapes(P, U)
    if sh is not None:
        return sh.distance()
    n = P.shape[0]
    thetas = 2 * np.pi * np.arange(PHASE_GRID) / PHASE_GRID
    if isinstance(dom, PolynomialGraph):
        vals = graph_phase_exits(dom, P, U, thetas)
    else:
        rays = (U[:, None, :] * np.exp(1j * thetas)[None, :, None]).reshape(-1, dom.dim)
        pts = np.repeat(P, PHASE_GRID, axis=0)
        vals = dom.ray_exit(pts, rays).reshape(n, PHASE_GRID)
    k = np.argmin(vals, axis=1)
    best = vals[np.arange(n), k]
    step = 2 * np.pi / PHASE_GRID
    a = thetas[k] - step
    b = thetas[k] + step
    g = (np.sqrt(5) - 1) / 2
    finite = np.isfinite(best)

    def f(th):
        return dom.ray_exit(P, U * np.exp(1j * th)[:, None])

    x1 = b - g * (b - a)
    x2 = a + g * (b - a)
    f1, f2 = f(x1), f(x2)
    for _ in range(GOLDEN_STEPS):
        left = f1 < f2
        b = np.where(left, x2, b)
        a = np.where(left, a, x1)
        x1, x2 = (np.where(left, b - g * (b - a), x2),
                  np.where(left, x1, a + g * (b - a)))
        fnew = f(np.where(left, x1, x2))
        f1, f2 = np.where(left, fnew, f2), np.where(left, f1, fnew)
    refined = np.minimum(f1, f2)
    return np.where(finite, np.minimum(best, refined), best)


def dir_boundary_distance(dom: Domain, p, v) -> float:
    p = _require_member(dom, p)
    v = np.asarray(v, dtype=complex)
    if norm(v) == 0:
        raise PreconditionError("direction must be nonzero")
    return float(dir_distance_batch(dom, p[None], v[None])[0])


def sphere_directions(n: int, basis, seed: int = 0) -> np.ndarray:
    """Seeded unit vectors spread over the unit sphere of span(basis) (complex, d x k)."""
    k = basis.shape[1]
    rng = np.random.default_rng(seed)
    c = rng.normal(size=(n, k)) + 1j * rng.normal(size=(n, k))
    c /= norm(c)[:, None]
    return c @ basis.T


def nearest_boundary_in(dom: Domain, q, basis=None, n_dirs: int = N_DIRECTIONS, seed: int = 0):
    """min over unit u in span(basis) of the exit distance from q; returns (distance, u)."""
    q = np.asarray(q, dtype=complex)
    basis = np.eye(dom.dim, dtype=complex) if basis is None else np.asarray(basis, dtype=complex)
    k = basis.shape[1]
    dirs = sphere_directions(n_dirs, basis, seed)
    vals = dom.ray_exit(np.broadcast_to(q, dirs.shape), dirs)
    best = np.min(vals)
    if not np.isfinite(best):
        raise BoundarySearchError("no boundary found from the sampled directions")
    i0 = int(np.flatnonzero(vals <= best * (1 + 1e-12))[0])
    u0 = dirs[i0]
    c0 = np.conj(basis.T) @ u0

    def obj(x):
        c = x[:k] + 1j * x[k:]
        nc = norm(c)
        if nc == 0:
            return np.inf
        u = basis @ (c / nc)
        return float(dom.ray_exit(q[None], u[None])[0])

    x0 = np.concatenate([c0.real, c0.imag])
    res = minimize(obj, x0, method="Nelder-Mead",
                   options={"xatol": 1e-10, "fatol": max(best, 1e-300) * 1e-11, "maxiter": 4000})
    dist, u = float(vals[i0]), u0
    if res.fun < dist * (1 - 1e-13):
        c = res.x[:k] + 1j * res.x[k:]
        dist, u = float(res.fun), basis @ (c / norm(c))
    return _normal_polish(dom, q, basis, dist, u)


def defining_gradient(dom: Domain, x, h: float = 1e-7):
    """Gradient of the defining function as a complex vector (d/dx_j + i d/dy_j), or None."""
    x = np.asarray(x, dtype=complex)
    d = x.size
    E = np.concatenate([np.eye(d), 1j * np.eye(d)]).astype(complex) * h
    try:
        plus = dom.defining(x + E)
        minus = dom.defining(x - E)
    except NotImplementedError:
        return None
    g = (plus - minus) / (2 * h)
    return g[:d] + 1j * g[d:]


def _normal_polish(dom: Domain, q, basis, dist, u, iters: int = 20):
    """Refine a nearest-point direction: at the nearest point the (projected) normal points back to q."""
    proj = basis @ np.conj(basis.T)
    for _ in range(iters):
        g = defining_gradient(dom, q + dist * u)
        if g is None or not np.all(np.isfinite(g)):
            break
        w = proj @ g
        if norm(w) == 0:
            break
        w = w / norm(w)
        t = float(dom.ray_exit(q[None], w[None])[0])
        if not t < dist * (1 + 1e-12):
            break
        done = norm(w - u) < 1e-13
        dist, u = min(t, dist), w
        if done:
            break
    return dist, u


def boundary_distance(dom: Domain, p) -> float:
    p = _require_member(dom, p)
    closed = dom.euclid_distance_closed(p[None])
    if closed is not None:
        return float(closed[0])
    return nearest_boundary_in(dom, p)[0]


def boundary_distance_batch(dom: Domain, P) -> np.ndarray:
    P = np.atleast_2d(np.asarray(P, dtype=complex))
    closed = dom.euclid_distance_closed(P)
    if closed is not None:
        return closed
    return np.array([nearest_boundary_in(dom, p)[0] for p in P])


def closest_boundary_point(dom: Domain, p) -> np.ndarray:
    """A nearest point of the boundary; ties go to the first sampled direction."""
    p = _require_member(dom, p)
    x = dom.closest_point_closed(p)
    if x is not None:
        return np.asarray(x)
    dist, u = nearest_boundary_in(dom, p)
    return p + dist * u


# ---------------------------------------------------------------------------
# sampling and local Hausdorff distance

def interior_point(doms, R: float = np.inf, seed: int = 0, samples: int = 4096):
    """A reasonably deep point lying in every domain of ``doms`` and in B_R(0), or None."""
    doms = list(doms)
    d = doms[0].dim
    cands = [np.zeros(d, dtype=complex)]
    for dom in doms:
        h = dom.interior_hint()
        if h is not None:
            cands.append(np.asarray(h, dtype=complex))
    rng = np.random.default_rng(seed)
    rad = R if np.isfinite(R) else 10.0
    g = rng.normal(size=(samples, d)) + 1j * rng.normal(size=(samples, d))
    g *= (rad * rng.uniform(size=(samples, 1)) ** (1 / (2 * d))) / norm(g)[:, None]
    C = np.vstack([np.array(cands), g])
    ok = norm(C) < R
    for dom in doms:
        ok &= dom.contains_batch(C)
    C = C[ok]
    if C.shape[0] == 0:
        return None
    probe = sphere_directions(16, np.eye(d, dtype=complex), seed=seed + 1)
    depth = np.full(C.shape[0], np.inf) if not np.isfinite(R) else R - norm(C)
    for dom in doms:
        P = np.repeat(C, probe.shape[0], axis=0)
        U = np.tile(probe, (C.shape[0], 1))
        t = dom.ray_exit(P, U).reshape(C.shape[0], -1).min(axis=1)
        depth = np.minimum(depth, t)
    return C[int(np.argmax(depth))]


def sample_members(dom: Domain, n: int, seed: int = 0, R: float = 10.0, center=None) -> np.ndarray:
    rng = np.random.default_rng(seed)
    c = interior_point([dom], R, seed) if center is None else np.asarray(center, dtype=complex)
    if c is None:
        raise PreconditionError("no interior point found")
    U = sphere_directions(n, np.eye(dom.dim, dtype=complex), seed=seed + 7)
    t = dom.ray_exit(np.broadcast_to(c, U.shape), U)
    t = np.minimum(t, _ball_exit(np.broadcast_to(c, U.shape), U, R))
    s = rng.uniform(0, 1, size=n)
    return c + (s * t)[:, None] * U


def convexity_probe(dom: Domain, n_pairs: int = 1000, seed: int = 0, R: float = 10.0):
    """Midpoint test on random member pairs; returns the first failing pair or None."""
    pts = sample_members(dom, 2 * n_pairs, seed=seed, R=R)
    a, b = pts[:n_pairs], pts[n_pairs:]
    ok = dom.contains_batch(0.5 * (a + b))
    bad = np.flatnonzero(~ok)
    return None if bad.size == 0 else (a[bad[0]], b[bad[0]])


def _ball_exit(C, U, R):
    if not np.isfinite(R):
        return np.full(C.shape[0], np.inf)
    b = hdot(C, U).real
    cc = norm(C) ** 2
    return -b + np.sqrt(np.maximum(b ** 2 - (cc - R ** 2), 0.0))


def quasi_uniform_sphere(n: int, real_dim: int, seed: int = 0) -> np.ndarray:
    """Low-discrepancy points on S^{real_dim - 1}, returned as complex vectors when real_dim is even."""
    if real_dim == 2:
        th = 2 * np.pi * (np.arange(n) + 0.5) / n
        X = np.stack([np.cos(th), np.sin(th)], axis=1)
    else:
        from scipy.special import ndtri

        h = qmc.Halton(d=real_dim, scramble=True, seed=seed).random(n)
        X = ndtri(np.clip(h, 1e-12, 1 - 1e-12))
        X /= np.linalg.norm(X, axis=1, keepdims=True)
    half = real_dim // 2
    return X[:, :half] + 1j * X[:, half:]


@dataclass(frozen=True)
class HausdorffEstimate:
    """Sampled Hausdorff distance with two error scales.

    ``resolution`` = 2 rho_max (1 - cos theta) is the support-function error when both
    truncated boundaries are smooth near their support points. ``first_order_bound`` =
    theta rho_max^2 / r_in also covers corners (for instance where the boundary meets
    the cutting sphere); r_in is the shortest sampled ray from the common center.
    """

    value: float
    resolution: float
    n_directions: int
    first_order_bound: float = float("nan")

    def to_json(self):
        return {"value": self.value, "resolution": self.resolution, "n_directions": self.n_directions,
                "first_order_bound": self.first_order_bound}


def _support_chunked(B, W, chunk=2048):
    Br = np.concatenate([B.real, B.imag], axis=1)
    Wr = np.concatenate([W.real, W.imag], axis=1)
    out = np.empty(W.shape[0])
    for s in range(0, W.shape[0], chunk):
        out[s:s + chunk] = (Wr[s:s + chunk] @ Br.T).max(axis=1)
    return out


def local_hausdorff(dom1: Domain, dom2: Domain, R: float, n_dirs: int = 4096, seed: int = 0) -> HausdorffEstimate:
    """Hausdorff distance between closure(dom_i) cut by the closed ball B_R(0).

    Both truncated bodies are sampled radially from a common interior point when one
    exists; support functions of the sampled hulls are compared on the same directions.
    """
    if dom1.dim != dom2.dim:
        raise DimensionError("domains disagree in dimension")
    d = dom1.dim
    common = interior_point([dom1, dom2], R, seed)
    centers = []
    for dom in (dom1, dom2):
        c = common if common is not None else interior_point([dom], R, seed)
        if c is None:
            raise PreconditionError("empty truncation: no interior point inside B_R(0)")
        centers.append(c)
    U = quasi_uniform_sphere(n_dirs, 2 * d, seed)
    supports = []
    rho_max, r_in = 0.0, np.inf
    for dom, c in zip((dom1, dom2), centers):
        C = np.broadcast_to(c, U.shape)
        t = np.minimum(dom.ray_exit(C, U), _ball_exit(C, U, R))
        B = c + t[:, None] * U
        rho_max = max(rho_max, float(np.max(t)))
        r_in = min(r_in, float(np.min(t)))
        supports.append(_support_chunked(B, U))
    value = float(np.max(np.abs(supports[0] - supports[1])))
    probes = quasi_uniform_sphere(2048, 2 * d, seed + 101) if 2 * d > 2 else None
    if probes is None:
        theta = np.pi / n_dirs
    else:
        cosmax = _support_chunked(U, probes)
        theta = float(np.arccos(np.clip(np.min(cosmax), -1, 1)))
    resolution = 2.0 * rho_max * (1.0 - np.cos(theta))
    first_order = theta * rho_max ** 2 / r_in if r_in > 0 else np.inf
    return HausdorffEstimate(value, float(resolution), n_dirs, float(first_order))
