"""Exact Hermitian polynomials in (z, conj z) and their multi-type at infinity."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping

import numpy as np

from .errors import PreconditionError

MultiIndex = tuple


@dataclass(frozen=True)
class GaussianRational:
    """A complex number with exact rational parts."""

    re: Fraction = Fraction(0)
    im: Fraction = Fraction(0)

    @classmethod
    def of(cls, value) -> "GaussianRational":
        if isinstance(value, GaussianRational):
            return value
        if isinstance(value, complex):
            return cls(Fraction(value.real), Fraction(value.imag))
        if isinstance(value, tuple):
            return cls(Fraction(value[0]), Fraction(value[1]))
        return cls(Fraction(value), Fraction(0))

    def __add__(self, other):
        other = GaussianRational.of(other)
        return GaussianRational(self.re + other.re, self.im + other.im)

    __radd__ = __add__

    def __neg__(self):
        return GaussianRational(-self.re, -self.im)

    def __sub__(self, other):
        return self + (-GaussianRational.of(other))

    def __mul__(self, other):
        o = GaussianRational.of(other)
        return GaussianRational(self.re * o.re - self.im * o.im, self.re * o.im + self.im * o.re)

    __rmul__ = __mul__

    def __pow__(self, k: int):
        out = GaussianRational(Fraction(1))
        for _ in range(k):
            out = out * self
        return out

    def conj(self) -> "GaussianRational":
        return GaussianRational(self.re, -self.im)

    def __bool__(self):
        return bool(self.re) or bool(self.im)

    def __complex__(self):
        return complex(float(self.re), float(self.im))

    def __str__(self):
        if not self.im:
            return str(self.re)
        sign = "-" if self.im < 0 else "+"
        return f"{self.re}{sign}{abs(self.im)}i"


def _fmt(v) -> str:
    return "(" + ", ".join(str(c) for c in v) + ")"


ONE = GaussianRational(Fraction(1))
ZERO = GaussianRational()


def _exact_vector(v) -> tuple:
    out = []
    for c in v:
        if isinstance(c, (GaussianRational, tuple, int, Fraction)):
            out.append(GaussianRational.of(c))
        elif isinstance(c, complex):
            out.append(GaussianRational(Fraction(c.real), Fraction(c.imag)))
        else:
            out.append(GaussianRational.of(Fraction(c)))
    return tuple(out)


class HermitianPolynomial:
    """P(z) = sum a[alpha, beta] z^alpha conj(z)^beta with a[beta, alpha] = conj(a[alpha, beta]).

    ``terms`` maps ``(alpha, beta)`` pairs of exponent tuples to exact coefficients;
    zero coefficients are dropped.
    """

    def __init__(self, dim: int, terms: Mapping | Iterable = (), check: bool = True):
        if dim < 1:
            raise ValueError("dimension must be positive")
        self.dim = dim
        items = terms.items() if isinstance(terms, Mapping) else terms
        store: dict = {}
        for (alpha, beta), coef in items:
            alpha, beta = tuple(int(a) for a in alpha), tuple(int(b) for b in beta)
            if len(alpha) != dim or len(beta) != dim or min(alpha + beta) < 0:
                raise ValueError(f"bad multi-index pair {alpha}, {beta} for dimension {dim}")
            key = (alpha, beta)
            store[key] = store.get(key, ZERO) + GaussianRational.of(coef)
        self.terms = {k: c for k, c in store.items() if c}
        if check:
            for (alpha, beta), c in self.terms.items():
                if self.terms.get((beta, alpha), ZERO) != c.conj():
                    raise ValueError(f"not Hermitian: coefficient of {alpha},{beta} has no conjugate partner")
        self._numeric = None

    # construction helpers ------------------------------------------------
    @classmethod
    def zero(cls, dim: int) -> "HermitianPolynomial":
        return cls(dim, {})

    @classmethod
    def abs_power(cls, dim: int, i: int, k: int, coef=1) -> "HermitianPolynomial":
        """coef * |z_i|^(2k)."""
        e = tuple(k if j == i else 0 for j in range(dim))
        return cls(dim, {(e, e): Fraction(coef)})

    @classmethod
    def norm_sq_linear(cls, coeffs) -> "HermitianPolynomial":
        """|sum c_i z_i|^2 for exact complex c_i."""
        c = _exact_vector(coeffs)
        dim = len(c)
        terms = {}
        for i, j in itertools.product(range(dim), repeat=2):
            val = c[i] * c[j].conj()
            if val:
                a = tuple(1 if t == i else 0 for t in range(dim))
                b = tuple(1 if t == j else 0 for t in range(dim))
                terms[(a, b)] = val
        return cls(dim, terms)

    def __add__(self, other: "HermitianPolynomial") -> "HermitianPolynomial":
        self._same_dim(other)
        merged = list(self.terms.items()) + list(other.terms.items())
        return HermitianPolynomial(self.dim, merged)

    def __mul__(self, other):
        if isinstance(other, HermitianPolynomial):
            self._same_dim(other)
            out = []
            for (a1, b1), c1 in self.terms.items():
                for (a2, b2), c2 in other.terms.items():
                    key = (tuple(x + y for x, y in zip(a1, a2)), tuple(x + y for x, y in zip(b1, b2)))
                    out.append((key, c1 * c2))
            return HermitianPolynomial(self.dim, out)
        scale = Fraction(other)
        return HermitianPolynomial(self.dim, {k: c * scale for k, c in self.terms.items()})

    __rmul__ = __mul__

    def __pow__(self, k: int):
        out = HermitianPolynomial(self.dim, {((0,) * self.dim, (0,) * self.dim): 1})
        for _ in range(k):
            out = out * self
        return out

    def __eq__(self, other):
        return isinstance(other, HermitianPolynomial) and self.dim == other.dim and self.terms == other.terms

    def __hash__(self):
        return hash((self.dim, frozenset(self.terms.items())))

    def __repr__(self):
        parts = []
        for (a, b), c in sorted(self.terms.items()):
            parts.append(f"({c.re}{'+' if c.im >= 0 else ''}{c.im}i) z^{a} zb^{b}")
        return f"HermitianPolynomial(dim={self.dim}: " + " + ".join(parts) + ")"

    def _same_dim(self, other):
        if self.dim != other.dim:
            raise ValueError("polynomials live in different dimensions")

    @property
    def constant_term(self) -> GaussianRational:
        zero = (0,) * self.dim
        return self.terms.get((zero, zero), ZERO)

    @property
    def total_degree(self) -> int:
        return max((sum(a) + sum(b) for a, b in self.terms), default=0)

    def is_hermitian(self) -> bool:
        return all(self.terms.get((b, a), ZERO) == c.conj() for (a, b), c in self.terms.items())

    # evaluation ------------------------------------------------------------
    def _arrays(self):
        if self._numeric is None:
            keys = list(self.terms)
            A = np.array([k[0] for k in keys], dtype=int).reshape(-1, self.dim)
            B = np.array([k[1] for k in keys], dtype=int).reshape(-1, self.dim)
            C = np.array([complex(self.terms[k]) for k in keys], dtype=complex)
            self._numeric = (A, B, C)
        return self._numeric

    def eval(self, z):
        """Floating evaluation at a point or a batch of rows; returns real values."""
        z = np.asarray(z, dtype=complex)
        single = z.ndim == 1
        Z = np.atleast_2d(z)
        if Z.shape[1] != self.dim:
            raise ValueError(f"expected points in C^{self.dim}")
        A, B, C = self._arrays()
        if C.size == 0:
            out = np.zeros(Z.shape[0])
            return float(out[0]) if single else out
        mon = np.prod(Z[:, None, :] ** A[None] * np.conj(Z)[:, None, :] ** B[None], axis=2)
        vals = mon * C[None]
        total = vals.sum(axis=1)
        scale = 1.0 + np.abs(vals).sum(axis=1)
        if np.any(np.abs(total.imag) > 1e-12 * scale):
            raise ArithmeticError("evaluation produced a non-real value; polynomial is not Hermitian")
        out = total.real
        return float(out[0]) if single else out

    def exact_eval(self, z) -> GaussianRational:
        zz = _exact_vector(z)
        total = ZERO
        for (a, b), c in self.terms.items():
            term = c
            for i in range(self.dim):
                term = term * zz[i] ** a[i] * zz[i].conj() ** b[i]
            total = total + term
        return total

    # restriction to complex lines --------------------------------------------
    def restrict_to_line(self, v, a=None) -> dict:
        """Exact coefficients of zeta -> P(a + zeta v) as {(j, k): c} for zeta^j conj(zeta)^k."""
        v = _exact_vector(v)
        a = _exact_vector(a) if a is not None else (ZERO,) * self.dim
        if len(v) != self.dim or len(a) != self.dim:
            raise ValueError("line data has the wrong dimension")
        out: dict = {}
        for (alpha, beta), coef in self.terms.items():
            factors = [{(0, 0): coef}]
            for i in range(self.dim):
                poly = {}
                for j in range(alpha[i] + 1):
                    cj = GaussianRational.of(math.comb(alpha[i], j)) * a[i] ** (alpha[i] - j) * v[i] ** j
                    if not cj:
                        continue
                    for k in range(beta[i] + 1):
                        ck = GaussianRational.of(math.comb(beta[i], k)) * a[i].conj() ** (beta[i] - k) * v[i].conj() ** k
                        if ck:
                            poly[(j, k)] = poly.get((j, k), ZERO) + cj * ck
                factors.append(poly)
            acc = factors[0]
            for f in factors[1:]:
                nxt = {}
                for (j1, k1), c1 in acc.items():
                    for (j2, k2), c2 in f.items():
                        key = (j1 + j2, k1 + k2)
                        nxt[key] = nxt.get(key, ZERO) + c1 * c2
                acc = nxt
            for key, c in acc.items():
                out[key] = out.get(key, ZERO) + c
        return {k: c for k, c in out.items() if c}

    def weight(self, alpha, beta, weights) -> Fraction:
        return sum((Fraction(a + b, m) for a, b, m in zip(alpha, beta, weights)), Fraction(0))

    # serialization ---------------------------------------------------------------
    def to_json(self) -> dict:
        terms = []
        for (a, b), c in sorted(self.terms.items()):
            terms.append({"alpha": list(a), "beta": list(b), "re": str(c.re), "im": str(c.im)})
        return {"dim": self.dim, "terms": terms}

    @classmethod
    def from_json(cls, doc: dict) -> "HermitianPolynomial":
        dim = int(doc["dim"])
        items = []
        for t in doc["terms"]:
            coef = GaussianRational(Fraction(str(t.get("re", "0"))), Fraction(str(t.get("im", "0"))))
            items.append(((tuple(t["alpha"]), tuple(t["beta"])), coef))
        return cls(dim, items)


def eval_poly(P: HermitianPolynomial, z):
    return P.eval(z)


def degree_along(P: HermitianPolynomial, v) -> int:
    """Degree of zeta -> P(zeta v); 0 when the restriction vanishes identically."""
    if not any(_exact_vector(v)):
        raise ValueError("direction must be nonzero")
    coeffs = P.restrict_to_line(v)
    return max((j + k for j, k in coeffs), default=0)


# ---------------------------------------------------------------------------
# non-degeneracy, convexity and nonnegativity probes

@dataclass(frozen=True)
class NondegeneracyResult:
    passed: bool
    counterexample: tuple | None = None  # (base point a, direction v) with P(a + zeta v) == 0
    directions_checked: int = 0


def _random_rational_vector(rng, dim, support=None, denom=7):
    support = range(dim) if support is None else support
    out = [ZERO] * dim
    for i in support:
        re = Fraction(int(rng.integers(-9, 10)), int(rng.integers(1, denom + 1)))
        im = Fraction(int(rng.integers(-9, 10)), int(rng.integers(1, denom + 1)))
        out[i] = GaussianRational(re, im)
    if not any(out):
        out[list(support)[0]] = ONE
    return tuple(out)


def _unit(dim, i, coef=ONE):
    return tuple(coef if j == i else ZERO for j in range(dim))


def _structured_directions(dim):
    dirs = [_unit(dim, i) for i in range(dim)]
    I = GaussianRational(Fraction(0), Fraction(1))
    for i, j in itertools.combinations(range(dim), 2):
        for c in (ONE, -ONE, I, -I):
            v = list(_unit(dim, i))
            v[j] = c
            dirs.append(tuple(v))
    return dirs


def nondegenerate_check(P: HermitianPolynomial, trials: int = 32, seed: int = 0) -> NondegeneracyResult:
    """Search for a complex line on which P vanishes identically.

    Only lines through the origin are tested: the zero set of a nonnegative convex P
    with P(0) = 0 is closed and convex, so it contains an affine line a + C v only if
    it contains C v itself. A returned counterexample is certified exactly; a pass is
    probabilistic (directions outside the probe set are not covered).
    """
    rng = np.random.default_rng(seed)
    dirs = _structured_directions(P.dim) + [_random_rational_vector(rng, P.dim) for _ in range(trials)]
    origin = (ZERO,) * P.dim
    for count, v in enumerate(dirs, start=1):
        if not P.restrict_to_line(v):
            return NondegeneracyResult(False, (origin, v), count)
    return NondegeneracyResult(True, None, len(dirs))


def convexity_probe(P: HermitianPolynomial, samples: int = 256, seed: int = 0):
    """Exact second derivative of t -> P(a + t w) at t = 0 over random rational (a, w).

    Base points cycle through scales 1, 4, 16 and 64 so that non-convexity far from
    the origin (where high-degree mixed terms dominate) is also probed.
    Returns the first (a, w) with negative curvature, or None.
    """
    rng = np.random.default_rng(seed)
    for s in range(samples):
        scale = GaussianRational.of(4 ** (s % 4))
        a = tuple(scale * c for c in _random_rational_vector(rng, P.dim, denom=5))
        w = _random_rational_vector(rng, P.dim, denom=5)
        coeffs = P.restrict_to_line(w, a)
        second = sum((c for (j, k), c in coeffs.items() if j + k == 2), ZERO)
        if second.re < 0:
            return a, w
    return None


def nonnegativity_probe(P: HermitianPolynomial, samples: int = 512, seed: int = 0, radius: float = 2.0):
    rng = np.random.default_rng(seed)
    Z = radius * (rng.uniform(-1, 1, (samples, P.dim)) + 1j * rng.uniform(-1, 1, (samples, P.dim)))
    vals = P.eval(Z)
    bad = np.flatnonzero(vals < -1e-9 * (1 + np.abs(vals)))
    return None if bad.size == 0 else Z[bad[0]]


# ---------------------------------------------------------------------------
# multi-type

@dataclass(frozen=True)
class MultiType:
    weights: tuple            # m_1 <= ... <= m_d
    adapted: bool
    limit: HermitianPolynomial  # terms of P with weight exactly 1
    levels: tuple = ()        # distinct degrees D_1 < ... < D_k
    level_dims: tuple = ()    # d_l = dim V_l, with V_l spanned by the first d_l axes

    def to_json(self) -> dict:
        return {
            "m": list(self.weights),
            "adapted": self.adapted,
            "levels": list(self.levels),
            "level_dims": list(self.level_dims),
            "limit": self.limit.to_json(),
        }


def check_adapted(P: HermitianPolynomial, weights, seed: int = 0, samples: int = 32):
    """Return None if the coordinates look adapted to the degree filtration, else a witness vector."""
    d = P.dim
    if list(weights) != sorted(weights):
        return ("unsorted", tuple(weights))
    rng = np.random.default_rng(seed)
    for v in _structured_directions(d)[d:]:
        support = [i for i, c in enumerate(v) if c]
        expect = max(weights[i] for i in support)
        if degree_along(P, v) != expect:
            return ("probe", v)
    for level in sorted(set(weights)):
        d_l = max(i for i, m in enumerate(weights) if m <= level) + 1
        for _ in range(samples):
            v = _random_rational_vector(rng, d, support=range(d_l))
            support = [i for i, c in enumerate(v) if c]
            expect = max(weights[i] for i in support)
            if degree_along(P, v) != expect:
                return ("random", v)
    return None


def multitype(P: HermitianPolynomial, seed: int = 0, probes: bool = True) -> MultiType:
    """Weights m_i = deg(e_i) and the weighted-homogeneous limit P_1 of t P(t^(-1/m) z)."""
    if P.constant_term:
        raise PreconditionError("P(0) must vanish")
    if probes:
        nd = nondegenerate_check(P, seed=seed)
        if not nd.passed:
            raise PreconditionError(f"P is degenerate: vanishes on the line through 0 along {_fmt(nd.counterexample[1])}")
        bad = nonnegativity_probe(P, seed=seed)
        if bad is not None:
            raise PreconditionError(f"P takes a negative value at {bad}")
        bad = convexity_probe(P, seed=seed)
        if bad is not None:
            raise PreconditionError(f"P is not convex along the real line through {_fmt(bad[0])} in direction {_fmt(bad[1])}")
    d = P.dim
    weights = tuple(degree_along(P, _unit(d, i)) for i in range(d))
    if min(weights) == 0:
        raise PreconditionError("P vanishes along a coordinate axis")
    witness = check_adapted(P, weights, seed=seed)
    if witness is not None:
        raise PreconditionError(f"coordinates are not adapted to the degree filtration ({witness[0]}: {_fmt(witness[1])})")
    limit_terms = {}
    for (a, b), c in P.terms.items():
        w = P.weight(a, b, weights)
        if w > 1:
            raise PreconditionError(f"term z^{a} zb^{b} has weight {w} > 1")
        if w == 1:
            limit_terms[(a, b)] = c
    limit = HermitianPolynomial(d, limit_terms)
    if not limit.is_hermitian():
        raise ArithmeticError("term filtering broke Hermitian symmetry")
    levels = tuple(sorted(set(weights)))
    level_dims = tuple(max(i for i, m in enumerate(weights) if m <= D) + 1 for D in levels)
    return MultiType(weights, True, limit, levels, level_dims)
