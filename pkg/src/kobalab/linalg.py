"""Points of C^d and complex affine maps.

Vectors are 1-D ``complex128`` numpy arrays (a complex128 is exactly a pair of
float64s, so the real-pair storage model is kept without a wrapper class).
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError, SingularMapError

COND_MAX = 1e12


def cvec(values) -> np.ndarray:
    """Build a read-only complex vector, validating finiteness.

    Accepts complex numbers, reals, or ``[re, im]`` pairs.
    """
    arr = np.asarray(values)
    if arr.ndim == 2 and arr.shape[1] == 2 and not np.iscomplexobj(arr):
        arr = arr[:, 0] + 1j * arr[:, 1]
    arr = np.array(arr, dtype=complex).reshape(-1)
    if arr.size < 1:
        raise DimensionError("a vector needs at least one coordinate")
    if not np.all(np.isfinite(arr)):
        raise ValueError("vector has non-finite components")
    arr.setflags(write=False)
    return arr


def hdot(a, b):
    """Hermitian product <a, b> = sum a_i conj(b_i) over the last axis."""
    return np.sum(np.asarray(a) * np.conj(b), axis=-1)


def norm(a):
    return np.sqrt(np.sum(np.abs(np.asarray(a)) ** 2, axis=-1))


def to_pairs(v) -> list:
    v = np.asarray(v, dtype=complex).reshape(-1)
    return [[float(z.real), float(z.imag)] for z in v]


def from_pairs(pairs) -> np.ndarray:
    return cvec(np.asarray(pairs, dtype=float).reshape(-1, 2))


@dataclass(frozen=True, eq=False)
class AffineMap:
    """z -> linear @ z + translation."""

    linear: np.ndarray
    translation: np.ndarray
    _inverse_linear: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        lin = np.array(self.linear, dtype=complex)
        tr = np.array(self.translation, dtype=complex).reshape(-1)
        if lin.ndim != 2 or lin.shape[0] != lin.shape[1]:
            raise DimensionError(f"linear part must be square, got {lin.shape}")
        if lin.shape[0] != tr.shape[0]:
            raise DimensionError("linear part and translation disagree in dimension")
        if not (np.all(np.isfinite(lin)) and np.all(np.isfinite(tr))):
            raise ValueError("affine map has non-finite entries")
        lin.setflags(write=False)
        tr.setflags(write=False)
        object.__setattr__(self, "linear", lin)
        object.__setattr__(self, "translation", tr)

    @property
    def dim(self) -> int:
        return self.linear.shape[0]

    @classmethod
    def identity(cls, d: int) -> "AffineMap":
        return cls(np.eye(d, dtype=complex), np.zeros(d, dtype=complex))

    @classmethod
    def translation_by(cls, b) -> "AffineMap":
        b = cvec(b)
        return cls(np.eye(b.size, dtype=complex), b)

    @classmethod
    def diagonal(cls, diag) -> "AffineMap":
        diag = np.asarray(diag, dtype=complex)
        return cls(np.diag(diag), np.zeros(diag.size, dtype=complex))

    def __call__(self, z):
        return apply_affine(self, z)

    def compose(self, other: "AffineMap") -> "AffineMap":
        """self after other."""
        return AffineMap(self.linear @ other.linear, self.linear @ other.translation + self.translation)

    def inverse_linear(self) -> np.ndarray:
        if self._inverse_linear is None:
            cond = np.linalg.cond(self.linear)
            if not np.isfinite(cond) or cond > COND_MAX:
                raise SingularMapError(f"linear part is singular (condition number {cond:.3g})")
            inv = np.linalg.inv(self.linear)
            inv.setflags(write=False)
            object.__setattr__(self, "_inverse_linear", inv)
        return self._inverse_linear

    def to_json(self) -> dict:
        return {
            "linear": [to_pairs(row) for row in self.linear],
            "translation": to_pairs(self.translation),
        }

    @classmethod
    def from_json(cls, doc: dict) -> "AffineMap":
        lin = np.array([from_pairs(row) for row in doc["linear"]])
        return cls(lin, from_pairs(doc["translation"]))


def apply_affine(amap: AffineMap, p):
    """Apply to a vector or to a batch of row vectors."""
    p = np.asarray(p, dtype=complex)
    if p.shape[-1] != amap.dim:
        raise DimensionError(f"map acts on C^{amap.dim}, got a point of dimension {p.shape[-1]}")
    return p @ amap.linear.T + amap.translation


def invert_affine(amap: AffineMap) -> AffineMap:
    inv = amap.inverse_linear()
    return AffineMap(inv, -inv @ amap.translation)
