import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from kobalab.errors import DimensionError, SingularMapError
from kobalab.linalg import AffineMap, apply_affine, cvec, from_pairs, invert_affine, norm, to_pairs

finite = st.floats(-10, 10, allow_nan=False, allow_infinity=False)


def test_cvec_accepts_pairs_and_complex():
    assert np.array_equal(cvec([[1, 2], [3, 4]]), np.array([1 + 2j, 3 + 4j]))
    assert np.array_equal(cvec([1 + 2j, 3]), np.array([1 + 2j, 3 + 0j]))
    assert not cvec([1, 2]).flags.writeable


def test_cvec_rejects_nonfinite_and_empty():
    with pytest.raises(ValueError):
        cvec([np.nan, 0])
    with pytest.raises(DimensionError):
        cvec([])


def test_apply_identity():
    p = cvec([1, 0])
    assert np.array_equal(apply_affine(AffineMap.identity(2), p), p)


def test_apply_translation_to_origin():
    T = AffineMap.translation_by(-cvec([1, 0]))
    assert np.allclose(apply_affine(T, cvec([1, 0])), [0, 0])


def test_apply_diagonal():
    A = AffineMap.diagonal([1 / 2, 1 / 3])
    assert np.allclose(apply_affine(A, cvec([2, 3])), [1, 1], atol=1e-15)


def test_apply_dimension_mismatch():
    with pytest.raises(DimensionError):
        apply_affine(AffineMap.identity(2), cvec([1, 2, 3]))


def test_invert_examples():
    A = AffineMap(2 * np.eye(2), [1, 0])
    inv = invert_affine(A)
    assert np.allclose(inv.linear, 0.5 * np.eye(2))
    assert np.allclose(inv.translation, [-0.5, 0])
    D = invert_affine(AffineMap.diagonal([2j, -4]))
    assert np.allclose(np.diag(D.linear), [1 / 2j, -1 / 4])
    I = invert_affine(AffineMap.identity(3))
    assert np.allclose(I.linear, np.eye(3)) and np.allclose(I.translation, 0)


def test_singular_map_rejected():
    with pytest.raises(SingularMapError):
        invert_affine(AffineMap(np.diag([1.0, 1e-14]), [0, 0]))


def test_json_roundtrip():
    A = AffineMap(np.array([[1 + 1j, 2], [0, 3j]]), [0.5, -1j])
    B = AffineMap.from_json(A.to_json())
    assert np.array_equal(A.linear, B.linear) and np.array_equal(A.translation, B.translation)
    v = cvec([1 + 2j, -3])
    assert np.array_equal(from_pairs(to_pairs(v)), v)


@given(st.integers(0, 2**32 - 1))
def test_inverse_roundtrip(seed):
    rng = np.random.default_rng(seed)
    d = int(rng.integers(1, 5))
    Q, _ = np.linalg.qr(rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d)))
    L = Q @ np.diag(rng.uniform(0.2, 5, d))
    A = AffineMap(L, rng.normal(size=d) + 1j * rng.normal(size=d))
    p = rng.normal(size=d) + 1j * rng.normal(size=d)
    back = apply_affine(invert_affine(A), apply_affine(A, p))
    assert np.max(np.abs(back - p)) < 1e-10
    # composition with the inverse is the identity on a probe basis
    comp = A.compose(invert_affine(A))
    assert np.max(np.abs(apply_affine(comp, np.eye(d)) - np.eye(d))) < 1e-12


@given(st.integers(0, 2**32 - 1))
def test_unitary_preserves_norm(seed):
    rng = np.random.default_rng(seed)
    d = int(rng.integers(1, 6))
    Q, _ = np.linalg.qr(rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d)))
    p = rng.normal(size=d) + 1j * rng.normal(size=d)
    assert abs(norm(Q @ p) - norm(p)) < 1e-12 * max(1.0, norm(p))


def test_batch_application():
    A = AffineMap(np.array([[0, 1], [1, 0]]), [1, 1j])
    P = np.array([[1, 2], [3, 4]], dtype=complex)
    out = apply_affine(A, P)
    assert np.allclose(out, [[3, 1 + 1j], [5, 3 + 1j]])
