import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kobalab.domains import AffineImage, Ball, HalfSpace, Intersection, PolynomialGraph, Polydisk, unit_disk, upper_half_plane
from kobalab.errors import PreconditionError
from kobalab.kobayashi import (
    dist_ball,
    dist_disk,
    dist_halfplane,
    dist_polydisk,
    distance_bracket,
    distance_lower,
    distance_upper,
    exact_oracle,
    finsler_bracket,
    quasi_geodesic,
    segment_lengths,
    segments_inside,
    verify_quasi_geodesic,
)
from kobalab.linalg import AffineMap
from kobalab.polynomial import HermitianPolynomial as H

from conftest import random_in_ball

BALL = Ball([0, 0], 1)
BIDISK = Polydisk([0, 0], [1, 1])


def mp_atanh(x):
    with mpmath.workdps(40):
        return float(mpmath.atanh(mpmath.mpf(x)))


def test_disk_values():
    assert dist_disk(0, 0.5) == pytest.approx(0.5493061443340549, abs=1e-15)
    assert dist_disk(0.3j, 0.3j) == 0.0
    with mpmath.workdps(40):
        oracle = float(mpmath.atanh(mpmath.mpf("0.6") / mpmath.mpf("1.09")))
    assert dist_disk(0.3, -0.3) == pytest.approx(oracle, abs=1e-14)
    assert oracle == pytest.approx(0.619039, abs=1e-6)
    with pytest.raises(PreconditionError):
        dist_disk(1, 0)


def test_halfplane_values():
    assert dist_halfplane(1j, 2j) == pytest.approx(0.5 * np.log(2), abs=1e-15)
    assert dist_halfplane(1 + 1j, 1 + 1j) == 0.0
    with mpmath.workdps(40):
        oracle = float(mpmath.acosh(mpmath.mpf("1.5")) / 2)
    assert dist_halfplane(1j, 1 + 1j) == pytest.approx(oracle, abs=1e-15)
    assert oracle == pytest.approx(0.481212, abs=1e-6)
    with pytest.raises(PreconditionError):
        dist_halfplane(1, 1j)


def test_halfplane_small_separation_is_accurate():
    # the log1p form keeps relative accuracy where arccosh(1 + x) would cancel
    z = 1j
    w = 1j + 1e-9
    with mpmath.workdps(50):
        x = mpmath.mpf("1e-18") / 2
        oracle = float(mpmath.acosh(1 + x) / 2)
    assert dist_halfplane(z, w) == pytest.approx(oracle, rel=1e-9)


def test_model_oracle_values():
    a = 0.5493061443340549
    assert exact_oracle("disk", 0, 0.5) == pytest.approx(a)
    assert exact_oracle("polydisk", [0, 0], [0.5, 0.5]) == pytest.approx(a)
    assert exact_oracle("ball", [0, 0], [0.5, 0]) == pytest.approx(a)
    with pytest.raises(ValueError):
        exact_oracle("annulus", 0, 0.5)


@given(st.integers(0, 2**31))
def test_ball_formula_matches_automorphism_oracle(seed):
    rng = np.random.default_rng(seed)
    p, q = random_in_ball(rng, 2, 3, 0.999)
    with mpmath.workdps(50):
        P = [mpmath.mpc(x) for x in p]
        Q = [mpmath.mpc(x) for x in q]
        pp = sum(abs(x) ** 2 for x in P)
        qp = sum(a * mpmath.conj(b) for a, b in zip(Q, P))
        s = mpmath.sqrt(1 - pp)
        proj = [x * qp / pp for x in P]
        phi = [(a - c - s * (b - c)) / (1 - qp) for a, b, c in zip(P, Q, proj)]
        oracle = float(mpmath.atanh(mpmath.sqrt(sum(abs(x) ** 2 for x in phi))))
    assert dist_ball(p, q) == pytest.approx(oracle, rel=1e-9, abs=1e-12)


@given(st.integers(0, 2**31))
def test_disk_is_one_dimensional_ball(seed):
    rng = np.random.default_rng(seed)
    z = random_in_ball(rng, 2, 1)
    assert dist_ball(z[0], z[1]) == pytest.approx(dist_disk(z[0, 0], z[1, 0]), abs=1e-13)
    assert dist_polydisk(z[0], z[1]) == pytest.approx(dist_disk(z[0, 0], z[1, 0]), abs=1e-13)


def test_finsler_examples():
    fb = finsler_bracket(unit_disk(), [0], [1])
    assert (fb.lower, fb.upper) == pytest.approx((0.5, 1.0))
    assert 1.0 in fb
    fb = finsler_bracket(BALL, [0, 0], [np.sqrt(0.5), 1j * np.sqrt(0.5)])
    assert (fb.lower, fb.upper) == pytest.approx((0.5, 1.0))
    fb = finsler_bracket(unit_disk(), [0.5], [1])
    assert (fb.lower, fb.upper) == pytest.approx((1.0, 2.0))
    assert 1 / 0.75 in fb
    with pytest.raises(PreconditionError):
        finsler_bracket(HalfSpace([1, 0], 0), [1, 0], [0, 1])
    with pytest.raises(PreconditionError):
        finsler_bracket(BALL, [0, 0], [0, 0])


def test_upper_examples():
    val, path, _ = distance_upper(unit_disk(), [0], [0])
    assert val == 0.0 and path.nodes.shape[0] == 1
    val, path, _ = distance_upper(unit_disk(), [0], [0.5])
    assert 0.5493 <= val <= 0.60
    assert segments_inside(unit_disk(), path.nodes)
    val, _, _ = distance_upper(BIDISK, [0, 0], [0.5, 0.3])
    assert val >= 0.5493


def test_bracket_examples():
    br = distance_bracket(unit_disk(), [0], [0.5])
    assert 0.549306 in br
    br = distance_bracket(unit_disk(), [0.2j], [0.2j])
    assert (br.lower, br.upper) == (0.0, 0.0)
    br = distance_bracket(BALL, [0, 0], [0.5, 0])
    assert 0.5493061 in br
    doc = br.to_json()
    assert set(doc) >= {"lower", "upper", "path", "methods"}


def test_bracket_is_exactly_symmetric():
    dom = Intersection([BALL, HalfSpace([1, 1j], -0.4)])
    p, q = np.array([0.1, 0.2j]), np.array([-0.3, 0.1])
    a, b = distance_bracket(dom, p, q), distance_bracket(dom, q, p)
    assert (a.lower, a.upper) == (b.lower, b.upper)


def test_bracket_on_general_domain_contains_slice_bounds():
    # the complex line through two points of the paraboloid graph meets it in a
    # region containing a disk; the lower bound must not exceed the upper
    G = PolynomialGraph(H.abs_power(1, 0, 1))
    br = distance_bracket(G, [1, 0], [2, 0.5j])
    assert 0 < br.lower <= br.upper


def test_slice_distance_dominates_ambient_lower():
    # the slice {(z, 0)} of the ball is the unit disk; inclusion of the slice is holomorphic,
    # so the ambient distance (and its lower bound) is at most the disk distance
    rng = np.random.default_rng(5)
    for _ in range(20):
        z = random_in_ball(rng, 2, 1)[:, 0]
        p, q = np.array([z[0], 0]), np.array([z[1], 0])
        assert distance_lower(BALL, p, q) <= dist_disk(z[0], z[1]) * (1 + 1e-12)
    # a cut of the bidisk by a half-space: slice disk of radius 1 along the first axis
    dom = Intersection([BIDISK, HalfSpace([0, 1], -0.5)])
    for _ in range(10):
        z = random_in_ball(rng, 2, 1, 0.9)[:, 0]
        p, q = np.array([z[0], 0]), np.array([z[1], 0])
        assert distance_lower(dom, p, q) <= dist_disk(z[0], z[1]) * (1 + 1e-12)


@settings(max_examples=10)
@given(st.integers(0, 2**31))
def test_affine_invariance(seed):
    rng = np.random.default_rng(seed)
    Q, _ = np.linalg.qr(rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2)))
    A = AffineMap(Q @ np.diag(rng.uniform(0.5, 2, 2)), rng.normal(size=2) + 1j * rng.normal(size=2))
    base = Intersection([BIDISK, HalfSpace([1, 1], -0.6)])
    img = AffineImage(A, base)
    p, q = 0.6 * random_in_ball(rng, 2, 2)
    if not (base.contains(p) and base.contains(q)):
        return
    b1 = distance_bracket(base, p, q, budget=20)
    b2 = distance_bracket(img, A(p), A(q), budget=20)
    assert b2.upper == pytest.approx(b1.upper, rel=0.05)
    assert b2.lower == pytest.approx(b1.lower, rel=0.05, abs=1e-9)


def test_segment_lengths_exact_on_radial_segment():
    # radial segment [0, r] in the disk has Kobayashi length arctanh(r)
    val, err = segment_lengths(unit_disk(), np.array([[0.0]]), np.array([[0.6]]), with_error=True)
    assert val[0] == pytest.approx(np.arctanh(0.6), rel=1e-6)
    assert err[0] >= 0


def test_quasi_geodesic_ball():
    cert = quasi_geodesic(BALL, [0, 0], [1, 0])
    assert cert.epsilon == pytest.approx(1.0)
    assert cert.A == 2.0 and cert.B == 0.0
    chk = verify_quasi_geodesic(BALL, cert)
    assert chk.ok
    assert all(p["lower"] == 0.0 for p in chk.pairs if p["t1"] == p["t2"])
    with pytest.raises(PreconditionError):
        quasi_geodesic(BALL, [0, 0], [0.5, 0])


def test_quasi_geodesic_off_center_bidisk():
    cert = quasi_geodesic(BIDISK, [0.3, 0.2], [1, 0.2])
    assert 0 < cert.epsilon <= 1
    assert verify_quasi_geodesic(BIDISK, cert, t_grid=np.arange(0, 2.01, 0.5)).ok


def test_halfplane_domain_uses_exact_metric():
    br = distance_bracket(upper_half_plane(), [1j], [2j])
    assert 0.5 * np.log(2) in br
