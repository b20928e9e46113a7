import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from kobalab.domains import (
    AffineImage,
    Ball,
    HalfSpace,
    Intersection,
    PolynomialGraph,
    Polydisk,
    boundary_distance,
    boundary_hit,
    closest_boundary_point,
    convexity_probe,
    dir_boundary_distance,
    domain_from_json,
    local_hausdorff,
    sample_members,
    unit_disk,
)
from kobalab.errors import PreconditionError
from kobalab.linalg import AffineMap
from kobalab.polynomial import HermitianPolynomial as H

BALL = Ball([0, 0], 1)
BIDISK = Polydisk([0, 0], [1, 1])
PARABOLOID = PolynomialGraph(H.abs_power(1, 0, 1))


def test_contains_examples():
    assert BALL.contains([0, 0])
    assert not BALL.contains([1, 0])
    assert PARABOLOID.contains([1, 0.5])
    assert not PARABOLOID.contains([0.2, 0.5])


def test_dir_distance_examples():
    assert dir_boundary_distance(BALL, [0, 0], [np.exp(0.3j), 0]) == pytest.approx(1, abs=1e-12)
    assert dir_boundary_distance(BIDISK, [0, 0], [1, 0]) == pytest.approx(1, abs=1e-12)
    assert dir_boundary_distance(PARABOLOID, [1, 0], [0, 1]) == pytest.approx(1, abs=1e-8)
    with pytest.raises(PreconditionError):
        dir_boundary_distance(BALL, [0, 0], [0, 0])
    with pytest.raises(PreconditionError):
        dir_boundary_distance(BALL, [2, 0], [1, 0])


def test_dir_distance_takes_inf_over_phases():
    # along v = (1, 0) from p = (0.5, 0) the real ray exits at 0.5 but the
    # complex line reaches the boundary at distance 0.5 in every phase
    assert dir_boundary_distance(BALL, [0.5, 0], [1j, 0]) == pytest.approx(0.5, abs=1e-12)
    # paraboloid: from (1, 0) along (1, 0) the real ray never exits forward, backward it does at 1
    assert dir_boundary_distance(PARABOLOID, [1, 0], [1, 0]) == pytest.approx(1, abs=1e-6)


def test_boundary_distance_examples():
    assert boundary_distance(BALL, [0, 0]) == pytest.approx(1)
    assert boundary_distance(BALL, [0.5, 0]) == pytest.approx(0.5)
    assert boundary_distance(BIDISK, [0.5, 0]) == pytest.approx(0.5)
    assert np.allclose(closest_boundary_point(BALL, [0.5, 0]), [1, 0])
    x = closest_boundary_point(BALL, [0, 0])
    assert np.linalg.norm(x) == pytest.approx(1)


def test_paraboloid_closest_point_against_grid_oracle():
    # boundary Re x0 = |x1|^2; by rotation symmetry in x1 and Im x0 = 0 at the optimum,
    # minimise (r^2 - 1)^2 + r^2 over r >= 0 on a fine grid
    r = np.linspace(0, 2, 2_000_001)
    f = (r ** 2 - 1) ** 2 + r ** 2
    k = int(np.argmin(f))
    oracle_dist, oracle_r = np.sqrt(f[k]), r[k]
    x = closest_boundary_point(PARABOLOID, [1, 0])
    assert boundary_distance(PARABOLOID, [1, 0]) == pytest.approx(oracle_dist, abs=1e-6)
    assert np.linalg.norm(x - np.array([1, 0])) == pytest.approx(oracle_dist, abs=1e-6)
    assert x[0].real == pytest.approx(oracle_r ** 2, abs=1e-4)
    assert abs(x[1]) == pytest.approx(oracle_r, abs=1e-4)
    assert abs(x[0].real - abs(x[1]) ** 2) < 1e-8


def test_boundary_hit_brackets_the_boundary():
    hit = boundary_hit(PARABOLOID, [1, 0], [0, 1])
    assert hit.t_hit == pytest.approx(1, abs=1e-9)
    u = np.array([0, 1])
    assert PARABOLOID.contains(hit.point - (hit.bracket_width + 1e-9) * u)
    assert not PARABOLOID.contains(hit.point + (hit.bracket_width + 1e-9) * u)


def test_c_proper_flags():
    assert BALL.c_proper and BIDISK.c_proper and PARABOLOID.c_proper
    assert not HalfSpace([1, 0], 0).c_proper
    assert HalfSpace([1j], 0).c_proper
    assert not PolynomialGraph(H.abs_power(2, 0, 1)).c_proper
    assert Intersection([HalfSpace([1, 0], -0.5), BALL]).c_proper


def test_json_roundtrip():
    dom = Intersection([AffineImage(AffineMap.diagonal([2, 1j]), BALL), BIDISK, HalfSpace([1, 0], -0.5)])
    back = domain_from_json(dom.to_json())
    rng = np.random.default_rng(0)
    Z = 1.5 * (rng.normal(size=(500, 2)) + 1j * rng.normal(size=(500, 2)))
    assert np.array_equal(dom.contains_batch(Z), back.contains_batch(Z))
    P = domain_from_json(PolynomialGraph(H.abs_power(2, 1, 2)).to_json())
    assert P.dim == 3


@pytest.mark.parametrize("dom", [BALL, BIDISK, PARABOLOID, Intersection([BALL, HalfSpace([1, 1], -0.2)]),
                                 AffineImage(AffineMap(np.array([[1, 0.5j], [0, 2]]), [0.1, 0]), BIDISK)],
                         ids=["ball", "bidisk", "paraboloid", "cut-ball", "sheared-bidisk"])
def test_midpoint_convexity(dom):
    assert convexity_probe(dom, n_pairs=1000, seed=1, R=5.0) is None


def test_delta_monotone_under_inclusion():
    pts = sample_members(BALL, 50, seed=3)
    for p in pts:
        assert boundary_distance(BALL, p) <= boundary_distance(BIDISK, p) + 1e-12


@given(st.integers(0, 2**31))
def test_directional_dominates_euclidean(seed):
    rng = np.random.default_rng(seed)
    dom = Intersection([BALL, HalfSpace([1, 0.5j], -0.3)])
    p = sample_members(dom, 1, seed=seed)[0]
    v = rng.normal(size=2) + 1j * rng.normal(size=2)
    assert dir_boundary_distance(dom, p, v) >= boundary_distance(dom, p) - 1e-9


@given(st.integers(0, 2**31))
def test_affine_equivariance_of_membership(seed):
    rng = np.random.default_rng(seed)
    L = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2)) + 2 * np.eye(2)
    A = AffineMap(L, rng.normal(size=2) + 1j * rng.normal(size=2))
    img = AffineImage(A, BIDISK)
    Z = 1.2 * (rng.normal(size=(64, 2)) + 1j * rng.normal(size=(64, 2)))
    assert np.array_equal(img.contains_batch(A(Z)), BIDISK.contains_batch(Z))


def test_hausdorff_examples():
    same = local_hausdorff(BALL, BALL, 3.0)
    assert same.value == 0.0
    big = local_hausdorff(BALL, Ball([0, 0], 1.1), 3.0)
    assert abs(big.value - 0.1) <= big.resolution + 1e-9
    shifted = local_hausdorff(BALL, Ball([0.05, 0], 1), 3.0)
    assert abs(shifted.value - 0.05) <= shifted.resolution + 1e-9
    assert big.value == pytest.approx(local_hausdorff(Ball([0, 0], 1.1), BALL, 3.0).value, abs=1e-12)


def test_hausdorff_truncation_of_unbounded_sets():
    # two parallel half-planes in C at heights 0 and 0.1, cut by the disk of radius 2
    a, b = HalfSpace([1j], 0), HalfSpace([1j], 0.1)
    est = local_hausdorff(a, b, 2.0)
    # the lower cut chord reaches (+-2, 0) while the upper one stops at height 0.1,
    # so the gap is the distance from (2, 0) to the upper cap, not just 0.1
    chord = np.hypot(2 - np.sqrt(4 - 0.01), 0.1)
    # the cut corner makes the sampling error first order in the covering angle
    assert abs(est.value - chord) <= est.first_order_bound
    assert est.first_order_bound < 0.01


def test_hausdorff_triangle_inequality():
    A, B, C = BALL, Ball([0.1, 0], 1.05), Polydisk([0, 0], [0.9, 0.9])
    ab, bc, ac = (local_hausdorff(x, y, 3.0) for x, y in ((A, B), (B, C), (A, C)))
    slack = 2 * max(ab.resolution, bc.resolution, ac.resolution)
    assert ac.value <= ab.value + bc.value + slack


def test_disk_is_ball_in_one_dimension():
    assert unit_disk().dim == 1 and unit_disk().contains([0.99j])
