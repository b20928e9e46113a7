import numpy as np
import pytest

from kobalab.domains import Ball, HalfSpace, Intersection, PolynomialGraph
from kobalab.errors import PreconditionError
from kobalab.finite_type import complex_tangent_basis, line_type, m_convexity_constant, restriction_slope
from kobalab.polynomial import HermitianPolynomial as H

BALL = Ball([0, 0], 1)


def test_ball_line_type_is_two(rng):
    for _ in range(10):
        x = rng.normal(size=2) + 1j * rng.normal(size=2)
        x /= np.linalg.norm(x)
        res = line_type(BALL, x)
        assert res.value == 2 and res.label == "2"


def test_quartic_graph_line_type():
    G = PolynomialGraph(H.abs_power(1, 0, 2))
    assert line_type(G, [0, 0]).value == 4
    assert restriction_slope(G, [0, 0], [0, 1]) == pytest.approx(4, abs=0.05)


def test_mixed_graph_takes_the_worst_direction():
    P = H.abs_power(2, 0, 1) + H.abs_power(2, 1, 3)
    assert line_type(PolynomialGraph(P), [0, 0, 0]).value == 6


def test_flat_face_hits_cap():
    dom = Intersection([Ball([0.5, 0], 1), HalfSpace([1, 0])])
    res = line_type(dom, [0, 0.1j], cap=16)
    assert res.value is None and res.label == ">= 16"
    assert res.to_json()["line_type"] == ">= 16"


def test_tangent_basis_is_complex_tangent():
    x = np.array([0.6, 0.8j])
    B = complex_tangent_basis(BALL, x)
    assert B.shape == (2, 1)
    assert abs(np.vdot(x, B[:, 0])) < 1e-8


def test_line_type_rejects_interior_point():
    with pytest.raises(PreconditionError):
        line_type(BALL, [0.5, 0])


def test_ball_is_two_convex():
    rep = m_convexity_constant(BALL, 2, R=2, samples=10_000, seed=0)
    assert rep.C_est <= 2
    assert not rep.escapes
    assert rep.samples > 9000 and rep.seed == 0


def test_ball_is_not_one_convex():
    rep = m_convexity_constant(BALL, 1, R=2, samples=2000, seed=0)
    assert rep.escapes
    ratios = [r["max_ratio"] for r in rep.per_layer]
    # tangential chords: sqrt(2 delta - delta^2) / delta grows like delta^{-1/2}
    k = [r["k"] for r in rep.per_layer]
    slope = np.polyfit(k, np.log2(ratios), 1)[0]
    assert slope == pytest.approx(0.5, abs=0.1)


def test_m_convexity_rejects_small_m():
    with pytest.raises(PreconditionError):
        m_convexity_constant(BALL, 0.5)
