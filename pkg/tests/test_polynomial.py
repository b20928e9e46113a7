from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from kobalab.errors import PreconditionError
from kobalab.polynomial import (
    GaussianRational,
    HermitianPolynomial as H,
    check_adapted,
    degree_along,
    multitype,
    nondegenerate_check,
)


def p24():
    return H.abs_power(2, 0, 1) + H.abs_power(2, 1, 2)


def test_eval_by_hand():
    assert p24().eval(np.array([1, 1])) == pytest.approx(2.0)
    assert p24().exact_eval((1, 1)) == GaussianRational(Fraction(2))
    assert p24().eval(np.zeros(2)) == 0.0


def test_degree_along_examples():
    assert degree_along(H.abs_power(1, 0, 1), (1,)) == 2
    assert degree_along(p24(), (0, 1)) == 4
    assert degree_along(p24(), (1, 1)) == 4
    assert degree_along(p24(), (1, 0)) == 2


def test_hermitian_symmetry_enforced():
    with pytest.raises(ValueError):
        H(1, {((1,), (0,)): 1})
    P = H(1, {((1,), (0,)): GaussianRational(Fraction(0), Fraction(1)), ((0,), (1,)): GaussianRational(Fraction(0), Fraction(-1))})
    assert P.is_hermitian()
    assert np.isclose(P.eval(np.array([1j])), -2.0)


def test_json_roundtrip():
    P = p24() + H.norm_sq_linear([1, 1j])
    assert H.from_json(P.to_json()) == P


def test_multitype_examples():
    mt = multitype(H.abs_power(1, 0, 1))
    assert mt.weights == (2,) and mt.limit == H.abs_power(1, 0, 1)
    mt = multitype(H.abs_power(1, 0, 1) + H.abs_power(1, 0, 2))
    assert mt.weights == (4,) and mt.limit == H.abs_power(1, 0, 2)
    mt = multitype(p24())
    assert mt.weights == (2, 4) and mt.limit == p24()
    assert mt.levels == (2, 4) and mt.level_dims == (1, 2)


def test_multitype_rejects_nonconvex():
    # |z1|^2 + |z1|^2 |z2|^2 + |z2|^4 has negative curvature far from the origin
    P = H.abs_power(2, 0, 1) + H(2, {((1, 1), (1, 1)): 1}) + H.abs_power(2, 1, 2)
    with pytest.raises(PreconditionError, match="not convex"):
        multitype(P)


def test_multitype_rejects_unadapted_coordinates():
    # |z1|^2 + |z1 - z2|^4: both axes have degree 4 but (1, 1) has degree 2
    P = H.abs_power(2, 0, 1) + H.norm_sq_linear([1, -1]) ** 2
    with pytest.raises(PreconditionError, match="adapted"):
        multitype(P)


def test_multitype_drops_low_weight_cross_terms():
    # |z1 + z2|^2 + |z2|^4: the mixed terms z1 conj(z2) have weight 3/4 and vanish in the limit
    P = H.norm_sq_linear([1, 1]) + H.abs_power(2, 1, 2)
    mt = multitype(P)
    assert mt.weights == (2, 4)
    assert mt.limit == H.abs_power(2, 0, 1) + H.abs_power(2, 1, 2)


def test_multitype_rejects_constant_term_and_degenerate():
    with pytest.raises(PreconditionError):
        multitype(H(1, {((0,), (0,)): 1}) + H.abs_power(1, 0, 1))
    with pytest.raises(PreconditionError):
        multitype(H.abs_power(2, 0, 1))


def test_nondegenerate_examples():
    assert nondegenerate_check(p24()).passed
    res = nondegenerate_check(H.abs_power(2, 0, 1))
    assert not res.passed
    a, v = res.counterexample
    assert not v[0] and v[1]
    res = nondegenerate_check(H.zero(1))
    assert not res.passed and res.counterexample[1][0]


def test_check_adapted_detects_misorder():
    assert check_adapted(p24(), (2, 4)) is None
    assert check_adapted(p24(), (4, 2)) is not None


SUITE = [
    H.abs_power(1, 0, 1),
    H.abs_power(1, 0, 1) + H.abs_power(1, 0, 2),
    p24(),
    H.abs_power(2, 0, 2) + H.abs_power(2, 1, 3),
    H.abs_power(3, 0, 1) + H.abs_power(3, 1, 2) + H.abs_power(3, 2, 3) + H.abs_power(3, 1, 1),
]


@pytest.mark.parametrize("P", SUITE, ids=lambda P: repr(P)[:40])
def test_limit_is_weighted_homogeneous_and_idempotent(P):
    mt = multitype(P)
    assert mt.limit.is_hermitian()
    assert all(P.weight(a, b, mt.weights) == 1 for a, b in mt.limit.terms)
    again = multitype(mt.limit)
    assert again.weights == mt.weights and again.limit == mt.limit


rational = st.fractions(min_value=-3, max_value=3, max_denominator=5)
gauss = st.builds(GaussianRational, rational, rational)


@given(st.lists(gauss, min_size=2, max_size=2), st.lists(gauss, min_size=2, max_size=2))
def test_degree_subadditive(v, w):
    P = p24() + H.abs_power(2, 0, 3)
    if not any(v) or not any(w) or not any(a + b for a, b in zip(v, w)):
        return
    s = tuple(a + b for a, b in zip(v, w))
    assert degree_along(P, s) <= max(degree_along(P, v), degree_along(P, w))


@given(st.lists(gauss, min_size=2, max_size=2), st.lists(gauss, min_size=2, max_size=2))
def test_restriction_is_hermitian_and_matches_eval(a, v):
    P = p24() + H.norm_sq_linear([1, GaussianRational(Fraction(1, 2), Fraction(1))])
    coeffs = P.restrict_to_line(v, a)
    for (j, k), c in coeffs.items():
        assert coeffs.get((k, j), GaussianRational()) == c.conj()
    zeta = 0.3 - 0.7j
    lhs = sum(complex(c) * zeta ** j * np.conj(zeta) ** k for (j, k), c in coeffs.items())
    z = np.array([complex(x) for x in a]) + zeta * np.array([complex(x) for x in v])
    assert abs(lhs - P.eval(z)) < 1e-9 * (1 + abs(lhs))
