"""Ring, calculus and evaluation checks for the exact polynomial scalars."""

from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from tubejet.polyfield import PolyScalar, QQi

from conftest import rand_poly, rng


def x(i, dim=2, exact=True):
    return PolyScalar.variable(dim, i, exact=exact)


def const(c, dim=2, exact=True):
    return PolyScalar.const(dim, c, exact=exact)


def test_additive_inverse_is_empty():
    p = x(0) + (-x(0))
    assert p.is_zero()
    assert p.terms == {}


def test_product_of_variables():
    p = x(0) * x(1)
    assert p.terms == {(1, 1): QQi(1)}


def test_binomial_square():
    p = (x(0) + const(1)) * (x(0) + const(1))
    assert p == PolyScalar(2, {(2, 0): QQi(1), (1, 0): QQi(2), (0, 0): QQi(1)})


def test_partial_derivatives():
    p = x(0) * x(0) * x(1)
    assert p.partial(0) == PolyScalar(2, {(1, 1): QQi(2)})
    assert p.partial(1) == PolyScalar(2, {(2, 0): QQi(1)})
    assert const(5).partial(1).is_zero()


def test_partial_index_out_of_range():
    with pytest.raises(IndexError):
        x(0).partial(2)


def test_dimension_mismatch_rejected():
    with pytest.raises(ValueError):
        x(0, dim=2) + x(0, dim=3)


def test_evaluate():
    p = x(0) * x(0) * x(1)
    assert p.evaluate((2, 3)) == 12
    assert PolyScalar.zero(2).evaluate((1.5, -7)) == 0
    q = x(0) + x(1)
    assert q.evaluate((1, 1j)) == 1 + 1j


def test_exact_evaluation_stays_exact():
    p = x(0) * x(1) + const(Fraction(1, 3))
    val = p.evaluate((Fraction(1, 2), Fraction(1, 5)))
    assert isinstance(val, QQi)
    assert val == QQi(Fraction(1, 10) + Fraction(1, 3))


small = st.integers(min_value=-4, max_value=4)


@st.composite
def polys(draw, dim=2):
    n = draw(st.integers(min_value=0, max_value=4))
    terms = {}
    for _ in range(n):
        exp = tuple(draw(st.integers(min_value=0, max_value=3))
                    for _ in range(dim))
        terms[exp] = QQi(Fraction(draw(small), draw(st.integers(1, 3))),
                         Fraction(draw(small), draw(st.integers(1, 3))))
    return PolyScalar(dim, terms)


@settings(max_examples=60, deadline=None)
@given(polys(), polys(), st.integers(min_value=0, max_value=1))
def test_leibniz_rule(f, g, i):
    assert (f * g).partial(i) == f.partial(i) * g + f * g.partial(i)


@settings(max_examples=60, deadline=None)
@given(polys(), polys(), st.integers(min_value=0, max_value=1))
def test_differentiation_is_linear(f, g, i):
    assert (f + g).partial(i) == f.partial(i) + g.partial(i)
    assert f.scale(QQi(3, -2)).partial(i) == f.partial(i).scale(QQi(3, -2))


@settings(max_examples=60, deadline=None)
@given(polys())
def test_partials_commute(f):
    assert f.partial(0).partial(1) == f.partial(1).partial(0)


def test_derivative_matches_finite_difference():
    r = rng(7)
    h = 1e-4
    for _ in range(5):
        f = rand_poly(r, 3, max_degree=3, n_terms=4, exact=False)
        pt = [r.uniform(-1, 1) for _ in range(3)]
        for i in range(3):
            up = list(pt); up[i] += h
            dn = list(pt); dn[i] -= h
            fd = (f.evaluate(up) - f.evaluate(dn)) / (2 * h)
            assert abs(fd - f.partial(i).evaluate(pt)) < 1e-6


def test_float_canonicalization_drops_tiny_terms():
    p = PolyScalar(2, {(1, 0): 1.0 + 0j, (0, 1): 1e-20 + 0j})
    assert p.terms == {(1, 0): 1.0 + 0j}


def test_truncate_and_degree():
    p = (x(0) + const(1)) * (x(0) + const(1)) * x(1)
    assert p.degree() == 3
    assert p.truncate(2).degree() == 2
    assert PolyScalar.zero(2).degree() == -1


def test_real_imag_split():
    p = x(0).scale(QQi(2, 3))
    assert p.real_part() == x(0).scale(2)
    assert p.imag_part() == x(0).scale(3)


def test_extend_embeds_variables():
    p = x(0) * x(1)
    q = p.extend(4, offset=2)
    assert q.terms == {(0, 0, 1, 1): QQi(1)}


def test_qqi_arithmetic():
    a = QQi(1, 2)
    b = QQi(Fraction(1, 3), -1)
    assert a * b == QQi(Fraction(1, 3) + 2, Fraction(2, 3) - 1)
    assert (a / a) == QQi(1)
    assert complex(QQi(1, -1)) == 1 - 1j
    assert abs(QQi(3, 4)) == 5.0
