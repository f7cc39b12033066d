import pytest
from gmpy2 import mpq
from hypothesis import given, strategies as st

from crystal_lab.exactnum import (DomainError, LaurentQ, QPoly, TPoly, USeries, ZeroLeadingTerm,
                                  exp_coefficients, macmahon, product_truncated, rat, rat_str,
                                  scalar_is_zero, series_exp, series_inv, series_log, tpoly_exp,
                                  triple_product_check)

small = st.integers(-6, 6)
series = st.dictionaries(st.integers(0, 8), small, max_size=6).map(lambda d: USeries(d, 10))
unit_series = st.dictionaries(st.integers(1, 8), small, max_size=5).map(
    lambda d: USeries({0: 1, **d}, 10))


def test_rat_parsing():
    assert rat("3/4") == mpq(3, 4)
    assert rat(" 5 ") == 5
    assert rat_str(mpq(-2, 6)) == "-1/3"
    with pytest.raises(TypeError):
        rat(0.5)


def test_geometric_inverse():
    inv = series_inv(USeries({0: 1, 1: -1}), 8)
    assert [inv.coefficient(e) for e in range(8)] == [1] * 8
    assert inv.cutoff == 8


def test_inverse_of_zero_raises():
    with pytest.raises(ZeroLeadingTerm):
        series_inv(USeries.zero(5))


def test_cutoff_is_reported_not_guessed():
    s = USeries({0: 1}, 4)
    with pytest.raises(DomainError):
        s.coefficient(4)


def test_negative_leading_exponent_costs_precision():
    # u^-2 (1 + u + ...) known mod u^6 gives its inverse mod u^10
    a = USeries({-2: 1, -1: 1}, 6)
    assert series_inv(a).cutoff == 10


@given(unit_series)
def test_inverse_roundtrip(a):
    prod = a * series_inv(a)
    assert prod.equals_mod(USeries.one(), 10)


@given(series, series)
def test_multiplication_commutes(a, b):
    assert (a * b - b * a).is_zero()


@given(st.dictionaries(st.integers(1, 6), small, max_size=4).map(lambda d: USeries(d, 9)))
def test_log_inverts_exp(a):
    assert (series_log(series_exp(a)) - a).is_zero()


def test_exp_needs_positive_order():
    with pytest.raises(DomainError):
        series_exp(USeries({0: 1}, 5))


def test_laurent_q_monomials():
    x = LaurentQ.monomial(2, 3)
    assert (x * x.inverse()).to_dict() == {0: 1}
    assert LaurentQ.from_dict({-1: 1, 1: 1}).evaluate(mpq(2)) == mpq(5, 2)


def test_qpoly_cutoff():
    q = QPoly({0: USeries.one(10), 3: USeries.one(10)}, 2)
    assert q.coefficient(0).coefficient(0) == 1
    with pytest.raises(DomainError):
        q.coefficient(2)


def test_tpoly_degree_truncation():
    t = TPoly.variable(("t1",), "t1", 1, 2)
    cube = t * t * t
    assert cube.is_zero()
    e = tpoly_exp(t)
    assert e.coefficient((2,)) == mpq(1, 2)


def test_exp_coefficients_are_elementary_schur():
    # exp(t z) -> t^n / n!
    p = exp_coefficients({1: mpq(2)}, 4)
    assert p == [1, 2, 2, mpq(4, 3), mpq(2, 3)]
    assert exp_coefficients({1: mpq(2)}, 2, sign=-1) == [1, -2, 2]


def test_macmahon_coefficients():
    m = macmahon(22)
    assert [m.coefficient(2 * n) for n in range(11)] == [1, 1, 3, 6, 13, 24, 48, 86, 160, 282, 500]
    assert all(m.coefficient(2 * n + 1) == 0 for n in range(10))


def test_empty_product():
    assert product_truncated(iter([]), 1).coefficient(0) == 1


def test_triple_product():
    assert triple_product_check(40, 4)["status"] == "pass"


def test_scalar_zero_respects_truncation():
    assert scalar_is_zero(USeries({5: 1}, 5))
    assert not scalar_is_zero(USeries({4: 1}, 5))
