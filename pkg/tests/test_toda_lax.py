import random

import pytest
from gmpy2 import mpq

from crystal_lab import toda_lax as tl
from crystal_lab.operator_matrices import (ModularPrincipal, NumericPrincipal, SymbolicPrincipal, WindowMatrix,
                                           make_basic)

SYM = SymbolicPrincipal(12, "symbolic")


def test_scalar_inverse():
    assert tl.scalar_inverse(mpq(2, 3)) == mpq(3, 2)
    with pytest.raises(ZeroDivisionError):
        tl.scalar_inverse(mpq(0))


def test_triangular_inverses():
    spec = NumericPrincipal()
    L = WindowMatrix.from_function(-3, 3, spec, lambda i, j: mpq(1) if i == j else mpq(i + 2 * j, 7) if j < i
                                   else mpq(0))
    Li = tl.unit_lower_inverse(L)
    prod = L @ Li
    assert all(prod.entry(i, j) == (1 if i == j else 0) for i in range(-3, 4) for j in range(-3, 4))


def test_zero_pivot():
    spec = NumericPrincipal()
    A = WindowMatrix.from_function(-1, 1, spec, lambda i, j: mpq(1))
    with pytest.raises(tl.ZeroPivot):
        tl.lu_factorize(A)


def test_explicit_factorization():
    assert tl.verify_explicit_factorization(-12, 12, SYM)["status"] == "pass"


def test_lu_reproduces_closed_form():
    assert tl.verify_lu_reproduces(-12, 12, SYM)["status"] == "pass"


def test_factor_shapes():
    p = tl.explicit_initial_factorization(-6, 6, SYM)
    assert tl.is_unit_lower(p.W) and tl.is_upper_nonzero_diag(p.Wbar)


def test_initial_lax_identities():
    assert tl.verify_initial_lax(-12, 12, SYM)["status"] == "pass"


def test_initial_fit_values():
    r = tl.verify_initial_al(-12, 12, SymbolicPrincipal(12, "1/3"))
    assert r["status"] == "pass"


def test_initial_fit_numeric():
    assert tl.verify_initial_al(-10, 10, NumericPrincipal("1/4", "1/3"))["status"] == "pass"


def _shift(k, spec, lo=-8, hi=8):
    return make_basic("shift", lo, hi, spec, k=k)


def test_al_fit_free_lattice():
    spec = NumericPrincipal()
    lax = tl.LaxPair(_shift(1, spec), _shift(-1, spec).scale(mpq(-1)))
    fit = tl.al_fit(lax, range(-6, 7))
    assert fit.ok
    assert all(v == 0 for v in fit.b.values()) and all(v == 0 for v in fit.c.values())


def test_al_fit_free_lattice_wrong_sign():
    spec = NumericPrincipal()
    lax = tl.LaxPair(_shift(1, spec), _shift(-1, spec))
    assert not tl.al_fit(lax, range(-6, 7)).ok


def test_al_fit_rejects_generic_lax_matrix():
    spec = NumericPrincipal()
    rng = random.Random(7)

    def f(i, j):
        if j == i + 1:
            return mpq(1)
        if j <= i:
            return mpq(rng.randint(-5, 5), rng.randint(1, 5))
        return mpq(0)
    L = WindowMatrix.from_function(-8, 8, spec, f)
    fit = tl.al_fit(tl.LaxPair(L, _shift(-1, spec).scale(mpq(-1))), range(-6, 7))
    assert not fit.ok


def test_flow_at_zero_time_keeps_initial_fit():
    grid = [({1: mpq(0)}, {1: mpq(0)})]
    r = tl.verify_theorem3(grid, M=10, margin=3, stability_step=2)
    assert r["status"] == "fail"  # a single point cannot show t-dependence
    p = r["points"][0]
    assert p["residual"] == "0" and p["window_drift"] == "0"
    assert p["b"]["0"] == "1"


def test_modular_run_matches_rational_run():
    grid = [({1: mpq(0)}, {1: mpq(0)}), ({1: mpq(1, 8)}, {1: mpq(0)})]
    a = tl.verify_theorem3(grid, M=9, margin=3, stability_step=2)
    b = tl.verify_theorem3(grid, M=9, margin=3, stability_step=2, arithmetic="modular")
    spec = ModularPrincipal()
    for pa, pb in zip(a["points"], b["points"]):
        for key in ("b", "c"):
            assert {s: str(spec.scalar(mpq(v))) for s, v in pa[key].items()} == pb[key]
        ra, rb = pa["residual"], pb["residual"]
        assert (ra == "0") == (rb == "0")
        if ra != "0":
            assert ra["mismatches"] == rb["mismatches"]


def test_rational_flow_breaks_quotient_form_on_finite_window():
    grid = [({1: mpq(1, 8)}, {1: mpq(0)})]
    r = tl.verify_theorem3(grid, M=9, margin=3, stability_step=2, arithmetic="modular")
    assert r["points"][0]["residual"] != "0"


def test_regrouped_formal_flow_persists():
    r = tl.verify_theorem3_formal(M=8, cutoff=8, degree=1, stability_step=4)
    assert r["status"] == "pass", r["residual"]


def test_direct_formal_flow_fails():
    r = tl.verify_theorem3_formal(M=8, cutoff=8, degree=1, stability_step=4, route="direct")
    assert r["status"] == "fail"
