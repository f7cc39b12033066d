import pytest
from gmpy2 import mpq

from crystal_lab import operator_matrices as om
from crystal_lab.exactnum import USeries

SPEC = om.SymbolicPrincipal(12, "symbolic")


def _is_identity_on_core(m):
    ident = om.make_basic("identity", m.lo, m.hi, m.spec)
    return om.core_residual(m, ident) == {}


@pytest.mark.parametrize("kind,z", [("G+", mpq(1, 3)), ("G-", mpq(2, 5))])
def test_single_variable_vertex_inverse_pair(kind, z):
    spec = om.NumericPrincipal("1/4", "1/3")
    lo, hi = -6, 6
    g = om.make_vertex(kind, z, lo, hi, spec)
    direction = 1 if kind.endswith("+") else -1
    lin = om.make_basic("identity", lo, hi, spec) - om.make_basic("shift", lo, hi, spec, k=direction).scale(z)
    prod = om.compose(g, lin)
    out = {(i, j): prod.entry(i, j) for i in range(lo, hi + 1) for j in range(lo, hi + 1)}
    # exact away from the edge where the truncated geometric series is cut
    for (i, j), x in out.items():
        inside = (direction == 1 and j < hi) or (direction == -1 and j > lo)
        if inside:
            assert x == (1 if i == j else 0)


def test_primed_vertex_is_one_plus_z_shift():
    spec = om.NumericPrincipal("1/4", "1/3")
    g = om.make_vertex("G'+", mpq(1, 2), -3, 3, spec)
    assert g.entry(0, 1) == mpq(1, 2) and g.entry(0, 2) == 0 and g.entry(0, 0) == 1


@pytest.mark.parametrize("kind", om.VERTEX_KINDS)
def test_principal_vertex_times_inverse(kind):
    a = om.make_vertex(kind, "principal", -8, 8, SPEC)
    b = om.make_vertex(kind, "principal", -8, 8, SPEC, inverse=True)
    assert _is_identity_on_core(om.compose(a, b))


def test_principal_vertex_is_toeplitz_and_triangular():
    g = om.make_vertex("G+", "principal", -6, 6, SPEC)
    prof = g.band_profile()
    assert prof.lower == 0
    assert (g.entry(0, 2) - g.entry(-3, -1)).is_zero()


def test_closed_form_matches_factor_product():
    lo, hi = -6, 6
    closed = om.make_vertex("G-", "principal", lo, hi, SPEC)
    prod = om.vertex_from_factors("G-", lo, hi, SPEC, factors=12)
    assert om.core_residual(closed, prod) == {}


@pytest.mark.parametrize("k", [1, 2])
def test_matrix_shift_symmetry(k):
    spec = om.SymbolicPrincipal(14, "symbolic")
    assert om.verify_matrix_shift_symmetry(k, -14, 14, spec)["status"] == "pass"


def test_matrix_shift_symmetry_negative_control():
    spec = om.SymbolicPrincipal(14, "symbolic")
    r = om.verify_matrix_shift_symmetry(1, -14, 14, spec, omit_gamma_minus=True, primed=False)
    assert r["status"] == "fail"


def test_one_d_relation_forms():
    spec = om.SymbolicPrincipal(10, "1/3")
    assert om.verify_one_d_matrix(1, -12, 12, spec, form="inverse")["status"] == "pass"
    assert om.verify_one_d_matrix(1, -12, 12, spec, form="literal")["status"] == "fail"


def test_U_window_stability():
    spec = om.SymbolicPrincipal(10, "symbolic")
    a = om.matrix_of_g("g'", -8, 8, spec)
    b = om.matrix_of_g("g'", -12, 12, spec).restrict(-8, 8)
    core = a.core
    assert len(core) > 0
    assert om.core_residual(a, b, core=core) == {}


def test_U_corner_entry_leading_term():
    U = om.matrix_of_g("g'", -8, 8, om.SymbolicPrincipal(8, "symbolic"))
    x = U.entry(0, 0)
    assert isinstance(x, USeries)
    assert x.coefficient(0).to_dict().get(0) == 1


def test_frames_are_relabelling():
    m = om.make_vertex("G+", "principal", -5, 5, SPEC)
    f = m.conjugate_q_delta_sq(1)
    back = f.in_frame(0)
    assert (back.entry(1, 3) - f.entry(1, 3)).is_zero()


def test_empty_core_raises():
    a = om.make_basic("identity", -2, 2, SPEC).with_guard(3)
    with pytest.raises(om.EmptyTrustedCore):
        om.core_residual(a, a)


def test_window_mismatch_raises():
    with pytest.raises(om.WindowMismatch):
        om.compose(om.make_basic("identity", -2, 2, SPEC), om.make_basic("identity", -3, 3, SPEC))


def test_dump_shape():
    d = om.dump(om.make_basic("shift", -2, 2, SPEC))
    assert d["lo"] == -2 and d["hi"] == 2 and len(d["entries"]) == 5
    assert d["entries"][0][1] == "1"


def test_modular_spec_reduces_rationals():
    spec = om.ModularPrincipal("1/4", "1/3", p=1000003)
    assert int(spec.scalar(mpq(1, 2)) * 2) == 1
    assert spec.describe()["mode"] == "modular"
    with pytest.raises(ZeroDivisionError):
        om.ModularPrincipal("1/4", "1/3", p=3).scalar(mpq(1, 3))
