import pytest
from gmpy2 import mpq

from crystal_lab import fock_oracle as fo
from crystal_lab.models import phi
from crystal_lab.partitions import Partition, enumerate_partitions, schur_principal


def test_window_validation():
    with pytest.raises(ValueError):
        fo.ModeWindow(0, 3)


@pytest.mark.parametrize("lam,s", [((), 0), ((2, 1), 0), ((3,), -2), ((1, 1), 2)])
def test_state_labels_roundtrip(lam, s):
    w = fo.ModeWindow.symmetric(8)
    mask = fo.state_of(lam, s, w)
    assert fo.partition_of(mask, w) == (Partition(lam), s)
    assert fo.charge_of(mask, w) == s


def test_energy_eigenvalues():
    w = fo.ModeWindow.symmetric(8)
    mask = fo.state_of((2, 1), 1, w)
    assert fo.l0_value(mask, w) == 3 + 1
    # vacuum of charge s carries 1 + 4 + ... + s^2
    assert fo.w0_value(fo.state_of((), 2, w), w) == 5
    assert fo.w0_value(fo.state_of((), -1, w), w) == 0


def test_anticommutators():
    assert fo.verify_anticommutators(fo.ModeWindow.symmetric(4))["status"] == "pass"


@pytest.mark.parametrize("k", [1, 2])
def test_current_commutator_has_central_term(k):
    assert fo.verify_central_term(k, fo.ModeWindow.symmetric(8))["status"] == "pass"


def test_h_eigenvalues_match_potential():
    r = fo.verify_h_eigenvalues(phi, max_size=3, s_range=range(-1, 2))
    assert r["status"] == "pass"


def test_h_eigenvalue_negative_control():
    r = fo.verify_h_eigenvalues(lambda k, lam, s: phi(k, lam, s) + 1, max_size=2, s_range=range(0, 1))
    assert r["status"] == "fail"


def test_vertex_elements():
    assert fo.verify_vertex_elements(3, 14)["status"] == "pass"


@pytest.mark.parametrize("lam", enumerate_partitions(3))
def test_vacuum_row_is_principal_schur(lam):
    w = fo.ModeWindow.symmetric(16)
    v = fo.vertex_matrix_element("G+", (), lam, 0, w, 12)
    assert (v - schur_principal(lam, 12)).is_zero()


def test_shift_symmetry_k1():
    r = fo.verify_shift_symmetries(1, fo.ModeWindow.symmetric(10), [((), 0), ((1,), 0)], cutoff=14)
    assert r["status"] == "pass"
    assert r["stable_under_margin"]


def test_shift_symmetry_primed_k2_charge_one():
    r = fo.verify_shift_symmetries(2, fo.ModeWindow.symmetric(10), [((), 1)], cutoff=12, primed=True)
    assert r["status"] == "pass"


def test_shift_symmetry_negative_control():
    r = fo.verify_shift_symmetries(1, fo.ModeWindow.symmetric(10), [((), 0)], cutoff=12, primed=False,
                                   omit_gamma_minus=True)
    assert r["status"] == "fail"


def test_one_d_symmetry_and_control():
    w = fo.ModeWindow.symmetric(12)
    assert fo.verify_1d_symmetry(1, w, cutoff=10)["status"] == "pass"
    assert fo.verify_1d_symmetry(1, w, cutoff=10, use_g=False)["status"] == "fail"


def test_vectors_are_linear():
    w = fo.ModeWindow.symmetric(6)
    a = fo.FockVector.basis(w, (1,), 0)
    b = fo.FockVector.basis(w, (2,), 0)
    assert (a + b - a - b).is_zero()
    assert a.scale(mpq(3)).coefficient((1,), 0) == 3
