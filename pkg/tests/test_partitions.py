import pytest
from hypothesis import given, strategies as st

from crystal_lab import partitions as P
from crystal_lab.exactnum import USeries


def test_partition_basics():
    lam = P.Partition((3, 1))
    assert lam.size == 4
    assert lam.conjugate() == P.Partition((2, 1, 1))
    with pytest.raises(ValueError):
        P.Partition((1, 2))


def test_plane_partition_validation():
    with pytest.raises(ValueError):
        P.PlanePartition([[1, 2]])
    with pytest.raises(ValueError):
        P.PlanePartition([[1], [2]])
    assert P.PlanePartition([[2, 0], [0]]).rows == ((2,),)


def test_counts():
    sizes = [pi.size for pi in P.enumerate_plane_partitions(6)]
    assert [sizes.count(n) for n in range(7)] == [1, 1, 3, 6, 13, 24, 48]


def test_worked_slicing_example():
    pi = P.PlanePartition([[3, 2, 2], [3, 2, 1], [1, 1, 1]])
    lam, T, Tp = P.slice(pi)
    assert lam == (3, 2, 1)
    assert P.diagonal_slice(pi, 1) == (2, 1)
    assert P.diagonal_slice(pi, 2) == (2,)
    assert P.diagonal_slice(pi, -1) == (3, 1)
    assert P.diagonal_slice(pi, -2) == (1,)
    assert P.unslice((lam, T, Tp)) == pi


def test_unslice_rejects_bad_tableau():
    lam = P.Partition((2,))
    bad = P.SSTableau(lam, [[1, 2]])
    with pytest.raises(P.InvalidTriple):
        P.unslice(P.SliceTriple(lam, bad, bad))


@given(st.sampled_from(P.enumerate_plane_partitions(7)))
def test_weight_split_matches_size(pi):
    uT, uTp = P.weight_split(pi)
    assert uT + uTp == 2 * pi.size


def test_bijection_exhaustive():
    r = P.verify_bijection(8)
    assert r["status"] == "pass" and r["checked"] == 342


def test_schur_single_box():
    s = P.schur_principal(P.Partition((1,)), 12)
    # q^(1/2) / (1 - q)
    assert [s.coefficient(e) for e in range(12)] == [0, 1, 0, 1, 0, 1, 0, 1, 0, 1, 0, 1]


def test_schur_routes():
    assert P.verify_schur_routes(6, 30)["status"] == "pass"


@given(st.sampled_from(P.enumerate_partitions(5)))
def test_hook_form_equals_tableaux(lam):
    assert (P.schur_principal(lam, 24) - P.schur_tableau_sum(lam, 24)).is_zero()


def test_skew_with_empty_inner_is_schur():
    lam = P.Partition((2, 1))
    assert (P.skew_schur_principal(lam, P.Partition(()), 20) - P.schur_principal(lam, 20)).is_zero()


def test_skew_dual_is_conjugate_skew():
    lam, mu = P.Partition((3, 1)), P.Partition((1,))
    d = P.skew_schur_principal_dual(lam, mu, 20) - P.skew_schur_principal(lam.conjugate(), mu.conjugate(), 20)
    assert d.is_zero()


def test_skew_outside_containment_vanishes():
    assert P.skew_schur_principal(P.Partition((1,)), P.Partition((2,)), 10).is_zero()


@pytest.mark.parametrize("kind", ["same", "dual"])
def test_cauchy(kind):
    assert P.verify_cauchy(kind, 8)["status"] == "pass"
