import pytest
from gmpy2 import mpq
from hypothesis import given, strategies as st

from crystal_lab import fock_oracle as fo
from crystal_lab import models as m
from crystal_lab.exactnum import DomainError, QPoly, USeries
from crystal_lab.partitions import Partition, enumerate_partitions


def test_phi_examples():
    assert m.phi(1, (), 0).is_zero()
    # q - 1
    assert m.phi(1, (1,), 0).terms == {0: -1, 2: 1}
    assert m.phi(1, (1,), 0, q="1/4") == mpq(-3, 4)
    # q (1 - q^s)/(1 - q) at s = 2 is q + q^2
    assert m.phi(1, (), 2).terms == {2: 1, 4: 1}


def test_phi_domain():
    with pytest.raises(DomainError):
        m.phi(0, (1,), 0)
    with pytest.raises(ZeroDivisionError):
        m.phi(2, (1,), 1, q=-1)


@given(st.sampled_from(enumerate_partitions(4)), st.integers(-2, 2))
def test_w0_matches_fock(lam, s):
    w = fo.ModeWindow.symmetric(10)
    assert m.w0_eigenvalue(lam, s) == fo.w0_value(fo.state_of(lam, s, w), w)
    assert m.l0_eigenvalue(lam, s) == fo.l0_value(fo.state_of(lam, s, w), w)


def test_macmahon_two_ways():
    z = m.z_plain(12)
    assert [z.coefficient(2 * n) for n in range(6)] == m.z_brute(5) == [1, 1, 3, 6, 13, 24]


def test_schur_sum_saturates():
    z = m.z_schur(3, 8)
    assert [z.coefficient(2 * n) for n in range(4)] == [1, 1, 3, 6]


def test_z_q_first_coefficient():
    # q/(1-q)^2 = sum n q^n
    c = m.z_q(2, 12).coefficient(1)
    assert [c.coefficient(2 * n) for n in range(6)] == [0, 1, 2, 3, 4, 5]
    assert (m.zprime_q(2, 12).coefficient(1) - c).is_zero()


def test_z_routes():
    assert m.verify_z_routes(4, 14)["status"] == "pass"


def test_deformed_at_zero_time_is_undeformed():
    times = m.Times(kmax=1, kbar=0, degree=1)
    z = m.z_deformed("ordinary", 0, 3, times, 10)
    const = z.value.constant_term()
    ref = m.z_q(3, 10)
    for d in range(4):
        assert (const.coefficient(d) - ref.coefficient(d)).is_zero()


def test_modified_deformed_at_zero_time():
    times = m.Times(kmax=1, kbar=1, degree=1)
    z = m.z_deformed("modified", 0, 3, times, 10)
    ref = m.zprime_q(3, 10)
    for d in range(4):
        assert (z.value.constant_term().coefficient(d) - ref.coefficient(d)).is_zero()


def test_first_order_in_t1_unrolls_definition():
    times = m.Times(kmax=1, kbar=0, degree=1)
    z = m.z_deformed("ordinary", 0, 3, times, 10)
    lin = z.value.coefficient((1,))
    from crystal_lab.partitions import schur_principal
    for d in range(4):
        acc = USeries.zero(10)
        for lam in enumerate_partitions(d):
            if lam.size == d:
                s = schur_principal(lam, 10)
                acc = acc + s * s * m.phi(1, lam, 0)
        assert (lin.coefficient(d) - acc).is_zero()


def test_tau_with_no_intermediate_states():
    t = m.tau("2D", 0, 0, m.Times(1, 1, 1), 8)
    assert t.truncation["N"] == 0
    c = t.value.constant_term()
    assert c.coefficient(0).coefficient(0) == 1


@pytest.mark.parametrize("s", [-1, 0, 1, 2])
def test_crystal_as_one_d_tau_small(s):
    r = m.verify_theorem1(s, N=4, times=m.Times(2, 0, 1), cutoff=10)
    assert r["status"] == "pass", r["residual"]


@pytest.mark.parametrize("s", [-1, 0, 1])
def test_modified_crystal_as_two_d_tau_small(s):
    r = m.verify_theorem2(s, N=4, times=m.Times(1, 1, 2), cutoff=10)
    assert r["status"] == "pass", r["residual"]


def test_tau_identities_fail_without_sign_flip(monkeypatch):
    monkeypatch.setattr(m, "_iota", lambda x, kmax: x)
    assert m.verify_theorem1(0, N=4, times=m.Times(1, 0, 1), cutoff=10)["status"] == "fail"
    assert m.verify_theorem2(0, N=4, times=m.Times(1, 1, 1), cutoff=10)["status"] == "fail"


def test_increasing_N_keeps_saturated_coefficients():
    times = m.Times(1, 0, 1)
    a = m.z_deformed("ordinary", 0, 3, times, 8).value
    b = m.z_deformed("ordinary", 0, 5, times, 8).value
    for mono in a.terms:
        for d in range(4):
            assert (a.coefficient(mono).coefficient(d) - b.coefficient(mono).coefficient(d)).is_zero()


def _by_q_degree(x: USeries, qcut: int) -> QPoly:
    # Fock values are u-series with Laurent-in-Q coefficients
    out: dict = {}
    for e, c in x.items:
        for k, v in c.to_dict().items():
            out.setdefault(k, {})[e] = v
    return QPoly({k: USeries(v, x.cutoff) for k, v in out.items()}, qcut)


@pytest.mark.parametrize("variant", ["g", "g'"])
@pytest.mark.parametrize("s", [0, -1])
def test_matrix_elements_against_fock(variant, s):
    # The Fock side loses orders to the outer q^(W0/2), so it runs with a margin
    cutoff, N = 10, 4
    w = fo.ModeWindow.symmetric(14)
    qcut = N + s * (s + 1) // 2 + 1
    nonzero = 0
    for mu in [(), (1,)]:
        v = fo.FockVector.basis(w, mu, s)
        out = fo.apply_g(v, cutoff + 4, "symbolic", variant=variant, inner_size=N, out_size=2)
        for lam in [(), (1,), (2,), (1, 1)]:
            ref = m.g_matrix_element(variant, lam, mu, s, N, cutoff)
            c = out.coefficient(lam, s)
            if not isinstance(c, USeries):
                c = USeries({}, cutoff + 4)
            got = _by_q_degree(c.truncate(cutoff), qcut)
            for d in range(qcut):
                assert (got.coefficient(d) - ref.coefficient(d)).truncate(cutoff).is_zero(), (lam, mu, d)
                nonzero += not ref.coefficient(d).truncate(cutoff).is_zero()
    assert nonzero > 10
