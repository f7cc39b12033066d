"""Partition functions of the melting crystal models and their tau functions.

Q is kept formal: every Q-dependent value is a ``QPoly`` (Q-degree -> u-series).
Truncating the lambda-sum at |lambda| <= N is then exact for all Q-degrees up
to N + s(s+1)/2, since Q^{|lambda| + s(s+1)/2} pins |lambda|.  The same holds
for the intermediate sums in the tau functions, where Q^{L0} pins the size of
the middle partition.  The only remaining truncation is u-adic.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from functools import lru_cache
from itertools import permutations

from gmpy2 import mpq

from .exactnum import (DomainError, QPoly, TPoly, USeries, exp_coefficients, macmahon,
                       product_truncated, rat, scalar_is_zero, scalar_to_json, tpoly_exp)
from .partitions import (Partition, enumerate_partitions, enumerate_plane_partitions,
                         schur_principal, skew_schur_principal, skew_schur_principal_dual)
from .reports import make_report


# external potential --------------------------------------------------------

def _levels(lam: Partition, s: int):
    """Pairs (lambda_i + s - i + 1, s - i + 1) for the rows that differ from the vacuum."""
    return [(lam.part(i) + s - i + 1, s - i + 1) for i in range(1, lam.length + 1)]


def _geometric_tail(k: int, s: int) -> dict:
    """(1 - q^{ks}) q^k / (1 - q^k) as a finite Laurent polynomial {q-exponent: coeff}."""
    if s > 0:
        return {k * j: 1 for j in range(1, s + 1)}
    if s < 0:
        return {k * j: -1 for j in range(s + 1, 1)}
    return {}


def phi(k: int, lam, s: int, q=None):
    """Phi_k(lambda, s) as a finite Laurent polynomial in u = q^(1/2).

    With ``q`` a rational the value is returned as a rational instead.
    """
    if k == 0:
        raise DomainError("k must be nonzero")
    lam = Partition(lam)
    terms: dict = {}
    for a, b in _levels(lam, s):
        terms[k * a] = terms.get(k * a, 0) + 1
        terms[k * b] = terms.get(k * b, 0) - 1
    for e, c in _geometric_tail(k, s).items():
        terms[e] = terms.get(e, 0) + c
    if q is not None:
        q = rat(q)
        if q ** k == 1:
            raise ZeroDivisionError("1 - q^k vanishes")
        return sum((c * q ** e for e, c in terms.items()), mpq(0))
    return USeries({2 * e: c for e, c in terms.items() if c})


def w0_eigenvalue(lam, s: int) -> int:
    """sum_i [(lambda_i + s - i + 1)^2 - (-i + 1)^2], normal ordered at charge 0."""
    lam = Partition(lam)
    total = s * (s + 1) * (2 * s + 1) // 6
    for a, b in _levels(lam, s):
        total += a * a - b * b
    return total


def l0_eigenvalue(lam, s: int) -> int:
    return Partition(lam).size + s * (s + 1) // 2


# undeformed partition functions -------------------------------------------

def z_plain(cutoff: int) -> USeries:
    """MacMahon product in u, modulo u^cutoff."""
    return macmahon(cutoff)


def z_brute(max_n: int) -> list[int]:
    """Plane partition counts for sizes 0..max_n."""
    counts = [0] * (max_n + 1)
    for pi in enumerate_plane_partitions(max_n):
        counts[pi.size] += 1
    return counts


def z_schur(N: int, cutoff: int) -> USeries:
    """sum over |lambda| <= N of s_lambda(q^-rho)^2; saturated below u^(2N+2)."""
    acc = USeries.zero(cutoff)
    for lam in enumerate_partitions(N):
        a = schur_principal(lam, cutoff)
        acc = acc + a * a
    return acc


def z_q(qdeg: int, cutoff: int, route: str = "schur") -> QPoly:
    """Z(Q) through Q^qdeg: Schur sum, or the product over (1 - Q q^n)^-n."""
    if route == "schur":
        return _schur_pair_sum(qdeg, cutoff, conjugate=False)
    if route == "product":
        return product_truncated((((-1, 1), 2 * n, -n) for n in _count()), cutoff, qdeg_cutoff=qdeg + 1)
    raise ValueError("route must be schur or product")


def zprime_q(qdeg: int, cutoff: int, route: str = "schur") -> QPoly:
    """Z'(Q) through Q^qdeg: sum of s_lambda s_lambda^t, or the product over (1 + Q q^n)^n."""
    if route == "schur":
        return _schur_pair_sum(qdeg, cutoff, conjugate=True)
    if route == "product":
        return product_truncated((((1, 1), 2 * n, n) for n in _count()), cutoff, qdeg_cutoff=qdeg + 1)
    raise ValueError("route must be schur or product")


def _count():
    n = 1
    while True:
        yield n
        n += 1


def _schur_pair_sum(qdeg: int, cutoff: int, conjugate: bool) -> QPoly:
    coeffs: dict = {}
    for lam in enumerate_partitions(qdeg):
        a = schur_principal(lam, cutoff)
        b = schur_principal(lam.conjugate(), cutoff) if conjugate else a
        d = lam.size
        coeffs[d] = coeffs[d] + a * b if d in coeffs else a * b
    return QPoly({d: coeffs.get(d, USeries.zero(cutoff)) for d in range(qdeg + 1)}, qdeg + 1)


def verify_z_routes(qdeg: int = 6, cutoff: int = 20) -> dict:
    """Schur-sum and product routes for Z(Q) and Z'(Q), coefficientwise in Q."""
    t0 = time.perf_counter()
    res = {}
    for name, f in (("Z", z_q), ("Z'", zprime_q)):
        a, b = f(qdeg, cutoff, "schur"), f(qdeg, cutoff, "product")
        for d in range(qdeg + 1):
            diff = (a.coefficient(d) - b.coefficient(d)).truncate(cutoff)
            if not diff.is_zero():
                res[f"{name} Q^{d}"] = diff.to_json()
    return make_report("z_routes", {"qdeg": qdeg, "u_cutoff": cutoff}, "0" if not res else res,
                       seconds=round(time.perf_counter() - t0, 3))


# time variables --------------------------------------------------------------

@dataclass(frozen=True)
class Times:
    """Names and degree cutoff of the formal time variables.

    ``t`` lists the active t_k (k = 1..len), ``tbar`` the active tbar_k.
    """

    kmax: int = 2
    kbar: int = 0
    degree: int = 2

    @property
    def names(self) -> tuple:
        return tuple(f"t{k}" for k in range(1, self.kmax + 1)) + \
            tuple(f"tb{k}" for k in range(1, self.kbar + 1))

    def var(self, name: str) -> TPoly:
        return TPoly.variable(self.names, name, mpq(1), self.degree)

    def const(self, c) -> TPoly:
        return TPoly.constant(self.names, c, self.degree)

    def t(self) -> dict:
        return {k: self.var(f"t{k}") for k in range(1, self.kmax + 1)}

    def tbar(self) -> dict:
        return {k: self.var(f"tb{k}") for k in range(1, self.kbar + 1)}

    @property
    def max_weight_t(self) -> int:
        return self.degree * self.kmax

    @property
    def max_weight_tbar(self) -> int:
        return self.degree * self.kbar

    def to_json(self) -> dict:
        return {"t": self.kmax, "tbar": self.kbar, "degree": self.degree}


def _coeffwise(x, f):
    """Apply f to the u-series inside a TPoly/QPoly/USeries value."""
    if isinstance(x, TPoly):
        return x.map_coeffs(lambda c: _coeffwise(c, f))
    if isinstance(x, QPoly):
        return QPoly({d: f(s) for d, s in x.coeffs.items()}, x.qdeg_cutoff)
    if isinstance(x, USeries):
        return f(x)
    return f(USeries({0: rat(x)}))


def _times_series(x: TPoly, s: USeries) -> TPoly:
    """TPoly with u-series (or rational) coefficients times a u-series."""
    return TPoly(x.vars, {m: _mul(c, s) for m, c in x.terms.items()}, x.degree_cutoff)


def _mul(c, s):
    if isinstance(c, (USeries, QPoly)):
        return c * s if isinstance(c, QPoly) else s * c
    return s.scale(rat(c))


def _with_q(x: TPoly, d: int, qcut: int) -> TPoly:
    """Attach Q^d to every coefficient of a TPoly with u-series coefficients."""
    return TPoly(x.vars, {m: QPoly({d: c}, qcut) for m, c in x.terms.items()}, x.degree_cutoff)


def schur_polynomial(lam, times: dict, vars_: tuple, degree: int) -> TPoly:
    """S_lambda in the times (p_k = k t_k) by Jacobi-Trudi over the h_n(t)."""
    lam = Partition(lam)
    one = TPoly.constant(vars_, mpq(1), degree)
    if not lam:
        return one
    n = lam.length
    h = exp_coefficients(times, lam[0] + n)

    def entry(i, j):
        m = lam[i] - i + j
        return h[m] if 0 <= m < len(h) else 0

    total = TPoly(vars_, {}, degree)
    for perm in permutations(range(n)):
        sign = 1
        for a in range(n):
            for b in range(a + 1, n):
                if perm[a] > perm[b]:
                    sign = -sign
        term = one
        for i in range(n):
            e = entry(i, perm[i])
            if scalar_is_zero(e):
                term = None
                break
            term = term * e
        if term is not None:
            total = total + term if sign > 0 else total - term
    return total


# deformed partition functions ----------------------------------------------------

@dataclass
class DeformedZ:
    s: int
    value: TPoly
    truncation: dict

    def to_json(self) -> dict:
        return {"s": self.s, "value": self.value.to_json(), "truncation": self.truncation}


def _potential(lam: Partition, s: int, times: Times) -> TPoly:
    acc = times.const(0)
    for k, tk in times.t().items():
        acc = acc + tk * phi(k, lam, s)
    for k, tk in times.tbar().items():
        acc = acc + tk * phi(-k, lam, s)
    return acc


def _min_ord(c) -> int:
    if isinstance(c, USeries):
        o = c.ord()
        return 0 if o is None else min(o, 0)
    return 0


def _lowest(x: TPoly) -> int:
    """Lowest u-order (capped at 0) over every series inside a TPoly of QPolys."""
    low = 0
    for c in x.terms.values():
        for ser in (c.coeffs.values() if isinstance(c, QPoly) else (c,)):
            low = min(low, _min_ord(ser))
    return low


def _qcut(N: int, s: int) -> int:
    return N + s * (s + 1) // 2 + 1


def z_deformed(variant: str, s: int, N: int, times: Times, cutoff: int) -> DeformedZ:
    """sum_{|lambda| <= N} w(lambda) Q^{|lambda| + s(s+1)/2} exp(Phi(lambda, s, t, tbar)).

    w = s_lambda^2 (ordinary) or s_lambda s_lambda^t (modified).  The weights
    are computed modulo u^cutoff and the result keeps per-entry cutoffs.
    """
    if variant not in ("ordinary", "modified"):
        raise ValueError("variant must be ordinary or modified")
    if variant == "ordinary" and times.kbar:
        raise ValueError("the ordinary model has no tbar flows")
    qcut = _qcut(N, s)
    total = TPoly(times.names, {}, times.degree)
    for lam in enumerate_partitions(N):
        ex = tpoly_exp(_potential(lam, s, times))
        work = cutoff - min(_min_ord(c) for c in ex.terms.values())
        a = schur_principal(lam, work)
        w = a * a if variant == "ordinary" else a * schur_principal(lam.conjugate(), work)
        total = total + _with_q(_times_series(ex, w), l0_eigenvalue(lam, s), qcut)
    return DeformedZ(s, total, {"N": N, "u_cutoff": cutoff, "exact_Q_degree": qcut - 1, **times.to_json()})


# tau functions ---------------------------------------------------------------------

@dataclass
class TauValue:
    s: int
    value: TPoly
    truncation: dict

    def to_json(self) -> dict:
        return {"s": self.s, "value": self.value.to_json(), "truncation": self.truncation}


def _partitions_up_to(n: int) -> list[Partition]:
    return enumerate_partitions(n)


def _supersets(alpha: Partition, N: int) -> list[Partition]:
    return [b for b in enumerate_partitions(N) if b.contains(alpha)]


@lru_cache(maxsize=None)
def _skew(lam: Partition, mu: Partition, cutoff: int) -> USeries:
    return skew_schur_principal(lam, mu, cutoff)


@lru_cache(maxsize=None)
def _skew_t(lam: Partition, mu: Partition, cutoff: int) -> USeries:
    """s_{lam^t / mu^t}(q^-rho)."""
    return skew_schur_principal_dual(lam, mu, cutoff)


def g_matrix_element(variant: str, lam, mu, s: int, N: int, cutoff: int) -> QPoly:
    """<lam, s| g |mu, s> (variant g) or <lam, s| g' |mu, s> by intermediate sums.

    g  = q^{W0/2} G-(q^-rho) G+(q^-rho) Q^{L0} G-(q^-rho) G+(q^-rho) q^{W0/2}
    g' = q^{W0/2} G-(q^-rho) G+(q^-rho) Q^{L0} G'-(q^-rho) G'+(q^-rho) q^{-W0/2}
    with <a|G-|b> = s_{a/b}, <a|G+|b> = s_{b/a} and the primed versions on
    conjugate partitions.  The middle partition runs over |beta| <= N.
    """
    lam, mu = Partition(lam), Partition(mu)
    qcut = _qcut(N, s)
    shift = w0_eigenvalue(lam, s) + (w0_eigenvalue(mu, s) if variant == "g" else -w0_eigenvalue(mu, s))
    work = cutoff - shift
    right = _skew if variant == "g" else _skew_t
    acc: dict = {}
    for alpha in enumerate_partitions(lam.size):
        if not lam.contains(alpha):
            continue
        left = _skew(lam, alpha, work)
        if left.is_zero():
            continue
        for beta in _supersets(alpha, N):
            mid = left * _skew(beta, alpha, work)
            if mid.is_zero():
                continue
            inner = USeries.zero(work)
            for gamma in enumerate_partitions(min(beta.size, mu.size)):
                if beta.contains(gamma) and mu.contains(gamma):
                    inner = inner + right(beta, gamma, work) * right(mu, gamma, work)
            d = l0_eigenvalue(beta, s)
            term = mid * inner
            acc[d] = acc[d] + term if d in acc else term
    return QPoly({d: x.shift(shift) for d, x in acc.items()}, qcut).truncate_u(cutoff)


def tau(variant: str, s: int, N: int, times: Times, cutoff: int) -> TauValue:
    """1D: <s| exp(sum t_k J_k) g |s>;  2D: <s| exp(sum t_k J_k) g' exp(-sum tbar_k J_-k) |s>.

    <s| exp(sum t_k J_k) = sum_lam S_lam(t) <lam, s| and
    exp(sum a_k J_-k) |s> = sum_mu S_mu(a) |mu, s>; only |lam| <= D kmax and
    |mu| <= D kbar contribute at time degree <= D.
    """
    if variant not in ("1D", "2D"):
        raise ValueError("variant must be 1D or 2D")
    if variant == "1D" and times.kbar:
        raise ValueError("the 1D tau function has no tbar flows")
    g = "g" if variant == "1D" else "g'"
    names, D = times.names, times.degree
    neg_tbar = {k: -v for k, v in times.tbar().items()}
    left = {lam: schur_polynomial(lam, times.t(), names, D) for lam in _partitions_up_to(times.max_weight_t)}
    right = {mu: schur_polynomial(mu, neg_tbar, names, D) for mu in _partitions_up_to(times.max_weight_tbar)}
    total = TPoly(names, {}, D)
    for lam, Sl in left.items():
        if scalar_is_zero(Sl):
            continue
        for mu, Sm in right.items():
            if scalar_is_zero(Sm):
                continue
            elem = g_matrix_element(g, lam, mu, s, N, cutoff)
            total = total + (Sl * Sm) * elem
    return TauValue(s, total, {"N": N, "u_cutoff": cutoff, "exact_Q_degree": _qcut(N, s) - 1,
                               **times.to_json()})


# Z versus tau ----------------------------------------------------------------------------

def _prefactor(times: Times, cutoff: int, modified: bool) -> TPoly:
    """exp(sum t_k q^k/(1-q^k)) or exp(sum (q^k t_k - tbar_k)/(1-q^k))."""
    x = times.const(0)
    for k, tk in times.t().items():
        x = x + tk * _geom(k, k, cutoff)
    if modified:
        for k, tk in times.tbar().items():
            x = x - tk * _geom(0, k, cutoff)
    return tpoly_exp(x)


def _geom(a: int, k: int, cutoff: int) -> USeries:
    """q^a / (1 - q^k) modulo u^cutoff."""
    return USeries({2 * (a + k * j): 1 for j in range(0, cutoff // (2 * k) + 1)}, cutoff)


def _iota(x: TPoly, kmax: int) -> TPoly:
    return x.substitute_signs({f"t{k}": -1 for k in range(1, kmax + 1) if k % 2})


def _compare(lhs: TPoly, rhs: TPoly, cutoff: int, qcut: int) -> tuple[dict, list]:
    """Per-monomial residuals modulo u^cutoff and Q^qcut, plus entries short of precision."""
    res, short = {}, []
    monos = set(lhs.terms) | set(rhs.terms)
    for m in sorted(monos):
        a, b = lhs.terms.get(m, QPoly({}, qcut)), rhs.terms.get(m, QPoly({}, qcut))
        diff = (a - b).truncate_q(qcut).truncate_u(cutoff)
        name = "*".join(f"{v}^{e}" for v, e in zip(lhs.vars, m) if e) or "1"
        for d, ser in diff.coeffs.items():
            if ser.cutoff is not None and ser.cutoff < cutoff:
                short.append(f"{name} Q^{d}")
        if not diff.is_zero():
            res[name] = diff.to_json()
    return res, short


def verify_theorem1(s: int, N: int = 6, times: Times | None = None, cutoff: int = 16) -> dict:
    """Z(s, t) = exp(sum t_k q^k/(1-q^k)) q^{-s(s+1)(2s+1)/6} tau(s, iota(t)).

    Both sides are TPoly with QPoly coefficients; compared exactly for
    Q-degrees <= N + s(s+1)/2 and modulo u^cutoff.
    """
    t0 = time.perf_counter()
    times = times or Times(kmax=2, kbar=0, degree=2)
    shift = -2 * (s * (s + 1) * (2 * s + 1) // 6)
    work = cutoff - min(shift, 0)
    lhs = z_deformed("ordinary", s, N, times, cutoff).value
    tv = tau("1D", s, N, times, work).value
    pre = _prefactor(times, work - _lowest(tv), modified=False)
    rhs = (pre * _iota(tv, times.kmax))
    rhs = _coeffwise(rhs, lambda c: c.shift(shift))
    qcut = _qcut(N, s)
    res, short = _compare(lhs, rhs, cutoff, qcut)
    residual = "0" if not res and not short else (res or {"insufficient_precision": short})
    return make_report("theorem1", {"s": s, "N": N, "u_cutoff": cutoff, **times.to_json()}, residual,
                       truncation={"exact_Q_degree": qcut - 1, "u_cutoff": cutoff, "work_cutoff": work},
                       seconds=round(time.perf_counter() - t0, 3))


def verify_theorem2(s: int, N: int = 6, times: Times | None = None, cutoff: int = 16) -> dict:
    """Z'(s, t, tbar) = exp(sum (q^k t_k - tbar_k)/(1-q^k)) tau'(s, iota(t), -tbar)."""
    t0 = time.perf_counter()
    times = times or Times(kmax=2, kbar=1, degree=2)
    work = cutoff
    lhs = z_deformed("modified", s, N, times, cutoff).value
    tv = tau("2D", s, N, times, cutoff).value
    tv = tv.substitute_signs({f"tb{k}": -1 for k in range(1, times.kbar + 1)})
    rhs = _prefactor(times, work - _lowest(tv), modified=True) * _iota(tv, times.kmax)
    qcut = _qcut(N, s)
    res, short = _compare(lhs, rhs, cutoff, qcut)
    residual = "0" if not res and not short else (res or {"insufficient_precision": short})
    return make_report("theorem2", {"s": s, "N": N, "u_cutoff": cutoff, **times.to_json()}, residual,
                       truncation={"exact_Q_degree": qcut - 1, "u_cutoff": cutoff, "work_cutoff": work},
                       seconds=round(time.perf_counter() - t0, 3))


def to_json(x):
    return scalar_to_json(x)
