"""Partitions, plane partitions, diagonal slicing and Schur specializations.

Tableaux follow the reversed convention used throughout this package: rows
weakly decrease to the right and columns strictly decrease downwards.  The
principal specialization is at ``x_i = q^(i-1/2) = u^(2i-1)``.
"""

from __future__ import annotations

from functools import lru_cache
from typing import Iterator, NamedTuple, Sequence

from gmpy2 import mpq

from .exactnum import QPoly, USeries, product_truncated, series_inv
from .reports import make_report, residual_payload


class InvalidTriple(ValueError):
    pass


class Partition(tuple):
    """Weakly decreasing tuple of positive integers."""

    def __new__(cls, parts: Sequence[int] = ()):
        parts = tuple(int(p) for p in parts if p)
        if any(p < 0 for p in parts):
            raise ValueError(f"negative part in {parts}")
        if any(parts[i] < parts[i + 1] for i in range(len(parts) - 1)):
            raise ValueError(f"parts must weakly decrease: {parts}")
        return super().__new__(cls, parts)

    @property
    def size(self) -> int:
        return sum(self)

    @property
    def length(self) -> int:
        return len(self)

    def conjugate(self) -> "Partition":
        if not self:
            return Partition()
        return Partition([sum(1 for p in self if p > j) for j in range(self[0])])

    def n(self) -> int:
        return sum(i * p for i, p in enumerate(self))

    def part(self, i: int) -> int:
        """lambda_i with 1-based i, 0 beyond the length."""
        return self[i - 1] if 1 <= i <= len(self) else 0

    def cells(self) -> Iterator[tuple[int, int]]:
        for i, p in enumerate(self):
            for j in range(p):
                yield i, j

    def hook(self, i: int, j: int) -> int:
        conj = self.conjugate()
        return self[i] - j + conj[j] - i - 1

    def contains(self, other: "Partition") -> bool:
        return len(other) <= len(self) and all(o <= s for o, s in zip(other, self))

    def __repr__(self):
        return f"Partition({list(self)})"


def enumerate_partitions(max_size: int) -> list[Partition]:
    """All partitions of size <= max_size, by size then reverse lexicographic."""
    out = []
    for n in range(max_size + 1):
        out.extend(partitions_of(n))
    return out


def partitions_of(n: int, largest: int | None = None) -> list[Partition]:
    if largest is None:
        largest = n
    return [Partition(p) for p in _parts(n, largest)]


@lru_cache(maxsize=None)
def _parts(n: int, largest: int) -> tuple:
    if n == 0:
        return ((),)
    out = []
    for first in range(min(n, largest), 0, -1):
        for rest in _parts(n - first, first):
            out.append((first,) + rest)
    return tuple(out)


class PlanePartition:
    """Rows of non-negative integers, weakly decreasing along rows and columns."""

    __slots__ = ("rows",)

    def __init__(self, rows: Sequence[Sequence[int]] = ()):
        rows = [tuple(int(x) for x in r) for r in rows]
        rows = [tuple(x for x in r if x) for r in rows]
        rows = [r for r in rows if r]
        for r in rows:
            if any(r[j] < r[j + 1] for j in range(len(r) - 1)):
                raise ValueError(f"row not weakly decreasing: {r}")
        for a, b in zip(rows, rows[1:]):
            if len(b) > len(a) or any(b[j] > a[j] for j in range(len(b))):
                raise ValueError("columns not weakly decreasing")
        self.rows = tuple(rows)

    @property
    def size(self) -> int:
        return sum(sum(r) for r in self.rows)

    def entry(self, i: int, j: int) -> int:
        """pi_{ij} with 1-based indices, 0 outside the support."""
        if 1 <= i <= len(self.rows) and 1 <= j <= len(self.rows[i - 1]):
            return self.rows[i - 1][j - 1]
        return 0

    def __eq__(self, other):
        return isinstance(other, PlanePartition) and self.rows == other.rows

    def __hash__(self):
        return hash(self.rows)

    def to_json(self) -> list:
        return [list(r) for r in self.rows]

    def __repr__(self):
        return f"PlanePartition({self.to_json()})"


def enumerate_plane_partitions(max_size: int) -> list[PlanePartition]:
    """All plane partitions with |pi| <= max_size, each once."""
    out = []

    def rows_below(bound: tuple, budget: int) -> Iterator[tuple]:
        # weakly decreasing rows dominated entrywise by ``bound``
        def build(j: int, prev: int, left: int, acc: tuple):
            yield acc
            if j >= len(bound):
                return
            for x in range(min(prev, bound[j], left), 0, -1):
                yield from build(j + 1, x, left - x, acc + (x,))
        for r in build(0, budget, budget, ()):
            if r:
                yield r

    def grow(rows: list, bound: tuple, budget: int):
        out.append(PlanePartition(rows))
        for r in rows_below(bound, budget):
            grow(rows + [r], r, budget - sum(r))

    grow([], tuple([max_size] * max_size), max_size)
    return out


class SSTableau:
    """Filling of a shape obeying the reversed (decreasing) convention."""

    __slots__ = ("shape", "rows")

    def __init__(self, shape: Partition, rows: Sequence[Sequence[int]]):
        self.shape = Partition(shape)
        self.rows = tuple(tuple(int(x) for x in r) for r in rows)
        if tuple(len(r) for r in self.rows) != tuple(self.shape):
            raise InvalidTriple("tableau rows do not match its shape")

    def is_semistandard(self) -> bool:
        for r in self.rows:
            if any(x < 1 for x in r):
                return False
            if any(r[j] < r[j + 1] for j in range(len(r) - 1)):
                return False
        for a, b in zip(self.rows, self.rows[1:]):
            if any(b[j] >= a[j] for j in range(len(b))):
                return False
        return True

    def __eq__(self, other):
        return isinstance(other, SSTableau) and self.shape == other.shape and self.rows == other.rows

    def __hash__(self):
        return hash((self.shape, self.rows))

    def to_json(self) -> dict:
        return {"shape": list(self.shape), "rows": [list(r) for r in self.rows]}

    def __repr__(self):
        return f"SSTableau({list(self.shape)}, {[list(r) for r in self.rows]})"


class SliceTriple(NamedTuple):
    lam: Partition
    T: SSTableau
    Tprime: SSTableau

    def to_json(self) -> dict:
        return {"lambda": list(self.lam), "T": self.T.to_json(), "Tprime": self.Tprime.to_json()}


def diagonal_slice(pi: PlanePartition, m: int) -> Partition:
    """pi(m) = (pi_{i,i+m}) for m >= 0 and (pi_{j-m,j}) for m < 0."""
    out = []
    i = 1
    while True:
        x = pi.entry(i, i + m) if m >= 0 else pi.entry(i - m, i)
        if not x:
            break
        out.append(x)
        i += 1
    return Partition(out)


def _encode(lam: Partition, slices: list[Partition]) -> SSTableau:
    # a cell of lam gets m+1 where m is the last slice still containing it
    rows = []
    for i, p in enumerate(lam):
        row = []
        for j in range(p):
            m = 0
            while m + 1 < len(slices) and slices[m + 1].part(i + 1) > j:
                m += 1
            row.append(m + 1)
        rows.append(row)
    return SSTableau(lam, rows)


def _decode(T: SSTableau) -> list[Partition]:
    top = max((max(r) for r in T.rows if r), default=0)
    return [Partition([sum(1 for x in r if x >= m + 1) for r in T.rows]) for m in range(top)]


def slice(pi: PlanePartition) -> SliceTriple:  # noqa: A001 - name fixed by the interface
    lam = diagonal_slice(pi, 0)
    neg = [lam]
    pos = [lam]
    m = 1
    while True:
        a = diagonal_slice(pi, -m)
        b = diagonal_slice(pi, m)
        if not a and not b:
            break
        neg.append(a)
        pos.append(b)
        m += 1
    return SliceTriple(lam, _encode(lam, neg), _encode(lam, pos))


def unslice(triple: SliceTriple) -> PlanePartition:
    lam, T, Tp = triple
    lam = Partition(lam)
    if T.shape != lam or Tp.shape != lam:
        raise InvalidTriple("tableau shapes differ from lambda")
    if not (T.is_semistandard() and Tp.is_semistandard()):
        raise InvalidTriple("tableau violates the decreasing convention")
    neg = _decode(T) or [lam]
    pos = _decode(Tp) or [lam]
    entries: dict = {}
    for m, sl in enumerate(neg):
        for j, x in enumerate(sl, start=1):
            entries[(j + m, j)] = x
    for m, sl in enumerate(pos):
        for i, x in enumerate(sl, start=1):
            entries[(i, i + m)] = x
    if not entries:
        return PlanePartition()
    nrows = max(i for i, _ in entries)
    ncols = max(j for _, j in entries)
    rows = [[entries.get((i, j), 0) for j in range(1, ncols + 1)] for i in range(1, nrows + 1)]
    return PlanePartition(rows)


def weight_split(pi: PlanePartition) -> tuple[int, int]:
    """u-exponents of q^T and q^T' (each a sum of 2m+1 over the cells)."""
    _, T, Tp = slice(pi)
    uT = sum(2 * x - 1 for r in T.rows for x in r)
    uTp = sum(2 * x - 1 for r in Tp.rows for x in r)
    return uT, uTp


def _qfactorial_inv(k: int, cutoff: int) -> USeries:
    den = USeries.one()
    for j in range(1, k + 1):
        den = den * USeries({0: 1, 2 * j: -1})
    return series_inv(den, cutoff)


@lru_cache(maxsize=None)
def h_principal(k: int, cutoff: int) -> USeries:
    """h_k(q^-rho) = u^k / prod_{j<=k}(1-u^{2j}) modulo u^cutoff."""
    if k < 0:
        return USeries.zero()
    if k == 0:
        return USeries.one(cutoff) if cutoff > 0 else USeries.zero(cutoff)
    if k >= cutoff:
        return USeries.zero(cutoff)
    return _qfactorial_inv(k, cutoff - k).shift(k)


@lru_cache(maxsize=None)
def e_principal(k: int, cutoff: int) -> USeries:
    """e_k(q^-rho) = u^{k^2} / prod_{j<=k}(1-u^{2j}) modulo u^cutoff."""
    if k < 0:
        return USeries.zero()
    if k == 0:
        return USeries.one(cutoff) if cutoff > 0 else USeries.zero(cutoff)
    if k * k >= cutoff:
        return USeries.zero(cutoff)
    return _qfactorial_inv(k, cutoff - k * k).shift(k * k)


@lru_cache(maxsize=None)
def schur_principal(lam: Partition, cutoff: int) -> USeries:
    """Hook-length form u^{|lam|+2n(lam)} / prod_x (1-u^{2h(x)})."""
    lam = Partition(lam)
    lead = lam.size + 2 * lam.n()
    if lead >= cutoff:
        return USeries.zero(cutoff)
    den = USeries.one()
    for i, j in lam.cells():
        den = den * USeries({0: 1, 2 * lam.hook(i, j): -1})
    return series_inv(den, cutoff - lead).shift(lead)


def _skew_cells(lam: Partition, mu: Partition) -> list:
    return [(i, j) for i, p in enumerate(lam) for j in range(mu.part(i + 1), p)]


def skew_tableau_sum(lam: Partition, mu: Partition, cutoff: int) -> USeries:
    """Tableau-sum oracle for s_{lam/mu}(q^-rho) modulo u^cutoff.

    Enumerates fillings of lam/mu with rows weakly decreasing and columns
    strictly decreasing, weighted by prod_x u^{2T(x)-1}, pruned by weight.
    """
    lam, mu = Partition(lam), Partition(mu)
    if not lam.contains(mu):
        return USeries.zero(cutoff)
    cells = _skew_cells(lam, mu)
    n = len(cells)
    counts: dict = {}
    filling: dict = {}

    def rec(idx: int, weight: int):
        if idx == n:
            counts[weight] = counts.get(weight, 0) + 1
            return
        i, j = cells[idx]
        hi = None
        if (i, j - 1) in filling:
            hi = filling[(i, j - 1)]
        lo = 1
        if (i - 1, j) in filling:
            above = filling[(i - 1, j)]
            hi = above - 1 if hi is None else min(hi, above - 1)
        # every remaining cell costs at least u^1
        room = cutoff - weight - (n - idx - 1)
        top = (room + 1) // 2
        if hi is None or hi > top:
            hi = top
        for v in range(lo, hi + 1):
            w = weight + 2 * v - 1
            if w + (n - idx - 1) >= cutoff:
                break
            filling[(i, j)] = v
            rec(idx + 1, w)
            del filling[(i, j)]

    rec(0, 0)
    return USeries({w: c for w, c in counts.items()}, cutoff)


def schur_tableau_sum(lam: Partition, cutoff: int) -> USeries:
    return skew_tableau_sum(lam, Partition(), cutoff)


def _det(matrix: list[list[USeries]], cutoff: int) -> USeries:
    n = len(matrix)
    if n == 0:
        return USeries.one(cutoff)

    @lru_cache(maxsize=None)
    def minor(row: int, cols: frozenset) -> USeries:
        if row == n:
            return USeries.one(cutoff)
        total = USeries.zero(cutoff)
        sign = 1
        for c in range(n):
            if c not in cols:
                continue
            entry = matrix[row][c]
            if not entry.is_zero():
                sub = minor(row + 1, cols - {c})
                term = entry * sub
                total = total + term if sign > 0 else total - term
            sign = -sign
        return total

    return minor(0, frozenset(range(n))).truncate(cutoff)


def skew_schur_principal(lam: Partition, mu: Partition, cutoff: int) -> USeries:
    """Jacobi-Trudi det(h_{lam_i - mu_j - i + j}(q^-rho)) modulo u^cutoff."""
    lam, mu = Partition(lam), Partition(mu)
    if not lam.contains(mu):
        return USeries.zero(cutoff)
    if lam == mu:
        return USeries.one(cutoff)
    n = len(lam)
    m = [[h_principal(lam.part(i) - mu.part(j) - i + j, cutoff) for j in range(1, n + 1)]
         for i in range(1, n + 1)]
    return _det(m, cutoff)


def skew_schur_principal_dual(lam: Partition, mu: Partition, cutoff: int) -> USeries:
    """s_{lam^t/mu^t}(q^-rho) by the dual determinant det(e_{lam_i - mu_j - i + j})."""
    lam, mu = Partition(lam), Partition(mu)
    if not lam.contains(mu):
        return USeries.zero(cutoff)
    if lam == mu:
        return USeries.one(cutoff)
    n = len(lam)
    m = [[e_principal(lam.part(i) - mu.part(j) - i + j, cutoff) for j in range(1, n + 1)]
         for i in range(1, n + 1)]
    return _det(m, cutoff)


def _pair_factors(sign: int, outer: int) -> Iterator:
    n = 1
    while True:
        for _ in range(n):  # the n pairs (i, j) with i + j - 1 = n
            yield ((sign, 1), 2 * n, outer)
        n += 1


def verify_cauchy(kind: str, cutoff_degree: int, u_cutoff: int = 20) -> dict:
    """Graded Cauchy (kind='same') or dual Cauchy (kind='dual') identity.

    With x_i = q^(i-1/2) eps and y_j = q^(j-1/2) eps, the eps-degree 2d part of
    sum_lam s_lam(x) s_lam(y) (or s_lam(x) s_{lam^t}(y)) is compared with the
    product over pairs (i, j).  Q stands for eps^2 in the QPoly values.
    """
    if kind not in ("same", "dual"):
        raise ValueError("kind must be 'same' or 'dual'")
    qcut = cutoff_degree // 2 + 1
    lhs = {}
    for lam in enumerate_partitions(qcut - 1):
        a = schur_principal(lam, u_cutoff)
        b = a if kind == "same" else schur_principal(lam.conjugate(), u_cutoff)
        d = lam.size
        lhs[d] = lhs[d] + a * b if d in lhs else a * b
    lhs_q = QPoly(lhs, qcut)
    if kind == "same":
        rhs_q = product_truncated(_pair_factors(-1, -1), u_cutoff, qdeg_cutoff=qcut)
    else:
        rhs_q = product_truncated(_pair_factors(1, 1), u_cutoff, qdeg_cutoff=qcut)
    diff = {2 * d: lhs_q.coefficient(d) - rhs_q.coefficient(d) for d in range(qcut)}
    return make_report(
        f"cauchy_{kind}",
        {"eps_degree": cutoff_degree, "u_cutoff": u_cutoff},
        residual_payload(diff),
        truncation={"eps_degree": 2 * (qcut - 1), "u_cutoff": u_cutoff},
    )


def verify_bijection(max_size: int = 8) -> dict:
    """slice/unslice round trips and q^|pi| = q^T q^T' for every |pi| <= max_size."""
    bad = {}
    n = 0
    for pi in enumerate_plane_partitions(max_size):
        n += 1
        tri = slice(pi)
        key = str(pi.to_json())
        if unslice(tri) != pi:
            bad[key] = "round trip"
            continue
        if tri.lam.size and (tri.T.shape != tri.lam or tri.Tprime.shape != tri.lam):
            bad[key] = "shape"
            continue
        uT, uTp = weight_split(pi)
        if uT + uTp != 2 * pi.size:
            bad[key] = f"weight {uT}+{uTp} != {2 * pi.size}"
    return make_report("slice_bijection", {"max_size": max_size}, "0" if not bad else bad, checked=n)


def verify_schur_routes(max_size: int = 6, cutoff: int = 30) -> dict:
    """Hook-length form against the tableau sum for every |lam| <= max_size."""
    diff = {}
    for lam in enumerate_partitions(max_size):
        diff[str(list(lam))] = schur_principal(lam, cutoff) - schur_tableau_sum(lam, cutoff)
    return make_report("schur_hook_vs_tableaux", {"max_size": max_size, "u_cutoff": cutoff},
                       residual_payload(diff), checked=len(diff))
