"""Brute-force free-fermion Fock space on a finite window of levels.

Level ``n`` is the mode pair (psi_{-n}, psi*_n): ``psi_{-n}`` fills level n and
``psi*_n`` empties it.  Levels below the window are permanently filled (the
Dirac sea) and levels above it are empty.  A basis state is an ``int`` bit
mask over the window, bit ``n - lo`` standing for level ``n``, and reads as
the wedge of its occupied levels in descending order.

Creating or removing a particle at level n costs the sign
(-1)^(number of occupied levels above n).  Bilinears are normal ordered
against the charge-0 vacuum (levels <= 0 filled).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterable

from gmpy2 import mpq

from .exactnum import LaurentQ, QPoly, USeries, _cut, rat, scalar_is_zero, scalar_to_json
from .partitions import Partition, enumerate_partitions, schur_principal, skew_schur_principal
from .reports import make_report


class WindowOverflow(RuntimeError):
    pass


@dataclass(frozen=True)
class ModeWindow:
    lo: int
    hi: int

    def __post_init__(self):
        if not self.lo < 0 < self.hi:
            raise ValueError("window must satisfy lo < 0 < hi")

    @classmethod
    def symmetric(cls, m: int) -> "ModeWindow":
        return cls(-m, m)

    @property
    def levels(self) -> range:
        return range(self.lo, self.hi + 1)

    def bit(self, n: int) -> int:
        return 1 << (n - self.lo)

    def to_json(self):
        return [self.lo, self.hi]


def _popcount(x: int) -> int:
    return bin(x).count("1")


def state_of(lam, s: int, window: ModeWindow) -> int:
    """Bit mask of |lam, s>: occupied levels lam_i + s - i + 1 (i >= 1)."""
    lam = Partition(lam)
    mask = 0
    i = 1
    while True:
        n = lam.part(i) + s - i + 1
        if n < window.lo:
            if lam.part(i):
                raise WindowOverflow(f"|{list(lam)},{s}> does not fit the window")
            break
        if n > window.hi:
            raise WindowOverflow(f"|{list(lam)},{s}> does not fit the window")
        mask |= window.bit(n)
        i += 1
    return mask


def charge_of(mask: int, window: ModeWindow) -> int:
    above = sum(1 for n in window.levels if n > 0 and mask & window.bit(n))
    holes = sum(1 for n in window.levels if n <= 0 and not mask & window.bit(n))
    return above - holes


def partition_of(mask: int, window: ModeWindow) -> tuple[Partition, int]:
    s = charge_of(mask, window)
    occ = sorted((n for n in window.levels if mask & window.bit(n)), reverse=True)
    parts = []
    for i, n in enumerate(occ, start=1):
        p = n - s + i - 1
        if p <= 0:
            break
        parts.append(p)
    return Partition(parts), s


class FockVector:
    """Finite combination of window basis states with scalar coefficients.

    ``valid`` records an order bound in u below which dropped contributions
    cannot reach (None when nothing was dropped).
    """

    __slots__ = ("window", "coeffs", "valid")

    def __init__(self, window: ModeWindow, coeffs=None, valid=None):
        self.window = window
        self.coeffs = {m: c for m, c in (coeffs or {}).items() if not _zero(c)}
        self.valid = valid

    @classmethod
    def basis(cls, window: ModeWindow, lam=(), s: int = 0, coeff=None) -> "FockVector":
        return cls(window, {state_of(lam, s, window): mpq(1) if coeff is None else coeff})

    def __add__(self, other: "FockVector") -> "FockVector":
        d = dict(self.coeffs)
        for m, c in other.coeffs.items():
            d[m] = d[m] + c if m in d else c
        return FockVector(self.window, d, _min_valid(self.valid, other.valid))

    def __sub__(self, other: "FockVector") -> "FockVector":
        return self + other.scale(-1)

    def scale(self, c) -> "FockVector":
        return FockVector(self.window, {m: v * c for m, v in self.coeffs.items()}, self.valid)

    def coefficient(self, lam, s: int = 0):
        return self.coeffs.get(state_of(lam, s, self.window), mpq(0))

    def truncate(self, cutoff: int) -> "FockVector":
        out = {}
        for m, c in self.coeffs.items():
            out[m] = c.truncate(cutoff) if isinstance(c, USeries) else c
        return FockVector(self.window, out, _min_valid(self.valid, cutoff))

    def is_zero(self) -> bool:
        return all(scalar_is_zero(c) for c in self.coeffs.values())

    def labelled(self) -> dict:
        out = {}
        for m, c in sorted(self.coeffs.items()):
            lam, s = partition_of(m, self.window)
            out[f"{list(lam)},{s}"] = c
        return out

    def to_json(self):
        return {k: scalar_to_json(v) for k, v in self.labelled().items() if not scalar_is_zero(v)}


def _zero(c) -> bool:
    if isinstance(c, USeries):
        return c.is_zero()
    if isinstance(c, QPoly):
        return c.is_zero()
    return not c


def _min_valid(a, b):
    if a is None:
        return b
    if b is None:
        return a
    return min(a, b)


# single fermion operators -------------------------------------------------

def psi_create(n: int, mask: int, window: ModeWindow):
    """psi_{-n} on a basis state: (sign, new mask) or None."""
    if n < window.lo:
        return None
    if n > window.hi:
        raise WindowOverflow(f"level {n} above the window")
    b = window.bit(n)
    if mask & b:
        return None
    sign = -1 if _popcount(mask >> (n - window.lo + 1)) & 1 else 1
    return sign, mask | b


def psi_annihilate(n: int, mask: int, window: ModeWindow):
    """psi*_n on a basis state: (sign, new mask) or None."""
    if n > window.hi:
        return None
    if n < window.lo:
        raise WindowOverflow(f"level {n} below the window")
    b = window.bit(n)
    if not mask & b:
        return None
    sign = -1 if _popcount(mask >> (n - window.lo + 1)) & 1 else 1
    return sign, mask & ~b


# bilinears ----------------------------------------------------------------

@dataclass(frozen=True)
class BilinearOp:
    """One of L0, W0, H(k), J(k), or a custom normal-ordered matrix.

    ``weight`` maps a level n to its diagonal weight for L0/W0/H; ``custom``
    maps (i, j) to x_ij for sum x_ij :psi_{-i} psi*_j:.
    """

    kind: str
    k: int = 0
    custom: tuple = ()

    @classmethod
    def L0(cls):
        return cls("L0")

    @classmethod
    def W0(cls):
        return cls("W0")

    @classmethod
    def H(cls, k: int):
        return cls("H", k)

    @classmethod
    def J(cls, k: int):
        return cls("J", k)

    @classmethod
    def matrix(cls, entries: dict):
        return cls("custom", 0, tuple(sorted(entries.items())))

    def diagonal_weight(self) -> Callable | None:
        if self.kind == "L0":
            return lambda n: mpq(n)
        if self.kind == "W0":
            return lambda n: mpq(n * n)
        if self.kind == "H":
            k = self.k
            return lambda n: USeries({2 * k * n: 1})
        return None


def diagonal_eigenvalue(op: BilinearOp, mask: int, window: ModeWindow):
    """Eigenvalue of a diagonal bilinear: extra particles minus holes."""
    w = op.diagonal_weight()
    total = mpq(0)
    for n in window.levels:
        occ = bool(mask & window.bit(n))
        if n > 0 and occ:
            total = total + w(n)
        elif n <= 0 and not occ:
            total = total - w(n)
    return total


def _move(mask: int, src: int, dst: int, window: ModeWindow):
    """:psi_{-dst} psi*_{src}: for src != dst."""
    r = psi_annihilate(src, mask, window) if src >= window.lo else None
    if src < window.lo:
        # sea particle: the move would open a hole below the window
        if dst >= window.lo and dst <= window.hi and not mask & window.bit(dst):
            raise WindowOverflow(f"move from sea level {src} to {dst}")
        return None
    if r is None:
        return None
    s1, m1 = r
    if dst > window.hi:
        raise WindowOverflow(f"move to level {dst} above the window")
    r2 = psi_create(dst, m1, window)
    if r2 is None:
        return None
    s2, m2 = r2
    return s1 * s2, m2


def apply_bilinear(op: BilinearOp, v: FockVector, on_overflow: str = "raise") -> FockVector:
    """Exact action of a bilinear on a vector ("drop" discards overflow terms)."""
    win = v.window
    out: dict = {}
    valid = v.valid

    def add(m, c):
        out[m] = out[m] + c if m in out else c

    if op.kind in ("L0", "W0", "H"):
        for m, c in v.coeffs.items():
            add(m, c * diagonal_eigenvalue(op, m, win))
        return FockVector(win, out, valid)
    if op.kind == "J":
        entries = [((n, n + op.k), mpq(1)) for n in range(win.lo - abs(op.k), win.hi + abs(op.k) + 1)]
    else:
        entries = list(op.custom)
    for m, c in v.coeffs.items():
        for (i, j), x in entries:
            if i == j:
                if win.lo <= i <= win.hi:
                    occ = bool(m & win.bit(i))
                    val = (1 if occ else 0) - (1 if i <= 0 else 0)
                    if val:
                        add(m, c * x * val)
                continue
            try:
                r = _move(m, j, i, win)
            except WindowOverflow:
                if on_overflow == "raise":
                    raise
                valid = _min_valid(valid, _order(c * x))
                continue
            if r is not None:
                sign, m2 = r
                add(m2, c * x if sign > 0 else -(c * x))
    return FockVector(win, out, valid)


def _order(c):
    if isinstance(c, USeries):
        return c.ord()
    return 0


# vertex operators ---------------------------------------------------------

def power_sums(arg, K: int, cutoff: int | None, factors: int | None = None) -> list:
    """p_k for k = 1..K at a single z or at the principal specialization.

    ``arg`` is a scalar z or the string "principal"; principal sums use
    ``factors`` variables q^(i-1/2) when given, else the full series.
    """
    out = []
    for k in range(1, K + 1):
        if arg == "principal":
            if factors is None:
                # sum_i u^{k(2i-1)} = u^k / (1 - u^{2k})
                terms = {k * (2 * i - 1): 1 for i in range(1, (cutoff // k) + 2) if k * (2 * i - 1) < cutoff}
                out.append(USeries(terms, cutoff))
            else:
                terms = {}
                for i in range(1, factors + 1):
                    e = k * (2 * i - 1)
                    terms[e] = terms.get(e, 0) + 1
                out.append(USeries(terms, cutoff))
        else:
            z = arg
            out.append(z**k)
    return out


def vertex_exponent(kind: str, arg, K: int, cutoff, factors=None, inverse: bool = False) -> dict:
    """Coefficients a_k with the vertex operator equal to exp(sum a_k J_{+-k})."""
    if kind not in ("G+", "G-", "G'+", "G'-"):
        raise ValueError(f"unknown vertex kind {kind}")
    sign_dir = 1 if kind.endswith("+") else -1
    ps = power_sums(arg, K, cutoff, factors)
    coeffs = {}
    for k, p in enumerate(ps, start=1):
        a = p * mpq(1, k)
        if kind.startswith("G'"):
            a = a * mpq((-1) ** (k + 1))
        if inverse:
            a = a * mpq(-1)
        coeffs[sign_dir * k] = a
    return coeffs


def apply_vertex(kind: str, z, v: FockVector, series_order: int, cutoff: int | None = None,
                 factors: int | None = None, inverse: bool = False,
                 on_overflow: str = "raise", max_size: int | None = None) -> FockVector:
    """exp(sum_{k<=series_order} a_k J_{+-k}) applied by its truncated Taylor series.

    ``kind`` is one of "G+", "G-", "G'+", "G'-"; ``z`` is a scalar or
    "principal".  ``inverse`` negates the exponent.  With ``max_size`` set,
    states |lam, s> with |lam| above it are discarded as they appear, which is
    harmless only when every later factor is raising or size preserving.
    """
    expo = vertex_exponent(kind, z, series_order, cutoff, factors, inverse)
    result = v
    term = v
    for n in range(1, series_order + 1):
        nxt = None
        for k, a in expo.items():
            part = _apply_current(k, a * mpq(1, n), term, cutoff, on_overflow, max_size)
            nxt = part if nxt is None else nxt + part
        term = nxt
        if not term.coeffs:
            break
        result = result + term
    return result


def _apply_current(k: int, a, v: FockVector, cutoff: int | None, on_overflow: str,
                   max_size: int | None = None) -> FockVector:
    """a J_k on v; coefficients that vanish modulo u^cutoff never touch the window edge."""
    win = v.window
    lo, hi = win.lo, win.hi
    out: dict = {}
    valid = v.valid
    for m, c in v.coeffs.items():
        if max_size is not None and size_of(m, win) - k > max_size:
            continue
        ca = c * a
        if cutoff is not None and isinstance(ca, USeries):
            ca = ca.truncate(cutoff)
        if _zero(ca):
            continue
        moves = []
        overflow = None
        if k < 0:
            # a sea particle jumping into an empty window level leaves a hole we cannot store
            for dst in range(lo, min(lo - k, hi + 1)):
                if not m & win.bit(dst):
                    overflow = f"move from the sea to level {dst}"
        mm, src = m, lo
        while mm and overflow is None:
            if mm & 1:
                dst = src - k
                if dst > hi:
                    overflow = f"move to level {dst} above the window"
                elif dst >= lo and not m & win.bit(dst):
                    a_, b_ = (dst, src) if dst < src else (src, dst)
                    between = m & (((1 << (b_ - lo)) - 1) ^ ((1 << (a_ - lo + 1)) - 1))
                    moves.append((_popcount(between) & 1, (m & ~win.bit(src)) | win.bit(dst)))
            mm >>= 1
            src += 1
        if overflow is not None:
            if on_overflow == "raise":
                raise WindowOverflow(overflow)
            valid = _min_valid(valid, _order(ca))
            continue
        for odd, m2 in moves:
            x = -ca if odd else ca
            out[m2] = out[m2] + x if m2 in out else x
    return FockVector(win, out, valid)


def apply_diagonal(v: FockVector, f: Callable[[int], object]) -> FockVector:
    """Multiply each basis state by f(mask)."""
    return FockVector(v.window, {m: c * f(m) for m, c in v.coeffs.items()}, v.valid)


def w0_value(mask: int, window: ModeWindow) -> int:
    return int(diagonal_eigenvalue(BilinearOp.W0(), mask, window))


def l0_value(mask: int, window: ModeWindow) -> int:
    return int(diagonal_eigenvalue(BilinearOp.L0(), mask, window))


def size_of(mask: int, window: ModeWindow) -> int:
    """|lam| for the state |lam, s> stored in ``mask``."""
    s = charge_of(mask, window)
    return l0_value(mask, window) - s * (s + 1) // 2


def q_power_w0(v: FockVector, sign: int) -> FockVector:
    """q^{sign W0/2}: the factor u^{sign W0} on each state."""
    win = v.window
    return apply_diagonal(v, lambda m: USeries({sign * w0_value(m, win): 1}))


# verifications ------------------------------------------------------------

def verify_anticommutators(window: ModeWindow) -> dict:
    """{psi_m, psi*_n} = delta_{m+n,0} and the two vanishing relations.

    Checked as operator identities on every basis state of the window with
    all charges, for modes whose levels lie in the window.
    """
    nlev = window.hi - window.lo + 1
    states = range(1 << nlev)
    levels = list(window.levels)
    # tabulate each single-mode operator once: table[n][mask] = (sign, mask') or None
    create = {n: [psi_create(n, m, window) for m in states] for n in levels}
    annihilate = {n: [psi_annihilate(n, m, window) for m in states] for n in levels}

    def anti(x, y, mask):
        acc: dict = {}
        for first, second in ((y, x), (x, y)):
            r = first[mask]
            if r is None:
                continue
            r2 = second[r[1]]
            if r2 is not None:
                acc[r2[1]] = acc.get(r2[1], 0) + r[0] * r2[0]
        return {k: v for k, v in acc.items() if v}

    bad = 0
    checked = 0
    for i in levels:
        for j in levels:
            ci, aj = create[i], annihilate[j]
            for mask in states:
                # psi_{-i} psi*_j + psi*_j psi_{-i} = delta_{ij}
                want = {mask: 1} if i == j else {}
                bad += anti(ci, aj, mask) != want
                if i < j:
                    bad += bool(anti(ci, create[j], mask))
                    bad += bool(anti(annihilate[i], aj, mask))
                checked += 1
    return make_report(
        "anticommutators",
        {"window": window.to_json()},
        "0" if bad == 0 else str(bad),
        relation="psi_m psi*_n + psi*_n psi_m = delta_{m+n,0}",
        checked=checked,
    )


def verify_central_term(k: int, window: ModeWindow, max_size: int = 3, s_values=(0,)) -> dict:
    """[J_k, J_-k] = k on states: the lifted commutator gains a c-number."""
    res = {}
    for s in s_values:
        for lam in enumerate_partitions(max_size):
            v = FockVector.basis(window, lam, s)
            a = apply_bilinear(BilinearOp.J(k), apply_bilinear(BilinearOp.J(-k), v))
            b = apply_bilinear(BilinearOp.J(-k), apply_bilinear(BilinearOp.J(k), v))
            diff = (a - b) - v.scale(mpq(k))
            if not diff.is_zero():
                res[f"{list(lam)},{s}"] = diff.to_json()
    return make_report("central_term_J", {"k": k, "window": window.to_json()}, "0" if not res else res,
                       matrix_commutator="0")


def vertex_column(kind: str, ket, s: int, window: ModeWindow, cutoff: int,
                  factors: int | None = None, size_bound: int | None = None) -> FockVector:
    """Gamma(q^-rho) |ket, s> modulo u^cutoff.

    For the raising kinds ("G-", "G'-") sizes never decrease, so states with
    |lambda| above ``size_bound`` can be discarded without affecting the rest.
    """
    v = FockVector.basis(window, ket, s, USeries.one(cutoff))
    if size_bound is not None and kind not in ("G-", "G'-"):
        raise ValueError("size_bound only applies to raising vertex operators")
    return apply_vertex(kind, "principal", v, cutoff, cutoff, factors, max_size=size_bound)


def vertex_matrix_element(kind: str, bra, ket, s: int, window: ModeWindow, cutoff: int,
                          factors: int | None = None) -> USeries:
    """<bra, s| Gamma(q^-rho) |ket, s> computed in the oracle."""
    c = vertex_column(kind, ket, s, window, cutoff, factors).coefficient(bra, s)
    return c if isinstance(c, USeries) else USeries({0: c} if c else {}, cutoff)


def verify_vertex_elements(max_size: int = 4, cutoff: int = 16, window: ModeWindow | None = None,
                           s: int = 0) -> dict:
    """Vertex matrix elements against hook-form and Jacobi-Trudi Schur values."""
    window = window or ModeWindow.symmetric(cutoff + max_size + 2)
    res = {}
    parts = enumerate_partitions(max_size)
    cols: dict = {}

    def element(kind, bra, ket):
        key = (kind, ket)
        if key not in cols:
            bound = max_size if kind in ("G-", "G'-") else None
            cols[key] = vertex_column(kind, ket, s, window, cutoff, size_bound=bound)
        c = cols[key].coefficient(bra, s)
        return c if isinstance(c, USeries) else USeries({0: c} if c else {}, cutoff)

    for lam in parts:
        want = schur_principal(lam, cutoff)
        got = element("G+", (), lam)
        if not got.equals_mod(want):
            res[f"G+ <0|{list(lam)}>"] = got - want
        want = schur_principal(lam.conjugate(), cutoff)
        got = element("G'-", lam, ())
        if not got.equals_mod(want):
            res[f"G'- <{list(lam)}|0>"] = got - want
        for mu in parts:
            if not lam.contains(mu) or lam == mu:
                continue
            want = skew_schur_principal(lam, mu, cutoff)
            got = element("G-", lam, mu)
            if not got.equals_mod(want):
                res[f"G- <{list(lam)}|{list(mu)}>"] = got - want
            got = element("G+", mu, lam)
            if not got.equals_mod(want):
                res[f"G+ <{list(mu)}|{list(lam)}>"] = got - want
    return make_report(
        "vertex_matrix_elements",
        {"max_size": max_size, "cutoff": cutoff, "s": s, "window": window.to_json()},
        "0" if not res else {k: v.to_json() for k, v in res.items()},
    )


def verify_h_eigenvalues(phi: Callable, max_size: int = 4, s_range=range(-2, 3), ks=(1, 2, -1, -2),
                         window: ModeWindow | None = None) -> dict:
    """H_k |lam, s> = phi(k, lam, s) |lam, s> in the oracle."""
    window = window or ModeWindow.symmetric(max_size + 4)
    res = {}
    for s in s_range:
        for lam in enumerate_partitions(max_size):
            v = FockVector.basis(window, lam, s)
            for k in ks:
                out = apply_bilinear(BilinearOp.H(k), v)
                got = out.coefficient(lam, s)
                others = {m: c for m, c in out.coeffs.items() if m != state_of(lam, s, window)}
                want = phi(k, lam, s)
                if others or not (got - want).is_zero():
                    res[f"k={k},{list(lam)},{s}"] = got - want
    return make_report("h_eigenvalues", {"max_size": max_size, "window": window.to_json()},
                       "0" if not res else {k: scalar_to_json(v) for k, v in res.items()})


def _restrict(x: FockVector, bound: int) -> FockVector:
    return FockVector(x.window, {m: c for m, c in x.coeffs.items() if size_of(m, x.window) <= bound}, x.valid)


def _shift_sides(k: int, lam, s: int, window: ModeWindow, cutoff: int, work: int, primed: bool,
                 size_bound: int, factors=None, omit_gamma_minus: bool = False):
    """Both sides of a shift-symmetry relation applied to |lam, s>, projected to |nu| <= size_bound.

    Each side is (vertex) (middle) (vertex).  Raising operators never shrink a
    partition, so states larger than the bound (plus k ahead of a lowering
    middle factor) are discarded as soon as they appear.  Only the middle
    operator can lower u-orders; the first vertex runs to ``work`` and the last
    one to ``cutoff``.
    """
    v = FockVector.basis(window, lam, s, USeries.one(work))
    one_minus = USeries({0: 1, 2 * k: -1})
    final = size_bound

    def sandwich(first, middle, last, ahead=0, use_vertices=True):
        x = v
        if use_vertices:
            x = apply_vertex(first[0], "principal", x, work, work, factors, inverse=first[1],
                             max_size=size_bound + ahead)
        x = _restrict(middle(x).truncate(cutoff), final)
        if use_vertices:
            x = apply_vertex(last[0], "principal", x, cutoff, cutoff, factors, inverse=last[1], max_size=final)
        return x

    if not primed:
        # G+ H_k G+^{-1}  vs  (-1)^k G-^{-1} q^{-W0/2} J_k q^{W0/2} G- + q^k/(1-q^k)
        left = sandwich(("G+", True), lambda x: apply_bilinear(BilinearOp.H(k), x), ("G+", False))
        right = sandwich(("G-", False), lambda x: apply_bilinear(_conjugated_J(k, window), x),
                         ("G-", True), ahead=k, use_vertices=not omit_gamma_minus)
        right = right.scale(mpq((-1) ** k)) + v.scale(_geom(USeries({2 * k: 1}), one_minus, cutoff))
        constant = "q^k/(1-q^k)"
    else:
        # G'-^{-1} H_{-k} G'-  vs  G'+ q^{-W0/2} J_{-k} q^{W0/2} G'+^{-1} - 1/(1-q^k)
        left = sandwich(("G'-", False), lambda x: apply_bilinear(BilinearOp.H(-k), x), ("G'-", True))
        right = sandwich(("G'+", True), lambda x: apply_bilinear(_conjugated_J(-k, window), x),
                         ("G'+", False), use_vertices=not omit_gamma_minus)
        right = right - v.scale(_geom(USeries.one(), one_minus, cutoff))
        constant = "-1/(1-q^k)"
    return _restrict(left, final), _restrict(right, final), constant


def _geom(num: USeries, den: USeries, cutoff: int) -> USeries:
    from .exactnum import series_inv
    return num * series_inv(den, cutoff)


def _conjugated_J(k: int, window: ModeWindow) -> BilinearOp:
    """q^{-W0/2} J_k q^{W0/2} = sum_n u^{(n+k)^2 - n^2} :psi_{-n} psi*_{n+k}:."""
    entries = {}
    for n in range(window.lo - abs(k), window.hi + abs(k) + 1):
        entries[(n, n + k)] = USeries({(n + k) ** 2 - n * n: 1})
    return BilinearOp.matrix(entries)


def verify_shift_symmetries(k: int, window: ModeWindow, test_states: Iterable, cutoff: int = 20,
                            primed: bool | None = None, size_bound: int | None = None,
                            factors: int | None = None, omit_gamma_minus: bool = False) -> dict:
    """Both shift-symmetry relations including their c-number constants.

    Both sides act on each test state and are compared on every component
    |nu, s> with |nu| <= size_bound (default |lam| + k + 2), modulo u^cutoff.
    Middle factors carry at most u^-(2k(N + |s| + k) + k^2) on such states, so the
    vertex expansions before them run with that much extra precision; the
    comparison is repeated with four more orders as a stability check.
    """
    kinds = [False, True] if primed is None else [primed]
    res = {}
    stable = True
    consts = []
    bounds = {}
    for pr in kinds:
        for lam, s in test_states:
            lam = Partition(lam)
            N = size_bound if size_bound is not None else lam.size + k + 2
            margin = 2 * k * (N + abs(s) + k) + k * k
            bounds[f"{list(lam)},{s}"] = {"size_bound": N, "margin": margin}
            diffs = []
            for extra in (0, 4):
                left, right, const = _shift_sides(k, lam, s, window, cutoff, cutoff + margin + extra, pr, N,
                                                  factors, omit_gamma_minus)
                diffs.append((left - right).truncate(cutoff))
            consts.append(const)
            d0, d1 = diffs
            if not (d0 - d1).is_zero():
                stable = False
            if not d0.is_zero():
                res[f"{'primed' if pr else 'plain'} {list(lam)},{s}"] = d0.to_json()
    return make_report(
        "shift_symmetry_fock",
        {"k": k, "window": window.to_json(), "cutoff": cutoff,
         "relations": ["primed" if p else "plain" for p in kinds],
         "omit_gamma_minus": omit_gamma_minus},
        "0" if not res else res,
        constants=sorted(set(consts)),
        truncation=bounds,
        stable_under_margin=stable,
    )


def apply_g(v: FockVector, cutoff: int, Q, variant: str = "g", factors=None,
            inner_size: int | None = None, out_size: int | None = None) -> FockVector:
    """g (or g') applied right to left through its factor string, modulo u^cutoff.

    Every current J_{+-k} in a vertex factor changes the size by k and brings
    a u-order of at least k, so raising steps may stop at ``inner_size`` and
    the last one at ``out_size``.  The outer q^{W0/2} multiplies afterwards and
    can lower orders by at most -min W0 of the surviving states.
    """
    win = v.window
    v = q_power_w0(v, 1 if variant == "g" else -1)
    right = ("G+", "G-") if variant == "g" else ("G'+", "G'-")
    v = apply_vertex(right[0], "principal", v, cutoff, cutoff, factors)
    v = apply_vertex(right[1], "principal", v, cutoff, cutoff, factors, max_size=inner_size)
    v = apply_diagonal(v, lambda m: _q_power(Q, l0_value(m, win)))
    v = apply_vertex("G+", "principal", v, cutoff, cutoff, factors)
    v = apply_vertex("G-", "principal", v, cutoff, cutoff, factors, max_size=out_size)
    return q_power_w0(v, 1)


def _q_power(Q, n: int):
    if isinstance(Q, str) and Q == "symbolic":
        return USeries.monomial(0, LaurentQ.monomial(n))
    return rat(Q) ** n


def _w0_floor(size: int, s: int, window: ModeWindow) -> int:
    """Smallest W0 over states |nu, s> with |nu| <= size."""
    return min(w0_value(state_of(nu, s, window), window) for nu in enumerate_partitions(size))


def verify_1d_symmetry(k: int, window: ModeWindow, cutoff: int = 16, Q="1/3", states=((), (1,)),
                       out_size: int = 2, use_g: bool = True) -> dict:
    """J_k g = g J_{-k} on small test states, compared on |nu| <= out_size modulo u^cutoff.

    ``use_g=False`` replaces g by the identity as a negative control.
    """
    res = {}
    short = []
    big = out_size + k
    work = cutoff + max(0, -_w0_floor(big, 0, window))
    for lam in states:
        lam = Partition(lam)
        v = FockVector.basis(window, lam, 0)
        inner = (work + lam.size + k + big) // 2 + 1
        if use_g:
            a = apply_bilinear(BilinearOp.J(k), apply_g(v, work, Q, inner_size=inner, out_size=big))
            b = apply_g(apply_bilinear(BilinearOp.J(-k), v), work, Q, inner_size=inner, out_size=big)
        else:
            a = apply_bilinear(BilinearOp.J(k), v)
            b = apply_bilinear(BilinearOp.J(-k), v)
        d = _truncate_any(_restrict(a - b, out_size), cutoff)
        short += [f"{list(lam)}" for c in d.coeffs.values() if isinstance(c, USeries) and _cut(c.cutoff) < cutoff]
        if not d.is_zero():
            res[str(list(lam))] = d.to_json()
    return make_report("one_d_symmetry", {"k": k, "window": window.to_json(), "cutoff": cutoff,
                                          "Q": str(Q), "g": "g" if use_g else "identity",
                                          "out_size": out_size},
                       "0" if not res and not short else (res or {"insufficient_precision": short}))


def _truncate_any(v: FockVector, cutoff: int) -> FockVector:
    out = {}
    for m, c in v.coeffs.items():
        if isinstance(c, USeries):
            c = c.truncate(cutoff)
        elif isinstance(c, QPoly):
            c = c.truncate_u(cutoff)
        out[m] = c
    return FockVector(v.window, out, v.valid)


def fock_report(results: list) -> dict:
    return {"reports": results, "status": "pass" if all(r["status"] == "pass" for r in results) else "fail"}

