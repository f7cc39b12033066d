"""Window-truncated Z x Z matrices for the fermion bilinears and vertex operators.

A ``WindowMatrix`` holds the block of rows and columns ``lo..hi`` of a doubly
infinite matrix.  Entries outside the window are simply absent, so products
are only right away from the edges; ``guards = (g_lo, g_hi)`` says how many
rows and columns at each edge may be polluted.  Comparisons look at the
trusted core ``lo+g_lo .. hi-g_hi`` only.

Entries are built by a ``Specialization``: either ``SymbolicPrincipal``
(u = q^(1/2) formal, truncated u-series, Q a rational or a Laurent variable)
or ``NumericPrincipal`` (q a rational square, everything an exact rational).

Matrices may be stored in a conjugated frame: with ``frame = f`` the actual
entry (i, j) is ``u^(f (i^2 - j^2))`` times the stored one, i.e. the matrix is
D^f X D^-f with D = q^(Delta^2/2).  Conjugating by D is then free, and
products of Toeplitz-like factors stay banded in the stored frame.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import product
from typing import Callable

import flint
from gmpy2 import mpq

from .exactnum import (INF, LaurentQ, TPoly, USeries, rat, scalar_is_zero, scalar_to_json,
                       series_inv)
from .reports import make_report


class WindowMismatch(ValueError):
    pass


class EmptyTrustedCore(ValueError):
    pass


# specializations -----------------------------------------------------------

class SymbolicPrincipal:
    """u formal with entries modulo u^cutoff; Q rational or "symbolic"."""

    mode = "symbolic"

    def __init__(self, cutoff: int = 20, Q="symbolic"):
        self.cutoff = cutoff
        self.Q = Q if Q == "symbolic" else rat(Q)
        self._h = {}

    def describe(self) -> dict:
        return {"mode": "symbolic", "u_cutoff": self.cutoff, "Q": str(self.Q)}

    @property
    def band(self) -> int:
        # h_k and e_k start at u^k, so they vanish modulo u^cutoff from k = cutoff on
        return self.cutoff - 1

    def zero(self):
        return mpq(0)

    def one(self):
        return mpq(1)

    def scalar(self, x):
        return x

    def upow(self, e: int):
        return USeries.monomial(e)

    def Qpow(self, n: int):
        if self.Q == "symbolic":
            return USeries.monomial(0, LaurentQ.monomial(n))
        return self.Q ** n

    def h(self, k: int):
        """h_k(q^-rho) = u^k / prod_{j<=k} (1 - u^{2j}) modulo u^cutoff."""
        if k not in self._h:
            den = USeries.one()
            for j in range(1, k + 1):
                den = den * USeries({0: 1, 2 * j: -1})
            self._h[k] = (USeries.monomial(k) * series_inv(den, self.cutoff)).truncate(self.cutoff)
        return self._h[k]

    def e(self, k: int):
        """e_k(q^-rho) = u^(k^2) / prod_{j<=k} (1 - u^{2j}): the k^2 - k extra orders of h_k."""
        return self.h(k).shift(k * k - k).truncate(self.cutoff)

    def single(self, z, k: int):
        return z ** k

    def valuation_slope(self) -> int:
        return 1

    def entry_to_json(self, x):
        return scalar_to_json(x)


class NumericPrincipal:
    """Exact rational entries at q = u^2 and a rational Q."""

    mode = "numeric"

    def __init__(self, q="1/4", Q="1/3", band: int | None = None):
        q = rat(q)
        num, den = int(q.numerator), int(q.denominator)
        rn, rd = math.isqrt(num), math.isqrt(den)
        if rn * rn != num or rd * rd != den:
            raise ValueError("numeric mode needs q to be the square of a rational")
        if not 0 < q < 1:
            raise ValueError("q must lie in (0, 1)")
        self.q = q
        self.u = mpq(rn, rd)
        self.Q = rat(Q)
        self.cutoff = None
        self._band = band
        self._h = {}

    def describe(self) -> dict:
        return {"mode": "numeric", "q": str(self.q), "Q": str(self.Q), "band": self._band}

    @property
    def band(self) -> int:
        return 10**9 if self._band is None else self._band

    def zero(self):
        return mpq(0)

    def one(self):
        return mpq(1)

    def scalar(self, x):
        return x

    def upow(self, e: int):
        return self.u ** e

    def Qpow(self, n: int):
        return self.Q ** n

    def h(self, k: int):
        if k not in self._h:
            den = mpq(1)
            for j in range(1, k + 1):
                den *= 1 - self.q ** j
            self._h[k] = self.u ** k / den
        return self._h[k]

    def e(self, k: int):
        return self.h(k) * self.u ** (k * k - k)

    def single(self, z, k: int):
        return rat(z) ** k

    def valuation_slope(self) -> int:
        return 0

    def entry_to_json(self, x):
        return scalar_to_json(x)


class ModularPrincipal(NumericPrincipal):
    """The rational specialization reduced modulo a prime p.

    Every entry is the image of the exact rational one as long as no division
    by a multiple of p occurs (ZeroDivisionError otherwise), so a value that
    is nonzero mod p is nonzero over Q.  Zero mod p proves nothing.
    """

    mode = "modular"

    def __init__(self, q="1/4", Q="1/3", p: int = (1 << 62) - 57, band: int | None = None):
        super().__init__(q, Q, band)
        self.p = p
        self._u = self.scalar(self.u)
        self._Qm = self.scalar(self.Q)
        self._hm = {}

    def describe(self) -> dict:
        return {**super().describe(), "mode": "modular", "p": self.p}

    def scalar(self, x):
        if isinstance(x, flint.nmod):
            return x
        x = rat(x)
        d = int(x.denominator)
        if d % self.p == 0:
            raise ZeroDivisionError(f"denominator divisible by {self.p}")
        return flint.nmod(int(x.numerator), self.p) / d

    def zero(self):
        return flint.nmod(0, self.p)

    def one(self):
        return flint.nmod(1, self.p)

    def upow(self, e: int):
        return self._u ** e

    def Qpow(self, n: int):
        return self._Qm ** n

    def h(self, k: int):
        if k not in self._hm:
            self._hm[k] = self.scalar(super().h(k))
        return self._hm[k]

    def e(self, k: int):
        return self.h(k) * self._u ** (k * k - k)

    def single(self, z, k: int):
        return self.scalar(z) ** k


# the matrix type -----------------------------------------------------------

@dataclass(frozen=True)
class BandProfile:
    """Support {(i, j): -lower <= j - i <= upper} plus a u-valuation slope.

    ``slope`` s > 0 promises ord_u(x_ij) >= s |i - j| in the stored frame.
    """

    lower: float
    upper: float
    slope: int = 0

    def to_json(self):
        def f(x):
            return "inf" if x == INF else int(x)
        return {"lower": f(self.lower), "upper": f(self.upper), "slope": self.slope}


def _nonzero(x) -> bool:
    if isinstance(x, USeries):
        return bool(x.items)
    return not scalar_is_zero(x)


def _carries(x) -> bool:
    """Nonzero, or a zero that still carries a truncation order."""
    if isinstance(x, USeries):
        return True
    if isinstance(x, TPoly):
        return bool(x.terms)
    return _nonzero(x)


def _monomials(nvars: int, degree: int):
    return [m for m in product(range(degree + 1), repeat=nvars) if sum(m) <= degree]


class WindowMatrix:
    __slots__ = ("lo", "hi", "guards", "entries", "frame", "slope", "spec", "diagonal")

    def __init__(self, lo: int, hi: int, entries, guard=0, frame: int = 0, slope: int = 0,
                 spec=None, diagonal: bool = False):
        self.lo, self.hi = lo, hi
        self.entries = entries
        self.guards = (guard, guard) if isinstance(guard, int) else tuple(guard)
        self.frame = frame
        self.slope = slope
        self.spec = spec
        self.diagonal = diagonal

    @property
    def size(self) -> int:
        return self.hi - self.lo + 1

    @classmethod
    def zeros(cls, lo, hi, spec, **kw) -> "WindowMatrix":
        n = hi - lo + 1
        z = spec.zero()
        return cls(lo, hi, [[z] * n for _ in range(n)], spec=spec, **kw)

    @classmethod
    def from_function(cls, lo, hi, spec, f: Callable, band=None, **kw) -> "WindowMatrix":
        """Entries f(i, j), evaluated only for -lower <= j - i <= upper when ``band`` is given."""
        m = cls.zeros(lo, hi, spec, **kw)
        lower, upper = band if band is not None else (INF, INF)
        for i in range(lo, hi + 1):
            row = m.entries[i - lo]
            for j in range(max(lo, i - lower) if lower != INF else lo,
                           (min(hi, i + upper) if upper != INF else hi) + 1):
                row[j - lo] = f(i, j)
        return m

    def stored(self, i: int, j: int):
        return self.entries[i - self.lo][j - self.lo]

    def entry(self, i: int, j: int):
        """Actual entry (i, j), undoing the frame conjugation."""
        x = self.stored(i, j)
        e = self.frame * (i * i - j * j)
        if e == 0 or not _carries(x):
            return x
        return _times_upow(x, e, self.spec)

    @property
    def guard(self) -> int:
        return max(self.guards)

    @property
    def core(self) -> range:
        return range(self.lo + self.guards[0], self.hi - self.guards[1] + 1)

    def band_profile(self) -> BandProfile:
        lower = upper = 0
        for i in range(self.lo, self.hi + 1):
            row = self.entries[i - self.lo]
            for j in range(self.lo, self.hi + 1):
                if _nonzero(row[j - self.lo]):
                    lower = max(lower, i - j)
                    upper = max(upper, j - i)
        return BandProfile(lower, upper, self.slope)

    def map(self, f: Callable) -> "WindowMatrix":
        return WindowMatrix(self.lo, self.hi, [[f(x) for x in row] for row in self.entries], self.guards,
                            self.frame, self.slope, self.spec, self.diagonal)

    def with_guard(self, g) -> "WindowMatrix":
        return WindowMatrix(self.lo, self.hi, self.entries, g, self.frame, self.slope, self.spec, self.diagonal)

    def in_frame(self, frame: int) -> "WindowMatrix":
        """Same matrix, stored in another frame."""
        if frame == self.frame or self.diagonal:
            return WindowMatrix(self.lo, self.hi, self.entries, self.guards, frame, self.slope, self.spec,
                                self.diagonal)
        d = self.frame - frame
        out = [[_times_upow(x, d * (i * i - j * j), self.spec) if d * (i * i - j * j) else x
                for j, x in zip(range(self.lo, self.hi + 1), row)]
               for i, row in zip(range(self.lo, self.hi + 1), self.entries)]
        return WindowMatrix(self.lo, self.hi, out, self.guards, frame, 0, self.spec, False)

    def conjugate_q_delta_sq(self, sigma: int) -> "WindowMatrix":
        """D^sigma A D^-sigma, D = q^(Delta^2/2): a relabelling of the frame."""
        if self.diagonal:
            return self
        return WindowMatrix(self.lo, self.hi, self.entries, self.guards, self.frame + sigma, self.slope,
                            self.spec, False)

    def settled(self, triangle: str | None = None) -> "WindowMatrix":
        """Every stored entry as a series cut at the spec's cutoff.

        Exact zeros outside a truncated band then carry the precision they
        really have, so later shifts by negative u-powers report honest
        per-entry cutoffs.  ``triangle="lower"`` (or "upper") keeps the
        structural zeros of a triangular matrix exact.
        """
        cut = getattr(self.spec, "cutoff", None)
        if cut is None:
            return self
        lo = self.lo

        def f(x):
            if isinstance(x, USeries):
                return x.truncate(cut)
            if isinstance(x, TPoly):
                return TPoly(x.vars, {m: f(x.terms.get(m, 0)) for m in _monomials(len(x.vars), x.degree_cutoff)},
                             x.degree_cutoff)
            return USeries.monomial(0, x, cut) if not scalar_is_zero(x) else USeries.zero(cut)

        def keep(i, j):
            return (triangle == "lower" and j > i) or (triangle == "upper" and j < i)
        out = [[x if keep(i, j) else f(x) for j, x in enumerate(row)] for i, row in enumerate(self.entries)]
        return WindowMatrix(lo, self.hi, out, self.guards, self.frame, self.slope, self.spec, self.diagonal)

    def restrict(self, lo: int, hi: int) -> "WindowMatrix":
        if lo < self.lo or hi > self.hi:
            raise WindowMismatch("restriction outside the window")
        a, b = lo - self.lo, hi - self.lo + 1
        g = (max(0, self.guards[0] - (lo - self.lo)), max(0, self.guards[1] - (self.hi - hi)))
        return WindowMatrix(lo, hi, [row[a:b] for row in self.entries[a:b]], g, self.frame, self.slope,
                            self.spec, self.diagonal)

    def scale(self, c) -> "WindowMatrix":
        return self.map(lambda x: x * c)

    def __add__(self, other: "WindowMatrix") -> "WindowMatrix":
        return _elementwise(self, other, lambda x, y: x + y)

    def __sub__(self, other: "WindowMatrix") -> "WindowMatrix":
        return _elementwise(self, other, lambda x, y: x - y)

    def __matmul__(self, other: "WindowMatrix") -> "WindowMatrix":
        return compose(self, other)

    def to_json(self) -> dict:
        return {
            "lo": self.lo,
            "hi": self.hi,
            "guard": list(self.guards),
            "band": self.band_profile().to_json(),
            "entries": [[scalar_to_json(self.entry(i, j)) for j in range(self.lo, self.hi + 1)]
                        for i in range(self.lo, self.hi + 1)],
        }


def _times_upow(x, e: int, spec):
    if isinstance(x, USeries):
        return x.shift(e)
    if isinstance(x, TPoly):
        return x.map_coeffs(lambda c: _times_upow(c, e, spec))
    return x * spec.upow(e)


def _check_same(a: WindowMatrix, b: WindowMatrix):
    if (a.lo, a.hi) != (b.lo, b.hi):
        raise WindowMismatch(f"windows {a.lo}..{a.hi} and {b.lo}..{b.hi} differ")


def _common_frame(a: WindowMatrix, b: WindowMatrix):
    if a.diagonal:
        return b.frame
    if b.diagonal or a.frame == b.frame:
        return a.frame
    return None


def _elementwise(a, b, op):
    _check_same(a, b)
    frame = _common_frame(a, b)
    if frame is None:
        b = b.in_frame(a.frame)
        frame = a.frame
    if a.diagonal and not b.diagonal:
        a = a.in_frame(frame)
    out = [[op(x, y) for x, y in zip(ra, rb)] for ra, rb in zip(a.entries, b.entries)]
    slope = min(a.slope, b.slope)
    return WindowMatrix(a.lo, a.hi, out, _max_guards(a, b), frame, slope, a.spec or b.spec,
                        a.diagonal and b.diagonal)


def _max_guards(a: WindowMatrix, b: WindowMatrix) -> tuple:
    return (max(a.guards[0], b.guards[0]), max(a.guards[1], b.guards[1]))


def _edge_guard(ga: int, gb: int, band_a: float, band_b: float, slope: int, cutoff) -> int:
    """Guard at one edge of a product.

    Without valuations the pollution spreads by the smaller of the two bands
    that reach past the edge.  With ord(x_ij) >= |i - j| in both factors, every
    polluted or missing term at (i, j) has order >= d_i + d_j (d = distance to
    the edge plus one), so the entry is exact modulo u^cutoff once
    2 (g + 1) >= cutoff whatever happened before.
    """
    spread = min(band_a, band_b)
    additive = max(ga, gb) + (int(spread) if spread != INF else 10**9)
    if slope > 0 and cutoff is not None and (ga or gb or spread):
        return min(additive, max(ga, gb, -(-cutoff // 2) - 1))
    return additive


def compose(a: WindowMatrix, b: WindowMatrix) -> WindowMatrix:
    """Matrix product restricted to the window, with the guard rule.

    Terms past the high edge need a's upper band and b's lower band; past the
    low edge a's lower and b's upper band.  Each side spills the smaller band
    (or less when valuations make the missing terms vanish) on top of the
    larger guard of the operands.
    """
    _check_same(a, b)
    frame = _common_frame(a, b)
    if frame is None:
        b = b.in_frame(a.frame)
        frame = a.frame
    spec = a.spec or b.spec
    lo, hi, n = a.lo, a.hi, a.size
    pa, pb = a.band_profile(), b.band_profile()
    if a.diagonal or b.diagonal:
        if a.diagonal and b.diagonal:
            out = [[a.entries[i][i] * b.entries[i][i] if i == j else spec.zero() for j in range(n)]
                   for i in range(n)]
        elif a.diagonal:
            out = [[a.entries[i][i] * x for x in b.entries[i]] for i in range(n)]
        else:
            out = [[x * b.entries[j][j] for j, x in enumerate(row)] for row in a.entries]
        return WindowMatrix(lo, hi, out, _max_guards(a, b), frame, min(a.slope, b.slope), spec,
                            a.diagonal and b.diagonal)
    cutoff = getattr(spec, "cutoff", None)
    slope = min(a.slope, b.slope)
    g_lo = _edge_guard(a.guards[0], b.guards[0], pa.lower, pb.upper, slope, cutoff)
    g_hi = _edge_guard(a.guards[1], b.guards[1], pa.upper, pb.lower, slope, cutoff)
    guard = (min(g_lo, n), min(g_hi, n))
    # sparse rows of a and columns of b
    arows = [[(k, x) for k, x in enumerate(row) if _carries(x)] for row in a.entries]
    bcols = [[(k, b.entries[k][j]) for k in range(n) if _carries(b.entries[k][j])] for j in range(n)]
    out = []
    zero = spec.zero()
    for i in range(n):
        ra = dict(arows[i])
        row = []
        for j in range(n):
            acc = None
            for k, y in bcols[j]:
                x = ra.get(k)
                if x is None:
                    continue
                p = x * y
                acc = p if acc is None else acc + p
            row.append(zero if acc is None else acc)
        out.append(row)
    return WindowMatrix(lo, hi, out, guard, frame, slope, spec, False)


def compose_all(*ms: WindowMatrix) -> WindowMatrix:
    out = ms[0]
    for m in ms[1:]:
        out = compose(out, m)
    return out


# constructors ----------------------------------------------------------------

def make_basic(kind: str, lo: int, hi: int, spec, k: int = 1, sigma: int = 1) -> WindowMatrix:
    """shift(k) = Lambda^k, delta, q_delta(k) = q^(k Delta), q_delta_sq(sigma), Q_delta, identity."""
    if kind == "shift":
        return WindowMatrix.from_function(lo, hi, spec, lambda i, j: spec.one() if j - i == k else spec.zero(),
                                          band=(max(0, -k), max(0, k)))
    diag = {
        "identity": lambda n: spec.one(),
        "delta": lambda n: spec.scalar(mpq(n)),
        "q_delta": lambda n: spec.upow(2 * k * n),
        "q_delta_sq": lambda n: spec.upow(sigma * n * n),
        "Q_delta": lambda n: spec.Qpow(n),
    }
    if kind not in diag:
        raise ValueError(f"unknown basic matrix {kind}")
    f = diag[kind]
    # diagonals of u-order 0 keep valuation bounds; u-power diagonals do not
    slope = 10**9 if kind in ("identity", "delta", "Q_delta") else 0
    return WindowMatrix.from_function(lo, hi, spec, lambda i, j: f(i), band=(0, 0), diagonal=True,
                                      slope=slope)


def toeplitz(lo, hi, spec, coeff: Callable[[int], object], direction: int, band: int, slope: int = 0):
    """sum_k coeff(k) Lambda^(direction k) for 0 <= k <= band."""
    def f(i, j):
        d = (j - i) * direction
        if 0 <= d <= band:
            return coeff(d)
        return spec.zero()
    b = (0, band) if direction > 0 else (band, 0)
    return WindowMatrix.from_function(lo, hi, spec, f, band=b, slope=slope)


VERTEX_KINDS = ("G+", "G-", "G'+", "G'-")


def make_vertex(kind: str, arg, lo: int, hi: int, spec, scale=None, inverse: bool = False) -> WindowMatrix:
    """Vertex matrices from their closed-form Toeplitz entries.

    ``arg`` is "principal" (the q^-rho specialization, optionally rescaled by
    ``scale``, e.g. Q for Gamma(Q q^-rho)) or a single variable z.
    Gamma_+-(z) = (1 - z Lambda^+-1)^-1 and Gamma'_+-(z) = 1 + z Lambda^+-1.
    """
    if kind not in VERTEX_KINDS:
        raise ValueError(f"unknown vertex kind {kind}")
    direction = 1 if kind.endswith("+") else -1
    primed = kind.startswith("G'")
    width = hi - lo
    if isinstance(arg, str) and arg == "principal":
        band = min(spec.band, width)
        # Gamma = sum h_k, Gamma' = sum e_k; inverses swap h <-> e with signs
        use_e = primed != inverse

        def coeff(k):
            if k == 0:
                return spec.one()
            c = spec.e(k) if use_e else spec.h(k)
            if scale is not None:
                c = c * _pow(scale, k, spec)
            return -c if inverse and k % 2 else c
        return toeplitz(lo, hi, spec, coeff, direction, band, slope=spec.valuation_slope())
    z = arg
    if primed != inverse:
        # 1 + z Lambda, or 1 - z Lambda for the inverse of Gamma
        w = -z if inverse else z
        return toeplitz(lo, hi, spec, lambda k: spec.one() if k == 0 else w, direction, 1)
    # (1 - z Lambda)^-1, or (1 + z Lambda)^-1 for the inverse of Gamma'
    w = -z if inverse else z
    return toeplitz(lo, hi, spec, lambda k: spec.single(w, k), direction, min(spec.band, width))


def _pow(scale, k, spec):
    if scale == "Q":
        return spec.Qpow(k)
    return scale ** k


def vertex_from_factors(kind: str, lo: int, hi: int, spec, factors: int, scale=None) -> WindowMatrix:
    """prod_{i<=factors} Gamma(q^(i-1/2)), multiplied out of single-variable matrices."""
    out = make_basic("identity", lo, hi, spec)
    out = WindowMatrix(lo, hi, out.entries, spec=spec)
    for i in range(1, factors + 1):
        z = spec.upow(2 * i - 1)
        if scale is not None:
            z = z * _pow(scale, 1, spec)
        f = make_vertex(kind, z, lo, hi, spec)
        if spec.mode == "symbolic":
            f = f.map(lambda x: x.truncate(spec.cutoff) if isinstance(x, USeries) else x)
        out = compose(out, f)
        if spec.mode == "symbolic":
            out = out.map(lambda x: x.truncate(spec.cutoff) if isinstance(x, USeries) else x)
    return out


def matrix_of_g(variant: str, lo: int, hi: int, spec) -> WindowMatrix:
    """Compose the factor string of g or g' (the matrix U).

    g  = D Gamma- Gamma+ Q^Delta Gamma- Gamma+ D
    g' = D Gamma- Gamma+ Q^Delta Gamma'- Gamma'+ D^-1,  D = q^(Delta^2/2).
    The outer D factors are kept as a frame label.
    """
    args = (lo, hi, spec)
    gm, gp = make_vertex("G-", "principal", *args), make_vertex("G+", "principal", *args)
    Qd = make_basic("Q_delta", *args)
    if variant == "g":
        right = (make_vertex("G-", "principal", *args), make_vertex("G+", "principal", *args))
    elif variant == "g'":
        right = (make_vertex("G'-", "principal", *args), make_vertex("G'+", "principal", *args))
    else:
        raise ValueError("variant must be g or g'")
    inner = compose_all(gm, gp, Qd, *right)
    if variant == "g'":
        return inner.conjugate_q_delta_sq(1)
    # D X D = D (X D^2) D^-1
    return compose(inner, make_basic("q_delta_sq", *args, sigma=2)).conjugate_q_delta_sq(1)


# comparisons ---------------------------------------------------------------

def core_residual(a: WindowMatrix, b: WindowMatrix, core: range | None = None, modulo="auto") -> dict:
    """Nonzero entries of a - b on the common trusted core, in the actual frame.

    Guards derived from valuations only promise the stored entries modulo
    u^cutoff, so with ``modulo="auto"`` differences of such matrices are cut
    there; otherwise every entry is compared to its own cutoff.
    """
    _check_same(a, b)
    if modulo == "auto":
        cut = getattr(a.spec, "cutoff", None)
        modulo = cut if cut is not None and min(a.slope, b.slope) > 0 else None
    if core is None:
        g = _max_guards(a, b)
        core = range(a.lo + g[0], a.hi - g[1] + 1)
    if len(core) == 0:
        raise EmptyTrustedCore(f"guard leaves no core in {a.lo}..{a.hi}")
    frame = _common_frame(a, b)
    if frame is None:
        b = b.in_frame(a.frame)
    out = {}
    for i in core:
        for j in core:
            d = a.stored(i, j) - (b.stored(i, j) if not b.diagonal or i == j else b.spec.zero())
            if a.diagonal and i != j:
                d = -b.stored(i, j)
            if modulo is not None and isinstance(d, USeries):
                d = d.truncate(modulo)
            if _nonzero(d):
                out[f"{i},{j}"] = _times_upow(d, (a.frame if not a.diagonal else b.frame) * (i * i - j * j), a.spec)
    return out


def verify_matrix_shift_symmetry(k: int, lo: int, hi: int, spec, omit_gamma_minus: bool = False,
                                 primed: bool | None = None) -> dict:
    """Shift relations at matrix level, where no c-number appears:

    Gamma+ q^(k Delta) Gamma+^-1 = (-1)^k Gamma-^-1 D^-1 Lambda^k D Gamma-
    Gamma'-^-1 q^(-k Delta) Gamma'- = Gamma'+ D^-1 Lambda^-k D Gamma'+^-1
    """
    args = (lo, hi, spec)
    kinds = [False, True] if primed is None else [primed]
    res = {}
    guards = {}
    for pr in kinds:
        sign = -k if pr else k
        # D^-1 Lambda^(+-k) D written out in the plain frame: entries u^(2kn + k^2) or u^(k^2 - 2kn)
        mid = make_basic("shift", *args, k=sign).conjugate_q_delta_sq(-1).in_frame(0)
        if not pr:
            left = compose_all(make_vertex("G+", "principal", *args), make_basic("q_delta", *args, k=k),
                               make_vertex("G+", "principal", *args, inverse=True))
            parts = [mid] if omit_gamma_minus else [make_vertex("G-", "principal", *args, inverse=True), mid,
                                                    make_vertex("G-", "principal", *args)]
            right = compose_all(*parts).scale(mpq((-1) ** k))
            name = "plain"
        else:
            left = compose_all(make_vertex("G'-", "principal", *args, inverse=True),
                               make_basic("q_delta", *args, k=-k), make_vertex("G'-", "principal", *args))
            parts = [mid] if omit_gamma_minus else [make_vertex("G'+", "principal", *args), mid,
                                                    make_vertex("G'+", "principal", *args, inverse=True)]
            right = compose_all(*parts) if len(parts) > 1 else parts[0]
            name = "primed"
        g = _max_guards(left, right)
        guards[name] = list(g)
        r = core_residual(left, right)
        if r:
            res[name] = {key: scalar_to_json(v) for key, v in sorted(r.items())[:20]}
            res[name]["count"] = len(r)
    return make_report(
        "shift_symmetry_matrix",
        {"k": k, "window": [lo, hi], **spec.describe(), "omit_gamma_minus": omit_gamma_minus},
        "0" if not res else res,
        guard=guards,
        central_constants="absent at matrix level",
    )


def matrix_of_g_inverse(lo: int, hi: int, spec) -> WindowMatrix:
    """The reversed string of inverse factors of g,

    D^-1 Gamma+^-1 Gamma-^-1 Q^-Delta Gamma+^-1 Gamma-^-1 D^-1.

    Products of doubly infinite matrices are not associative here, so this is
    not a two-sided inverse of ``matrix_of_g`` in any useful sense; it is the
    matrix that actually carries the Lambda^k <-> Lambda^-k symmetry.
    """
    args = (lo, hi, spec)
    gpi = make_vertex("G+", "principal", *args, inverse=True)
    gmi = make_vertex("G-", "principal", *args, inverse=True)
    Qi = WindowMatrix.from_function(lo, hi, spec, lambda i, j: spec.Qpow(-i) if i == j else spec.zero(),
                                    band=(0, 0), diagonal=True, slope=10**9)
    inner = compose_all(gpi, gmi, Qi, gpi, gmi)
    return compose(inner, make_basic("q_delta_sq", *args, sigma=-2)).conjugate_q_delta_sq(-1)


def verify_one_d_matrix(k: int, lo: int, hi: int, spec, form: str = "inverse") -> dict:
    """Lambda^k G = G Lambda^-k on the trusted core.

    ``form="literal"`` uses the factor string of g itself.  That matrix is not
    Hankel: the Fock-space identity does not transfer because the left
    multiplication by Lambda^k cannot be pushed through the string without
    regrouping divergent sums.  ``form="inverse"`` uses the reversed inverse
    string, for which the relation holds entrywise.
    """
    if form == "literal":
        G = matrix_of_g("g", lo, hi, spec)
    elif form == "inverse":
        G = matrix_of_g_inverse(lo, hi, spec)
    else:
        raise ValueError("form must be literal or inverse")
    a = compose(make_basic("shift", lo, hi, spec, k=k), G)
    b = compose(G, make_basic("shift", lo, hi, spec, k=-k))
    g = list(_max_guards(a, b))
    r = core_residual(a, b)
    payload = "0" if not r else {key: scalar_to_json(v) for key, v in sorted(r.items())[:20]}
    if r:
        payload["count"] = len(r)
    return make_report("one_d_symmetry_matrix", {"k": k, "window": [lo, hi], "form": form, **spec.describe()},
                       payload, guard=g)


def dump(m: WindowMatrix) -> dict:
    return m.to_json()
