"""Exact coefficient arithmetic.

Rationals are gmpy2 ``mpq`` values.  A ``USeries`` is a truncated Laurent
series in ``u = q^(1/2)``; every value carries its own cutoff and binary
operations keep the tightest cutoff that is still valid.  Coefficients of a
``USeries`` may come from any commutative ring that supports ``+ - *`` and
truthiness; rationals and ``LaurentQ`` (Laurent polynomials in ``Q``) are the
two rings used in this package.

``QPoly`` grades u-series by powers of ``Q`` and ``TPoly`` is a truncated
polynomial in the deformation times.
"""

from __future__ import annotations

import math
from typing import Any, Iterable, Iterator

import flint
from gmpy2 import mpq

Rat = type(mpq(0))
INF = math.inf


class DomainError(ValueError):
    pass


class ZeroLeadingTerm(DomainError):
    pass


class NonTerminating(RuntimeError):
    pass


def rat(x: Any) -> Rat:
    """Coerce ints, strings like ``"3/4"``, Fractions and mpq to ``mpq``."""
    if isinstance(x, Rat):
        return x
    if isinstance(x, str):
        x = x.strip()
        if "/" in x:
            n, d = x.split("/")
            return mpq(int(n), int(d))
        return mpq(x)
    if isinstance(x, float):
        raise TypeError("floats are not accepted as exact rationals")
    return mpq(x)


def rat_str(r: Any) -> str:
    r = rat(r)
    if r.denominator == 1:
        return str(r.numerator)
    return f"{r.numerator}/{r.denominator}"


def _inv_coeff(c):
    if isinstance(c, Rat):
        return 1 / c
    return c.inverse()


def _coeff(c):
    if isinstance(c, int):
        return mpq(c)
    return c


def _min_cut(a, b):
    if a is None:
        return b
    if b is None:
        return a
    return min(a, b)


def _cut(x):
    return INF if x is None else x


def _uncut(x):
    return None if x == INF else int(x)


def _fq(r):
    r = rat(r)
    return flint.fmpq(int(r.numerator), int(r.denominator))


class LaurentQ:
    """Laurent polynomial in Q with rational coefficients: ``Q**off * p(Q)``."""

    __slots__ = ("off", "p")

    def __init__(self, p=None, off: int = 0):
        if p is None:
            p = flint.fmpq_poly([])
        elif not isinstance(p, flint.fmpq_poly):
            p = flint.fmpq_poly(p)
        self.p = p
        self.off = off if p else 0

    @classmethod
    def monomial(cls, deg: int, coeff=1) -> "LaurentQ":
        return cls(flint.fmpq_poly([_fq(coeff)]), deg)

    @classmethod
    def from_dict(cls, d: dict) -> "LaurentQ":
        d = {k: rat(v) for k, v in d.items() if v}
        if not d:
            return cls()
        lo = min(d)
        hi = max(d)
        coeffs = [flint.fmpq(0)] * (hi - lo + 1)
        for k, v in d.items():
            coeffs[k - lo] = _fq(v)
        return cls(flint.fmpq_poly(coeffs), lo)

    def to_dict(self) -> dict:
        out = {}
        for i, c in enumerate(self.p.coeffs()):
            if c:
                out[self.off + i] = mpq(int(c.p), int(c.q))
        return out

    def __bool__(self):
        return not self.p.is_zero()

    def _align(self, other):
        if self.off == other.off:
            return self.p, other.p, self.off
        if self.off < other.off:
            return self.p, other.p.left_shift(other.off - self.off), self.off
        return self.p.left_shift(self.off - other.off), other.p, other.off

    def _coerce(self, other):
        if isinstance(other, LaurentQ):
            return other
        return LaurentQ.monomial(0, other)

    def __add__(self, other):
        other = self._coerce(other)
        if not other:
            return self
        if not self:
            return other
        a, b, off = self._align(other)
        return LaurentQ(a + b, off)

    __radd__ = __add__

    def __sub__(self, other):
        other = self._coerce(other)
        if not other:
            return self
        a, b, off = self._align(other)
        return LaurentQ(a - b, off)

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __neg__(self):
        return LaurentQ(-self.p, self.off)

    def __mul__(self, other):
        if isinstance(other, LaurentQ):
            return LaurentQ(self.p * other.p, self.off + other.off)
        if isinstance(other, int) or isinstance(other, Rat):
            r = rat(other)
            return LaurentQ(self.p * _fq(r), self.off)
        return NotImplemented

    __rmul__ = __mul__

    def __truediv__(self, other):
        r = rat(other)
        return LaurentQ(self.p / _fq(r), self.off)

    def __eq__(self, other):
        return not (self - other)

    def __hash__(self):
        return hash(tuple(sorted(self.to_dict().items())))

    def inverse(self) -> "LaurentQ":
        d = self.to_dict()
        if len(d) != 1:
            raise ZeroLeadingTerm("only monomials are invertible in Q[Q, 1/Q]")
        (k, v), = d.items()
        return LaurentQ.monomial(-k, 1 / v)

    def evaluate(self, Q) -> Rat:
        Q = rat(Q)
        return sum((v * Q**k for k, v in self.to_dict().items()), mpq(0))

    def to_json(self):
        return [[k, rat_str(v)] for k, v in sorted(self.to_dict().items())]

    def __repr__(self):
        d = self.to_dict()
        if not d:
            return "0"
        return " + ".join(f"{rat_str(v)}*Q^{k}" for k, v in sorted(d.items()))


def coeff_to_json(c):
    if isinstance(c, Rat) or isinstance(c, int):
        return rat_str(c)
    return c.to_json()


class USeries:
    """Truncated Laurent series ``sum c_e u^e + O(u^cutoff)``.

    ``cutoff=None`` marks an exact (finite) Laurent polynomial.
    """

    __slots__ = ("items", "cutoff")

    def __init__(self, terms=None, cutoff: int | None = None):
        if terms is None:
            terms = {}
        elif not isinstance(terms, dict):
            terms = dict(terms)
        if cutoff is None:
            items = [(e, _coeff(c)) for e, c in terms.items() if c]
        else:
            items = [(e, _coeff(c)) for e, c in terms.items() if c and e < cutoff]
        items.sort(key=lambda t: t[0])
        self.items = items
        self.cutoff = cutoff

    @classmethod
    def _raw(cls, items, cutoff):
        s = cls.__new__(cls)
        s.items = items
        s.cutoff = cutoff
        return s

    @classmethod
    def one(cls, cutoff=None, one=None):
        return cls({0: mpq(1) if one is None else one}, cutoff)

    @classmethod
    def zero(cls, cutoff=None):
        return cls._raw([], cutoff)

    @classmethod
    def monomial(cls, e: int, c=1, cutoff=None):
        if not isinstance(c, LaurentQ):
            c = rat(c)
        return cls({e: c}, cutoff)

    @classmethod
    def from_coeffs(cls, coeffs: Iterable, start: int = 0, cutoff=None):
        return cls({start + i: (c if isinstance(c, LaurentQ) else rat(c)) for i, c in enumerate(coeffs)}, cutoff)

    @property
    def terms(self) -> dict:
        return dict(self.items)

    def ord(self):
        """Lowest stored exponent; the cutoff for an inexact zero, inf for exact 0."""
        if self.items:
            return self.items[0][0]
        return _cut(self.cutoff)

    def is_zero(self) -> bool:
        return not self.items

    def coefficient(self, e: int):
        if self.cutoff is not None and e >= self.cutoff:
            raise DomainError(f"coefficient u^{e} is beyond cutoff {self.cutoff}")
        for x, c in self.items:
            if x == e:
                return c
        return mpq(0)

    def truncate(self, cutoff: int | None) -> "USeries":
        newcut = _min_cut(self.cutoff, cutoff)
        if newcut is None or newcut == self.cutoff and self.cutoff is not None:
            return self
        return USeries._raw([t for t in self.items if t[0] < newcut], newcut)

    def __add__(self, other):
        if not isinstance(other, USeries):
            if isinstance(other, (TPoly, QPoly)):
                return NotImplemented
            other = USeries({0: other})
        cut = _min_cut(self.cutoff, other.cutoff)
        d = dict(self.items)
        for e, c in other.items:
            if e in d:
                d[e] = d[e] + c
            else:
                d[e] = c
        return USeries(d, cut)

    __radd__ = __add__

    def __neg__(self):
        return USeries._raw([(e, -c) for e, c in self.items], self.cutoff)

    def __sub__(self, other):
        if not isinstance(other, USeries):
            if isinstance(other, (TPoly, QPoly)):
                return NotImplemented
            other = USeries({0: other})
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def scale(self, c):
        if not c:
            return USeries._raw([], self.cutoff)
        return USeries._raw([(e, x * c) for e, x in self.items if x * c], self.cutoff)

    def __mul__(self, other):
        if not isinstance(other, USeries):
            if isinstance(other, (int, Rat, LaurentQ)):
                return self.scale(other)
            return NotImplemented
        return series_mul(self, other)

    def __rmul__(self, other):
        if isinstance(other, (int, Rat, LaurentQ)):
            return self.scale(other)
        return NotImplemented

    def __truediv__(self, other):
        if isinstance(other, USeries):
            return series_mul(self, series_inv(other))
        return self.scale(1 / rat(other))

    def __pow__(self, n: int):
        if n < 0:
            return series_inv(self) ** (-n)
        result = USeries.one()
        base = self
        while n:
            if n & 1:
                result = result * base
            base = base * base
            n >>= 1
        return result

    def shift(self, k: int) -> "USeries":
        """Multiply by u^k."""
        cut = None if self.cutoff is None else self.cutoff + k
        return USeries._raw([(e + k, c) for e, c in self.items], cut)

    def dilate(self, k: int) -> "USeries":
        """Substitute u -> u^k for k >= 1."""
        cut = None if self.cutoff is None else self.cutoff * k
        return USeries._raw([(e * k, c) for e, c in self.items], cut)

    def equals_mod(self, other: "USeries", cutoff: int | None = None) -> bool:
        """Equality of all coefficients below the common (or given) cutoff."""
        return (self - other).truncate(cutoff).is_zero()

    def __eq__(self, other):
        if not isinstance(other, USeries):
            other = USeries({0: rat(other)} if other else {})
        return self.equals_mod(other)

    def __hash__(self):
        return hash((tuple((e, str(c)) for e, c in self.items), self.cutoff))

    def evaluate(self, u) -> Rat:
        """Sum of the stored terms at a rational u (tail beyond cutoff ignored)."""
        u = rat(u)
        total = mpq(0)
        for e, c in self.items:
            if isinstance(c, LaurentQ):
                raise DomainError("evaluate a LaurentQ coefficient first")
            total += c * u**e
        return total

    def map_coeffs(self, f) -> "USeries":
        return USeries({e: f(c) for e, c in self.items}, self.cutoff)

    def to_json(self) -> dict:
        return {
            "var": "u",
            "cutoff": self.cutoff,
            "terms": [[e, coeff_to_json(c)] for e, c in self.items],
        }

    @classmethod
    def from_json(cls, obj: dict) -> "USeries":
        terms = {}
        for e, c in obj["terms"]:
            if isinstance(c, list):
                terms[int(e)] = LaurentQ.from_dict({int(k): rat(v) for k, v in c})
            else:
                terms[int(e)] = rat(c)
        return cls(terms, obj["cutoff"])

    def __repr__(self):
        if not self.items:
            body = "0"
        else:
            body = " + ".join(f"({c})*u^{e}" for e, c in self.items)
        tail = "" if self.cutoff is None else f" + O(u^{self.cutoff})"
        return body + tail


def series_mul(a: USeries, b: USeries) -> USeries:
    cut = min(_cut(a.cutoff) + b.ord(), _cut(b.cutoff) + a.ord())
    if cut == INF:
        cut = None
        lim = INF
    else:
        cut = int(cut)
        lim = cut
    if len(a.items) > len(b.items):
        a, b = b, a
    bi = b.items
    acc: dict = {}
    get = acc.get
    for e1, c1 in a.items:
        room = lim - e1
        for e2, c2 in bi:
            if e2 >= room:
                break
            e = e1 + e2
            prev = get(e)
            acc[e] = c1 * c2 if prev is None else prev + c1 * c2
    items = [(e, c) for e, c in acc.items() if c]
    items.sort(key=lambda t: t[0])
    return USeries._raw(items, cut)


def series_inv(a: USeries, cutoff: int | None = None) -> USeries:
    """Multiplicative inverse; exact inputs need an explicit cutoff."""
    if not a.items:
        raise ZeroLeadingTerm("series is zero to working precision")
    v, c0 = a.items[0]
    if a.cutoff is None:
        if cutoff is None:
            if len(a.items) == 1:
                return USeries._raw([(-v, _inv_coeff(c0))], None)
            raise DomainError("inverse of a non-monomial exact series needs a cutoff")
        cut = cutoff
    else:
        cut = a.cutoff - 2 * v
        if cutoff is not None:
            cut = min(cut, cutoff)
    n = cut + v  # number of coefficients of the normalised inverse
    inv0 = _inv_coeff(c0)
    rel = {e - v: c for e, c in a.items[1:]}
    out = [None] * max(n, 0)
    for k in range(max(n, 0)):
        if k == 0:
            out[0] = inv0
            continue
        s = None
        for j, c in rel.items():
            if j > k:
                continue
            bj = out[k - j]
            if bj:
                s = c * bj if s is None else s + c * bj
        out[k] = -(s * inv0) if s is not None else None
    terms = {k - v: c for k, c in enumerate(out) if c is not None and c}
    return USeries(terms, cut)


def series_exp(a: USeries, cutoff: int | None = None) -> USeries:
    if a.items and a.items[0][0] < 1:
        raise DomainError("exp needs a series without constant or negative terms")
    cut = _min_cut(a.cutoff, cutoff)
    if cut is None:
        if not a.items:
            return USeries.one()
        raise DomainError("exp of an exact series needs a cutoff")
    ad = dict(a.items)
    b = [mpq(0)] * max(cut, 1)
    b[0] = mpq(1)
    for n in range(1, cut):
        s = None
        for k, c in ad.items():
            if k > n:
                continue
            if b[n - k]:
                t = c * (k * b[n - k])
                s = t if s is None else s + t
        b[n] = s / n if s is not None else mpq(0)
    return USeries({k: c for k, c in enumerate(b)}, cut)


def series_log(a: USeries, cutoff: int | None = None) -> USeries:
    if not a.items or a.items[0][0] != 0 or a.items[0][1] != 1:
        raise DomainError("log needs constant term 1")
    if any(e < 0 for e, _ in a.items):
        raise DomainError("log needs a power series")
    cut = _min_cut(a.cutoff, cutoff)
    if cut is None:
        if len(a.items) == 1:
            return USeries.zero()
        raise DomainError("log of an exact series needs a cutoff")
    ad = dict(a.items)
    b = [mpq(0)] * max(cut, 1)
    for n in range(1, cut):
        s = n * ad.get(n, 0)
        for k in range(1, n):
            if b[k] and (n - k) in ad:
                s -= k * b[k] * ad[n - k]
        b[n] = s / n
    return USeries({k: c for k, c in enumerate(b) if k > 0}, cut)


class QPoly:
    """Map from Q-degree to USeries, valid modulo ``Q**qdeg_cutoff``.

    Negative degrees are allowed (Laurent in Q).  Each coefficient keeps its
    own u-cutoff.
    """

    __slots__ = ("coeffs", "qdeg_cutoff")

    def __init__(self, coeffs=None, qdeg_cutoff: int | None = None):
        coeffs = dict(coeffs or {})
        out = {}
        for d, s in coeffs.items():
            if qdeg_cutoff is not None and d >= qdeg_cutoff:
                continue
            if not isinstance(s, USeries):
                s = USeries({0: rat(s)} if s else {})
            if s.is_zero() and s.cutoff is None:
                continue
            out[d] = s
        self.coeffs = dict(sorted(out.items()))
        self.qdeg_cutoff = qdeg_cutoff

    @classmethod
    def monomial(cls, d: int, s=None, qdeg_cutoff=None):
        if s is None:
            s = USeries.one()
        return cls({d: s}, qdeg_cutoff)

    def qord(self):
        for d, s in self.coeffs.items():
            if not s.is_zero():
                return d
        return _cut(self.qdeg_cutoff)

    def coefficient(self, d: int) -> USeries:
        if self.qdeg_cutoff is not None and d >= self.qdeg_cutoff:
            raise DomainError(f"Q^{d} is beyond the Q cutoff {self.qdeg_cutoff}")
        return self.coeffs.get(d, USeries.zero())

    def _lift(self, other):
        if isinstance(other, QPoly):
            return other
        return QPoly({0: other})

    def __add__(self, other):
        other = self._lift(other)
        cut = _min_cut(self.qdeg_cutoff, other.qdeg_cutoff)
        d = dict(self.coeffs)
        for k, s in other.coeffs.items():
            d[k] = d[k] + s if k in d else s
        return QPoly(d, cut)

    __radd__ = __add__

    def __neg__(self):
        return QPoly({k: -s for k, s in self.coeffs.items()}, self.qdeg_cutoff)

    def __sub__(self, other):
        return self + (-self._lift(other))

    def __rsub__(self, other):
        return self._lift(other) - self

    def __mul__(self, other):
        if isinstance(other, (int, Rat)):
            return QPoly({k: s.scale(rat(other)) for k, s in self.coeffs.items()}, self.qdeg_cutoff)
        if isinstance(other, USeries):
            other = QPoly({0: other})
        if not isinstance(other, QPoly):
            return NotImplemented
        cut = min(_cut(self.qdeg_cutoff) + other.qord(), _cut(other.qdeg_cutoff) + self.qord())
        cut = _uncut(cut)
        acc: dict = {}
        for d1, s1 in self.coeffs.items():
            for d2, s2 in other.coeffs.items():
                d = d1 + d2
                if cut is not None and d >= cut:
                    continue
                p = s1 * s2
                acc[d] = acc[d] + p if d in acc else p
        return QPoly(acc, cut)

    __rmul__ = __mul__

    def truncate_u(self, cutoff: int) -> "QPoly":
        return QPoly({k: s.truncate(cutoff) for k, s in self.coeffs.items()}, self.qdeg_cutoff)

    def truncate_q(self, qcut: int | None) -> "QPoly":
        return QPoly(self.coeffs, _min_cut(self.qdeg_cutoff, qcut))

    def is_zero(self) -> bool:
        return all(s.is_zero() for s in self.coeffs.values())

    def __eq__(self, other):
        return (self - self._lift(other)).is_zero()

    def __hash__(self):
        return hash(tuple(self.coeffs))

    def evaluate(self, u, Q) -> Rat:
        Q = rat(Q)
        return sum((s.evaluate(u) * Q**d for d, s in self.coeffs.items()), mpq(0))

    def to_json(self) -> dict:
        return {
            "var": "Q",
            "qdeg_cutoff": self.qdeg_cutoff,
            "coeffs": [[d, s.to_json()] for d, s in self.coeffs.items()],
        }

    def __repr__(self):
        return " + ".join(f"Q^{d}*[{s}]" for d, s in self.coeffs.items()) or "0"


def _is_zero_scalar(c) -> bool:
    if isinstance(c, (int, Rat)):
        return c == 0
    if isinstance(c, (USeries, QPoly)):
        return c.is_zero() and (not isinstance(c, USeries) or c.cutoff is None)
    if isinstance(c, LaurentQ):
        return not c
    if isinstance(c, TPoly):
        return not c.terms
    return not c


def scalar_is_zero(c) -> bool:
    """Zero modulo whatever truncation the value carries."""
    if isinstance(c, (USeries, QPoly)):
        return c.is_zero()
    if isinstance(c, TPoly):
        return all(scalar_is_zero(v) for v in c.terms.values())
    return not c


def scalar_to_json(c):
    if isinstance(c, (int, Rat)):
        return rat_str(c)
    if isinstance(c, flint.nmod):
        return f"{int(c)} mod {c.modulus()}"
    return c.to_json()


class TPoly:
    """Polynomial in named time variables, truncated at total degree D."""

    __slots__ = ("vars", "terms", "degree_cutoff")

    def __init__(self, variables: tuple, terms=None, degree_cutoff: int = 2):
        self.vars = tuple(variables)
        self.degree_cutoff = degree_cutoff
        out = {}
        for mono, c in (terms or {}).items():
            mono = tuple(mono)
            if len(mono) != len(self.vars):
                raise ValueError("monomial length does not match variables")
            if sum(mono) > degree_cutoff:
                continue
            if _is_zero_scalar(c):
                continue
            out[mono] = c
        self.terms = out

    @classmethod
    def constant(cls, variables, c, degree_cutoff=2):
        return cls(variables, {(0,) * len(variables): c}, degree_cutoff)

    @classmethod
    def variable(cls, variables, name, coeff=1, degree_cutoff=2):
        variables = tuple(variables)
        mono = tuple(1 if v == name else 0 for v in variables)
        if name not in variables:
            raise KeyError(name)
        return cls(variables, {mono: coeff}, degree_cutoff)

    def _like(self, terms, degree_cutoff=None):
        return TPoly(self.vars, terms, self.degree_cutoff if degree_cutoff is None else degree_cutoff)

    def _lift(self, other):
        if isinstance(other, TPoly):
            if other.vars != self.vars:
                raise ValueError("TPoly variable mismatch")
            return other
        return TPoly.constant(self.vars, other, self.degree_cutoff)

    def coefficient(self, mono) -> Any:
        return self.terms.get(tuple(mono), 0)

    def constant_term(self):
        return self.coefficient((0,) * len(self.vars))

    def __add__(self, other):
        other = self._lift(other)
        d = dict(self.terms)
        for m, c in other.terms.items():
            d[m] = d[m] + c if m in d else c
        return self._like(d, min(self.degree_cutoff, other.degree_cutoff))

    __radd__ = __add__

    def __neg__(self):
        return self._like({m: -c for m, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-self._lift(other))

    def __rsub__(self, other):
        return self._lift(other) - self

    def __mul__(self, other):
        if not isinstance(other, TPoly):
            return self._like({m: c * other for m, c in self.terms.items()})
        if other.vars != self.vars:
            raise ValueError("TPoly variable mismatch")
        D = min(self.degree_cutoff, other.degree_cutoff)
        acc: dict = {}
        for m1, c1 in self.terms.items():
            d1 = sum(m1)
            for m2, c2 in other.terms.items():
                if d1 + sum(m2) > D:
                    continue
                m = tuple(x + y for x, y in zip(m1, m2))
                p = c1 * c2
                acc[m] = acc[m] + p if m in acc else p
        return self._like(acc, D)

    def __rmul__(self, other):
        return self._like({m: other * c for m, c in self.terms.items()})

    def degree_part(self, n: int) -> "TPoly":
        return self._like({m: c for m, c in self.terms.items() if sum(m) == n})

    def substitute_signs(self, signs: dict) -> "TPoly":
        """Rescale variables by constants, e.g. {"t1": -1} for t1 -> -t1."""
        out = {}
        for m, c in self.terms.items():
            f = mpq(1)
            for v, e in zip(self.vars, m):
                if e and v in signs:
                    f *= rat(signs[v]) ** e
            out[m] = c * f if f != 1 else c
        return self._like(out)

    def map_coeffs(self, f) -> "TPoly":
        return self._like({m: f(c) for m, c in self.terms.items()})

    def evaluate(self, values: dict):
        """Substitute rational values for every variable (finite sum)."""
        total = None
        for m, c in self.terms.items():
            f = mpq(1)
            for v, e in zip(self.vars, m):
                if e:
                    f *= rat(values[v]) ** e
            term = c * f
            total = term if total is None else total + term
        return mpq(0) if total is None else total

    def is_zero(self) -> bool:
        return all(scalar_is_zero(c) for c in self.terms.values())

    def __eq__(self, other):
        return (self - self._lift(other)).is_zero()

    def __hash__(self):
        return hash((self.vars, tuple(sorted(self.terms))))

    def to_json(self) -> dict:
        return {
            "vars": list(self.vars),
            "degree_cutoff": self.degree_cutoff,
            "terms": [[list(m), scalar_to_json(c)] for m, c in sorted(self.terms.items())],
        }

    def __repr__(self):
        parts = []
        for m, c in sorted(self.terms.items()):
            mono = "*".join(f"{v}^{e}" for v, e in zip(self.vars, m) if e) or "1"
            parts.append(f"({c})*{mono}")
        return " + ".join(parts) or "0"


def tpoly_exp(x: TPoly) -> TPoly:
    """exp of a TPoly with zero constant term, truncated at its degree cutoff."""
    if not scalar_is_zero(x.constant_term()):
        raise DomainError("exp needs a TPoly without constant term")
    one = TPoly.constant(x.vars, mpq(1), x.degree_cutoff)
    result = one
    power = one
    fact = 1
    for n in range(1, x.degree_cutoff + 1):
        power = power * x
        fact *= n
        result = result + power * mpq(1, fact)
    return result


Scalar = Rat | USeries | QPoly


def exp_coefficients(times: dict, n_max: int, sign: int = 1) -> list:
    """Coefficients p_0..p_n_max of exp(sign * sum_k t_k z^k) (elementary Schur polynomials)."""
    t = {int(k): v for k, v in times.items() if not scalar_is_zero(v)}
    p = [mpq(1)]
    for n in range(1, n_max + 1):
        acc = None
        for k, tk in t.items():
            if k <= n:
                term = tk * p[n - k] * (k * sign)
                acc = term if acc is None else acc + term
        p.append(mpq(0) if acc is None else acc * mpq(1, n))
    return p


def _binomial_series(coeff, a: int, m: int, e: int, ucut: int, qcut):
    """(1 + coeff * Q^a * u^m)^e as a dict {(qdeg, uexp): rational}."""
    out = {(0, 0): mpq(1)}
    binom = mpq(1)
    j = 0
    power = mpq(1)
    while True:
        j += 1
        if m * j >= ucut:
            break
        if qcut is not None and a > 0 and a * j >= qcut:
            break
        binom = binom * (e - j + 1) / j
        if binom == 0:
            break
        power = power * coeff
        out[(a * j, m * j)] = binom * power
    return out


def product_truncated(factors: Iterable, cutoff: int, qdeg_cutoff: int | None = None,
                      max_factors: int = 10**6):
    """Expand a product of factors ``(1 + c u^m)^e`` to u-cutoff.

    Each factor is ``(coefficient, u_exponent, outer_exponent)`` where the
    coefficient is a rational or a ``QPoly`` monomial ``c*Q^a`` (given as a
    tuple ``(c, a)`` too).  The stream must be ordered by non-decreasing u
    exponent; it is consumed until the first factor at or beyond the cutoff.
    Returns a ``USeries``, or a ``QPoly`` when a Q-dependent factor occurs.
    """
    acc = {(0, 0): mpq(1)}
    uses_q = False
    last_m = None
    it: Iterator = iter(factors)
    for count, fac in enumerate(it):
        if count >= max_factors:
            raise NonTerminating("factor stream did not reach the cutoff")
        coeff, m, e = fac
        a = 0
        if isinstance(coeff, tuple):
            coeff, a = coeff
            uses_q = True
        elif isinstance(coeff, QPoly):
            ((a, s),) = coeff.coeffs.items()
            ((z, coeff),) = s.items
            if z != 0:
                raise DomainError("QPoly coefficient must be c*Q^a")
            uses_q = True
        coeff = rat(coeff)
        if m < 1:
            raise DomainError("factor u-exponents must be positive")
        if last_m is not None and m < last_m:
            raise NonTerminating("factor u-orders must not decrease")
        last_m = m
        if m >= cutoff:
            break
        if qdeg_cutoff is not None and a >= qdeg_cutoff:
            continue
        fac_terms = _binomial_series(coeff, a, m, e, cutoff, qdeg_cutoff)
        new: dict = {}
        for (qa, ua), ca in acc.items():
            for (qb, ub), cb in fac_terms.items():
                if ua + ub >= cutoff:
                    continue
                if qdeg_cutoff is not None and qa + qb >= qdeg_cutoff:
                    continue
                k = (qa + qb, ua + ub)
                new[k] = new.get(k, 0) + ca * cb
        acc = {k: v for k, v in new.items() if v}
    if not uses_q:
        return USeries({ue: c for (qa, ue), c in acc.items()}, cutoff)
    by_q: dict = {}
    for (qa, ue), c in acc.items():
        by_q.setdefault(qa, {})[ue] = c
    degrees = range(0, qdeg_cutoff) if qdeg_cutoff is not None else sorted(by_q)
    return QPoly({d: USeries(by_q.get(d, {}), cutoff) for d in degrees}, qdeg_cutoff)


def macmahon_factors() -> Iterator:
    n = 1
    while True:
        yield (-1, 2 * n, -n)
        n += 1


def macmahon(cutoff: int) -> USeries:
    """Pi_{n>=1}(1-q^n)^{-n} in u = q^(1/2)."""
    return product_truncated(macmahon_factors(), cutoff)


def triple_product_check(cutoff: int, z_degree: int) -> dict:
    """Compare both sides of the Jacobi triple product modulo u^cutoff.

    Left: Pi(1-q^n) Pi(1+q^(n-1/2) z) Pi(1+q^(n-1/2)/z), expanded factor by
    factor.  Right: sum_n q^(n^2/2) z^n.  Both are kept as maps from the
    z-degree to u-series.
    """
    if cutoff < 1:
        raise DomainError("cutoff must be positive")
    span = math.isqrt(max(cutoff, 1)) + z_degree + 2

    def poly_mul(a: dict, b: dict) -> dict:
        out: dict = {}
        for za, sa in a.items():
            for zb, sb in b.items():
                z = za + zb
                if abs(z) > span:
                    continue
                p = sa * sb
                out[z] = out[z] + p if z in out else p
        return out

    one = USeries.one(cutoff)
    euler = product_truncated(((-1, 2 * n, 1) for n in range(1, cutoff + 1)), cutoff)
    plus = {0: one}
    minus = {0: one}
    for n in range(1, (cutoff + 3) // 2):
        m = 2 * n - 1
        if m >= cutoff:
            break
        mono = USeries.monomial(m, 1, cutoff)
        plus = poly_mul(plus, {0: one, 1: mono})
        minus = poly_mul(minus, {0: one, -1: mono})
    lhs = poly_mul(poly_mul(plus, minus), {0: euler})
    residuals = {}
    worst = 0
    for k in range(-z_degree, z_degree + 1):
        left = lhs.get(k, USeries.zero(cutoff)).truncate(cutoff)
        right = USeries({k * k: 1}, cutoff)
        diff = left - right
        residuals[k] = diff
        worst = max(worst, len(diff.items))
    return {
        "identity": "jacobi_triple_product",
        "params": {"cutoff": cutoff, "z_degree": z_degree},
        "residual": "0" if worst == 0 else {str(k): v.to_json() for k, v in residuals.items() if not v.is_zero()},
        "status": "pass" if worst == 0 else "fail",
    }
