"""Exact scalars.

Two types live here:

``QI``
    Gaussian rationals ``p + q i`` with ``p, q`` in Q.  Used for degrees of
    homogeneity and for the small constants that appear in derivative and
    composition formulas.

``ExactScalar``
    Finite sums ``sum c * pi**(q2/2) * prod(log(p)**e)`` with Gaussian
    rational ``c``.  Sphere integrals produce the half-integer powers of pi,
    linear changes of variables ``xi -> c*xi`` produce ``log|c|``, which is
    stored as a combination of logarithms of primes so that equality stays
    decidable.
"""

from __future__ import annotations

import math
from fractions import Fraction
from typing import Iterable, Mapping

import gmpy2
from gmpy2 import mpq

__all__ = ["QI", "ExactScalar", "as_mpq", "parse_rational", "factorize"]


def as_mpq(x) -> mpq:
    """Coerce ints, Fractions, mpq and rational strings to ``mpq``."""
    if isinstance(x, type(mpq())):
        return x
    if isinstance(x, (int, type(gmpy2.mpz()))):
        return mpq(x)
    if isinstance(x, Fraction):
        return mpq(x.numerator, x.denominator)
    if isinstance(x, str):
        return parse_rational(x)
    if isinstance(x, QI):
        if x.im:
            raise ValueError(f"{x} is not real")
        return x.re
    raise TypeError(f"cannot convert {type(x).__name__} to an exact rational")


def parse_rational(text: str) -> mpq:
    text = text.strip()
    if "/" in text:
        num, den = text.split("/")
        return mpq(int(num), int(den))
    return mpq(Fraction(text).numerator, Fraction(text).denominator)


def _rat_str(x: mpq) -> str:
    return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


class QI:
    """Gaussian rational ``re + im*i``."""

    __slots__ = ("re", "im")

    def __init__(self, re=0, im=0):
        self.re = as_mpq(re)
        self.im = as_mpq(im)

    @classmethod
    def coerce(cls, x) -> "QI":
        if isinstance(x, QI):
            return x
        if isinstance(x, complex):
            raise TypeError("float complex values are not exact")
        return cls(x)

    @classmethod
    def _mk(cls, re: mpq, im: mpq) -> "QI":
        obj = object.__new__(cls)
        obj.re = re
        obj.im = im
        return obj

    def __add__(self, other):
        o = other if type(other) is QI else _qi_or_none(other)
        if o is None:
            return NotImplemented
        return QI._mk(self.re + o.re, self.im + o.im)

    __radd__ = __add__

    def __sub__(self, other):
        o = other if type(other) is QI else _qi_or_none(other)
        if o is None:
            return NotImplemented
        return QI._mk(self.re - o.re, self.im - o.im)

    def __rsub__(self, other):
        o = _qi_or_none(other)
        if o is None:
            return NotImplemented
        return o - self

    def __neg__(self):
        return QI._mk(-self.re, -self.im)

    def __mul__(self, other):
        o = other if type(other) is QI else _qi_or_none(other)
        if o is None:
            return NotImplemented
        if not self.im and not o.im:
            return QI._mk(self.re * o.re, self.im)
        return QI._mk(self.re * o.re - self.im * o.im, self.re * o.im + self.im * o.re)

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = _qi_or_none(other)
        if o is None:
            return NotImplemented
        d = o.re * o.re + o.im * o.im
        if d == 0:
            raise ZeroDivisionError("division by zero Gaussian rational")
        return QI((self.re * o.re + self.im * o.im) / d, (self.im * o.re - self.re * o.im) / d)

    def __rtruediv__(self, other):
        o = _qi_or_none(other)
        if o is None:
            return NotImplemented
        return o / self

    def __pow__(self, k: int):
        if not isinstance(k, int):
            return NotImplemented
        if k < 0:
            return QI(1) / (self ** (-k))
        out = QI(1)
        base = self
        while k:
            if k & 1:
                out = out * base
            base = base * base
            k >>= 1
        return out

    def conjugate(self) -> "QI":
        return QI(self.re, -self.im)

    def __eq__(self, other):
        o = _qi_or_none(other)
        if o is None:
            return NotImplemented
        return self.re == o.re and self.im == o.im

    def __hash__(self):
        return hash((self.re, self.im))

    def __bool__(self):
        return bool(self.re) or bool(self.im)

    @property
    def is_real(self) -> bool:
        return self.im == 0

    @property
    def is_integer(self) -> bool:
        return self.im == 0 and self.re.denominator == 1

    def __complex__(self):
        return complex(float(self.re), float(self.im))

    def __float__(self):
        if self.im:
            raise ValueError(f"{self} is not real")
        return float(self.re)

    def __repr__(self):
        return f"QI({self})"

    def __str__(self):
        if not self.im:
            return _rat_str(self.re)
        if not self.re:
            return f"{_rat_str(self.im)}i"
        sign = "+" if self.im > 0 else "-"
        return f"{_rat_str(self.re)}{sign}{_rat_str(abs(self.im))}i"


def _qi_or_none(x):
    if isinstance(x, QI):
        return x
    try:
        return QI(as_mpq(x))
    except TypeError:
        return None


_QZERO = QI(0)
_QONE = QI(1)


def factorize(n: int) -> dict[int, int]:
    """Prime factorisation of a positive integer (trial division)."""
    if n < 1:
        raise ValueError("factorize needs a positive integer")
    out: dict[int, int] = {}
    p = 2
    while p * p <= n:
        while n % p == 0:
            out[p] = out.get(p, 0) + 1
            n //= p
        p += 1 if p == 2 else 2
    if n > 1:
        out[n] = out.get(n, 0) + 1
    return out


def _merge_logs(a: tuple, b: tuple) -> tuple:
    if not a:
        return b
    if not b:
        return a
    d = dict(a)
    for p, e in b:
        d[p] = d.get(p, 0) + e
    return tuple(sorted(d.items()))


_BASE_KEY = (0, ())


class ExactScalar:
    """Exact element of ``Q(i)[sqrt(pi), 1/sqrt(pi), log 2, log 3, ...]``.

    ``terms`` maps ``(q2, logs)`` to a :class:`QI` coefficient, where the
    monomial is ``pi**(q2/2) * prod(log(p)**e for p, e in logs)``.  Zero
    coefficients are never stored, so two scalars are equal exactly when
    their term dictionaries agree.
    """

    __slots__ = ("terms", "_hash")

    def __init__(self, terms: Mapping | None = None):
        clean = {}
        if terms:
            for key, c in terms.items():
                c = QI.coerce(c)
                if c:
                    q2, logs = key
                    clean[(int(q2), tuple(sorted((int(p), int(e)) for p, e in logs if e)))] = c
        self.terms = clean
        self._hash = None

    @classmethod
    def _raw(cls, terms: dict) -> "ExactScalar":
        obj = cls.__new__(cls)
        obj.terms = terms
        obj._hash = None
        return obj

    @classmethod
    def of(cls, x) -> "ExactScalar":
        if isinstance(x, ExactScalar):
            return x
        c = QI.coerce(x)
        return cls._raw({_BASE_KEY: c} if c else {})

    @classmethod
    def pi_power(cls, q2: int, coeff=1) -> "ExactScalar":
        c = QI.coerce(coeff)
        return cls._raw({(int(q2), ()): c} if c else {})

    @classmethod
    def log_rational(cls, c) -> "ExactScalar":
        """``log(c)`` for a positive rational ``c``."""
        c = as_mpq(c)
        if c <= 0:
            raise ValueError("log of a non-positive rational")
        terms: dict = {}
        for p, e in factorize(int(c.numerator)).items():
            terms[(0, ((p, 1),))] = QI(e)
        for p, e in factorize(int(c.denominator)).items():
            key = (0, ((p, 1),))
            terms[key] = terms.get(key, _QZERO) - QI(e)
        return cls(terms)

    # ---- ring operations ----
    def __add__(self, other):
        o = _scalar_or_none(other)
        if o is None:
            return NotImplemented
        if not o.terms:
            return self
        if not self.terms:
            return o
        out = dict(self.terms)
        for k, c in o.terms.items():
            s = out.get(k)
            if s is None:
                out[k] = c
            else:
                s = s + c
                if s:
                    out[k] = s
                else:
                    del out[k]
        return ExactScalar._raw(out)

    __radd__ = __add__

    def __neg__(self):
        return ExactScalar._raw({k: -c for k, c in self.terms.items()})

    def __sub__(self, other):
        o = _scalar_or_none(other)
        if o is None:
            return NotImplemented
        return self + (-o)

    def __rsub__(self, other):
        o = _scalar_or_none(other)
        if o is None:
            return NotImplemented
        return o + (-self)

    def __mul__(self, other):
        if type(other) is ExactScalar:
            st, ot = self.terms, other.terms
            if len(st) == 1 and len(ot) == 1:
                (k1, c1), = st.items()
                (k2, c2), = ot.items()
                if k1 is _BASE_KEY or k1 == _BASE_KEY:
                    return ExactScalar._raw({k2: c1 * c2})
                if k2 == _BASE_KEY:
                    return ExactScalar._raw({k1: c1 * c2})
        if isinstance(other, QI):
            if not other:
                return ExactScalar._raw({})
            return ExactScalar._raw({k: c * other for k, c in self.terms.items()})
        o = _scalar_or_none(other)
        if o is None:
            return NotImplemented
        if len(o.terms) == 1 and _BASE_KEY in o.terms:
            return self * o.terms[_BASE_KEY]
        out: dict = {}
        for k1, c1 in self.terms.items():
            for k2, c2 in o.terms.items():
                k = (k1[0] + k2[0], _merge_logs(k1[1], k2[1]))
                c = c1 * c2
                s = out.get(k)
                out[k] = c if s is None else s + c
        return ExactScalar._raw({k: c for k, c in out.items() if c})

    __rmul__ = __mul__

    def __truediv__(self, other):
        """Division by a single monomial (e.g. a rational or ``pi**k``)."""
        o = _scalar_or_none(other)
        if o is None:
            return NotImplemented
        if len(o.terms) != 1:
            raise ZeroDivisionError("division only by a single exact monomial") if not o.terms \
                else ValueError("division only by a single exact monomial")
        (q2, logs), c = next(iter(o.terms.items()))
        if logs:
            raise ValueError("cannot divide by a logarithm")
        inv = _QONE / c
        return ExactScalar._raw({(k[0] - q2, k[1]): v * inv for k, v in self.terms.items()})

    def __pow__(self, k: int):
        if not isinstance(k, int) or k < 0:
            return NotImplemented
        out = ExactScalar.of(1)
        for _ in range(k):
            out = out * self
        return out

    def conjugate(self) -> "ExactScalar":
        return ExactScalar._raw({k: c.conjugate() for k, c in self.terms.items()})

    # ---- comparisons / conversions ----
    def __eq__(self, other):
        o = _scalar_or_none(other)
        if o is None:
            return NotImplemented
        return self.terms == o.terms

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(frozenset(self.terms.items()))
        return self._hash

    def __bool__(self):
        return bool(self.terms)

    @property
    def is_zero(self) -> bool:
        return not self.terms

    @property
    def is_rational(self) -> bool:
        return all(k == _BASE_KEY and c.is_real for k, c in self.terms.items())

    def as_qi(self) -> QI:
        """Return the value as a Gaussian rational; fails if pi or logs occur."""
        if not self.terms:
            return _QZERO
        if set(self.terms) != {_BASE_KEY}:
            raise ValueError(f"{self} is not a Gaussian rational")
        return self.terms[_BASE_KEY]

    def __complex__(self):
        total = 0j
        for (q2, logs), c in self.terms.items():
            w = math.pi ** (q2 / 2)
            for p, e in logs:
                w *= math.log(p) ** e
            total += complex(c) * w
        return total

    def __float__(self):
        z = complex(self)
        if any(c.im for c in self.terms.values()):
            raise ValueError(f"{self} is not real")
        return z.real

    def __repr__(self):
        return f"ExactScalar({self})"

    def __str__(self):
        if not self.terms:
            return "0"
        parts = []
        for (q2, logs), c in sorted(self.terms.items()):
            factors = []
            if q2:
                factors.append("pi" if q2 == 2 else f"pi^({_rat_str(mpq(q2, 2))})")
            factors.extend(f"log({p})" if e == 1 else f"log({p})^{e}" for p, e in logs)
            cs = str(c)
            if " " in cs or ("+" in cs[1:] or "-" in cs[1:]):
                cs = f"({cs})"
            if factors:
                parts.append("*".join(([] if c == _QONE else [cs]) + factors))
            else:
                parts.append(cs)
        return " + ".join(parts)

    # ---- JSON ----
    def to_json(self) -> dict:
        out = []
        for (q2, logs), c in sorted(self.terms.items()):
            entry = {
                "q2": q2,
                "re": [str(c.re.numerator), str(c.re.denominator)],
                "im": [str(c.im.numerator), str(c.im.denominator)],
            }
            if logs:
                entry["logs"] = [[p, e] for p, e in logs]
            out.append(entry)
        return {"pi_terms": out}

    @classmethod
    def from_json(cls, doc) -> "ExactScalar":
        if isinstance(doc, (int, str)):
            return cls.of(as_mpq(doc))
        terms = {}
        for entry in doc["pi_terms"]:
            re = mpq(int(entry["re"][0]), int(entry["re"][1]))
            im = mpq(int(entry["im"][0]), int(entry["im"][1]))
            logs = tuple((int(p), int(e)) for p, e in entry.get("logs", []))
            key = (int(entry["q2"]), tuple(sorted(logs)))
            if key in terms:
                raise ValueError("duplicate pi_terms entry")
            terms[key] = QI(re, im)
        return cls(terms)


def _scalar_or_none(x):
    if isinstance(x, ExactScalar):
        return x
    if isinstance(x, QI):
        return ExactScalar.of(x)
    try:
        return ExactScalar.of(as_mpq(x))
    except TypeError:
        return None


def exact_sum(items: Iterable[ExactScalar]) -> ExactScalar:
    total = ExactScalar.of(0)
    for x in items:
        total = total + x
    return total
