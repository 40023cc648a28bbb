"""Log-polyhomogeneous functions on R^n \\ {0} in the monomial-norm-log basis.

An element of ``P^{a,k}`` is stored as a sparse dictionary

    (beta, l) -> coefficient,   value = sum c * xi^beta * |xi|^(a-|beta|) * log^l|xi|

with a fixed degree ``a`` (a Gaussian rational).  Restricted to the unit
sphere ``xi^beta |xi|^(a-|beta|)`` is just the polynomial ``xi^beta``, so the
degree-``a`` homogeneous part is a copy of ``Q(i)[xi] / (|xi|^2 - 1)``.  The
normal form keeps only exponents with ``beta[-1] <= 1`` (rewriting
``xi_n^2 = |xi|^2 - sum_{i<n} xi_i^2``), which is a basis of that quotient;
equality of normal forms is therefore equality of functions.

Coefficients are ring elements that support ``+``, ``*``, truthiness and
scaling by :class:`~logphg.scalars.QI`.  The homogeneous core uses
:class:`~logphg.scalars.ExactScalar`; the symbol calculus plugs in
:class:`~logphg.trig.TrigPoly` to carry x-dependence.
"""

from __future__ import annotations

from collections import defaultdict
from functools import lru_cache
from math import factorial
from typing import Iterable, Mapping, NamedTuple, Sequence

import numpy as np
from gmpy2 import mpq

from .errors import (
    DegenerateDegree,
    DegreeMismatch,
    LogPhgError,
    ResidueObstruction,
    UnsupportedDimension,
    UnsupportedTransform,
)
from .scalars import QI, ExactScalar, as_mpq, factorize
from .trig import TrigPoly, as_matrix, identity, mat_det, mat_mul, mat_T

__all__ = [
    "MonomialTerm",
    "HomogeneousFn",
    "LogPolyhomFn",
    "sphere_integral_monomial",
    "sphere_volume",
    "lph_mul",
    "partial_deriv",
    "res_j",
    "euler_apply",
    "log_shift",
    "radial_primitive",
    "radial_divergence",
    "divergence",
    "divergence_decompose",
    "restrict_to_circle",
    "circle_to_homogeneous",
    "compose_linear",
    "scaled_orthogonal_factor",
    "rational_power",
]

Beta = tuple


class MonomialTerm(NamedTuple):
    coeff: object
    beta: Beta
    degree: QI


# --------------------------------------------------------------------------
# monomial-level machinery (cached; coefficient-free)
# --------------------------------------------------------------------------

@lru_cache(maxsize=None)
def _reduce_beta(beta: Beta) -> tuple:
    """Normal form of ``xi^beta`` on the sphere as ``((beta', int), ...)``."""
    if beta[-1] < 2:
        return ((beta, 1),)
    base = list(beta)
    base[-1] -= 2
    out: dict = defaultdict(int)
    for b, c in _reduce_beta(tuple(base)):
        out[b] += c
    for i in range(len(beta) - 1):
        b2 = list(base)
        b2[i] += 2
        for b, c in _reduce_beta(tuple(b2)):
            out[b] -= c
    return tuple((b, c) for b, c in sorted(out.items()) if c)


def _add_into(out: dict, beta: Beta, l: int, value) -> None:
    """Accumulate ``value * xi^beta log^l`` into ``out`` in normal form."""
    if beta and beta[-1] >= 2:
        for b, c in _reduce_beta(beta):
            _add_raw(out, (b, l), value * c if c != 1 else value)
    else:
        _add_raw(out, (beta, l), value)


def _add_raw(out: dict, key, value) -> None:
    cur = out.get(key)
    if cur is None:
        out[key] = value
    else:
        out[key] = cur + value


def _prune(out: dict) -> dict:
    return {k: v for k, v in out.items() if v}


@lru_cache(maxsize=None)
def _d_single(beta: Beta, l: int, s: QI, j: int) -> tuple:
    """``d/dxi_j`` of ``xi^beta |xi|^s log^l|xi|`` as ``((beta', l'), factor)``."""
    terms = []
    if beta[j]:
        b = list(beta)
        b[j] -= 1
        terms.append(((tuple(b), l), QI(beta[j])))
    up = list(beta)
    up[j] += 1
    up = tuple(up)
    if s:
        terms.append(((up, l), s))
    if l:
        terms.append(((up, l - 1), QI(l)))
    return tuple(terms)


@lru_cache(maxsize=None)
def _d_multi(beta: Beta, l: int, degree: QI, alpha: Beta) -> tuple:
    """``d_xi^alpha`` of a unit monomial of the given degree, normal form."""
    cur = {(beta, l): QI(1)}
    deg = degree
    for j, aj in enumerate(alpha):
        for _ in range(aj):
            nxt: dict = {}
            for (b, ll), c in cur.items():
                s = deg - sum(b)
                for (b2, l2), f in _d_single(b, ll, s, j):
                    _add_into(nxt, b2, l2, c * f)
            cur = _prune(nxt)
            deg = deg - 1
    return tuple(sorted(cur.items()))


def _gamma_half(N: int) -> tuple:
    """``Gamma(N/2)`` as ``(rational, has_sqrt_pi)`` for a positive integer ``N``."""
    if N % 2 == 0:
        return mpq(factorial(N // 2 - 1)), False
    k = (N - 1) // 2
    return mpq(factorial(2 * k), 4**k * factorial(k)), True


@lru_cache(maxsize=None)
def sphere_integral_monomial(beta: Sequence[int], n: int) -> ExactScalar:
    """Exact ``int_{S^{n-1}} xi^beta dsigma``.

    Zero when some exponent is odd, otherwise
    ``2 prod Gamma((beta_i+1)/2) / Gamma((n+|beta|)/2)``.
    """
    beta = tuple(int(b) for b in beta)
    if n < 1 or len(beta) != n:
        raise ValueError(f"multi-index {beta} does not match dimension {n}")
    if any(b % 2 for b in beta):
        return ExactScalar.of(0)
    num = mpq(2)
    sqrt_pi = 0
    for b in beta:
        g, h = _gamma_half(b + 1)
        num *= g
        sqrt_pi += h
    g, h = _gamma_half(n + sum(beta))
    sqrt_pi -= h
    return ExactScalar.pi_power(sqrt_pi, num / g)


def sphere_volume(n: int) -> ExactScalar:
    return sphere_integral_monomial((0,) * n, n)


# --------------------------------------------------------------------------
# value types
# --------------------------------------------------------------------------

def _as_degree(a) -> QI:
    if isinstance(a, QI):
        return a
    if isinstance(a, (tuple, list)):
        return QI(*a)
    return QI(as_mpq(a))


def _as_coeff(c):
    if isinstance(c, (ExactScalar, TrigPoly)):
        return c
    return ExactScalar.of(c)


class HomogeneousFn:
    """Homogeneous function of degree ``a``: ``sum c_beta xi^beta |xi|^(a-|beta|)``."""

    __slots__ = ("dim", "degree", "terms")

    def __init__(self, dim: int, degree, terms: Mapping | None = None):
        self.dim = int(dim)
        self.degree = _as_degree(degree)
        out: dict = {}
        for beta, c in (terms or {}).items():
            beta = tuple(int(b) for b in beta)
            if len(beta) != self.dim:
                raise ValueError("multi-index length differs from dimension")
            _add_into(out, beta, 0, _as_coeff(c))
        self.terms = {b: c for (b, _), c in _prune(out).items()}

    def monomials(self) -> list[MonomialTerm]:
        return [MonomialTerm(c, b, self.degree) for b, c in sorted(self.terms.items())]

    def with_log(self, l: int = 0) -> "LogPolyhomFn":
        return LogPolyhomFn(self.dim, self.degree, {(b, l): c for b, c in self.terms.items()})

    def __eq__(self, other):
        if not isinstance(other, HomogeneousFn):
            return NotImplemented
        return (self.dim, self.degree, self.terms) == (other.dim, other.degree, other.terms)

    def __bool__(self):
        return bool(self.terms)

    def __repr__(self):
        return f"HomogeneousFn(deg={self.degree}, {self.with_log()._body()})"


class LogPolyhomFn:
    """Element of ``P^{a,k}``: ``sum_j f_j(xi) log^j|xi|`` with ``f_j`` in ``P^{a,0}``.

    Immutable.  Arithmetic operators: ``+``, ``-``, ``*`` (product in the
    bigraded algebra, or scaling by a coefficient).
    """

    __slots__ = ("dim", "degree", "terms")

    def __init__(self, dim: int, degree, terms: Mapping | None = None):
        self.dim = int(dim)
        if self.dim < 1:
            raise ValueError("dimension must be >= 1")
        self.degree = _as_degree(degree)
        out: dict = {}
        for (beta, l), c in (terms or {}).items():
            beta = tuple(int(b) for b in beta)
            if len(beta) != self.dim:
                raise ValueError("multi-index length differs from dimension")
            if l < 0:
                raise ValueError("negative log power")
            _add_into(out, beta, int(l), _as_coeff(c))
        self.terms = _prune(out)

    @classmethod
    def _raw(cls, dim, degree, terms) -> "LogPolyhomFn":
        obj = cls.__new__(cls)
        obj.dim = dim
        obj.degree = degree
        obj.terms = terms
        return obj

    @classmethod
    def monomial(cls, dim: int, degree, beta=None, log: int = 0, coeff=1) -> "LogPolyhomFn":
        beta = tuple(beta) if beta is not None else (0,) * dim
        return cls(dim, degree, {(beta, log): coeff})

    @classmethod
    def from_components(cls, components: Sequence[HomogeneousFn]) -> "LogPolyhomFn":
        if not components:
            raise ValueError("need at least one component")
        dim, deg = components[0].dim, components[0].degree
        terms = {}
        for l, h in enumerate(components):
            if h.dim != dim or h.degree != deg:
                raise DegreeMismatch("components must share dimension and degree")
            for b, c in h.terms.items():
                terms[(b, l)] = c
        return cls(dim, deg, terms)

    @classmethod
    def zero(cls, dim: int, degree) -> "LogPolyhomFn":
        return cls._raw(int(dim), _as_degree(degree), {})

    # ---- structure ----
    @property
    def logk(self) -> int:
        return max((l for _, l in self.terms), default=0)

    def component(self, l: int) -> HomogeneousFn:
        h = HomogeneousFn(self.dim, self.degree)
        h.terms = {b: c for (b, ll), c in self.terms.items() if ll == l}
        return h

    @property
    def components(self) -> list[HomogeneousFn]:
        return [self.component(l) for l in range(self.logk + 1)]

    def log_level(self, l: int) -> "LogPolyhomFn":
        """The ``l``-th component as an element of ``P^{a,0}``."""
        return LogPolyhomFn._raw(
            self.dim, self.degree, {(b, 0): c for (b, ll), c in self.terms.items() if ll == l}
        )

    def monomials(self) -> list[tuple[MonomialTerm, int]]:
        return [(MonomialTerm(c, b, self.degree), l) for (b, l), c in sorted(self.terms.items())]

    def map_coeffs(self, fn) -> "LogPolyhomFn":
        return LogPolyhomFn._raw(
            self.dim, self.degree, _prune({k: fn(c) for k, c in self.terms.items()})
        )

    # ---- arithmetic ----
    def _same_space(self, other: "LogPolyhomFn"):
        if other.dim != self.dim:
            raise DegreeMismatch("dimension mismatch")
        if other.degree != self.degree and self.terms and other.terms:
            raise DegreeMismatch(f"degrees {self.degree} and {other.degree} differ")

    def __add__(self, other):
        if not isinstance(other, LogPolyhomFn):
            return NotImplemented
        self._same_space(other)
        if not other.terms:
            return self
        if not self.terms:
            return other
        out = dict(self.terms)
        for k, c in other.terms.items():
            _add_raw(out, k, c)
        return LogPolyhomFn._raw(self.dim, self.degree, _prune(out))

    def __neg__(self):
        return LogPolyhomFn._raw(self.dim, self.degree, {k: -c for k, c in self.terms.items()})

    def __sub__(self, other):
        if not isinstance(other, LogPolyhomFn):
            return NotImplemented
        return self + (-other)

    def __mul__(self, other):
        if isinstance(other, LogPolyhomFn):
            return lph_mul(self, other)
        return LogPolyhomFn._raw(
            self.dim, self.degree, _prune({k: c * other for k, c in self.terms.items()})
        )

    def __rmul__(self, other):
        return LogPolyhomFn._raw(
            self.dim, self.degree, _prune({k: other * c for k, c in self.terms.items()})
        )

    def times_coordinate(self, j: int) -> "LogPolyhomFn":
        """``xi_j * f`` (degree goes up by one)."""
        out: dict = {}
        for (b, l), c in self.terms.items():
            b2 = list(b)
            b2[j] += 1
            _add_into(out, tuple(b2), l, c)
        return LogPolyhomFn._raw(self.dim, self.degree + 1, _prune(out))

    def times_norm_power(self, t) -> "LogPolyhomFn":
        """``|xi|^t * f``."""
        return LogPolyhomFn._raw(self.dim, self.degree + _as_degree(t), dict(self.terms))

    def times_log(self, power: int = 1) -> "LogPolyhomFn":
        return LogPolyhomFn._raw(
            self.dim, self.degree, {(b, l + power): c for (b, l), c in self.terms.items()}
        )

    def with_degree(self, degree) -> "LogPolyhomFn":
        """Same coefficients, reinterpreted at another degree (templates)."""
        return LogPolyhomFn._raw(self.dim, _as_degree(degree), dict(self.terms))

    def conjugate(self) -> "LogPolyhomFn":
        return LogPolyhomFn._raw(
            self.dim, self.degree.conjugate(), {k: c.conjugate() for k, c in self.terms.items()}
        )

    def __eq__(self, other):
        if not isinstance(other, LogPolyhomFn):
            return NotImplemented
        if self.dim != other.dim or self.terms != other.terms:
            return False
        return self.degree == other.degree or not self.terms

    def __hash__(self):
        return hash((self.dim, self.degree, frozenset(self.terms.items())))

    def __bool__(self):
        return bool(self.terms)

    def _body(self) -> str:
        if not self.terms:
            return "0"
        parts = []
        for (b, l), c in sorted(self.terms.items()):
            mono = "*".join(f"x{i+1}^{e}" if e > 1 else f"x{i+1}" for i, e in enumerate(b) if e)
            s = self.degree - sum(b)
            norm = f"|x|^({s})" if s else ""
            lg = ("log|x|" if l == 1 else f"log^{l}|x|") if l else ""
            parts.append("*".join(x for x in (f"({c})", mono, norm, lg) if x))
        return " + ".join(parts)

    def __repr__(self):
        return f"LogPolyhomFn(n={self.dim}, deg={self.degree}: {self._body()})"

    # ---- numerics ----
    def __call__(self, points) -> np.ndarray:
        """Evaluate at points of shape ``(..., n)`` (scalar coefficients only)."""
        x = np.asarray(points, dtype=float)
        r = np.linalg.norm(x, axis=-1)
        logr = np.log(r)
        total = np.zeros(r.shape, dtype=complex)
        for (b, l), c in self.terms.items():
            s = complex(self.degree - sum(b))
            term = complex(c) * np.power(r, s) if s else np.full(r.shape, complex(c))
            for i, e in enumerate(b):
                if e:
                    term = term * x[..., i] ** e
            if l:
                term = term * logr**l
            total += term
        return total

    def radial_sphere_factors(self) -> dict[int, ExactScalar]:
        """``l -> int_{S^{n-1}} f_l`` for scalar-coefficient functions."""
        out: dict = {}
        for (b, l), c in self.terms.items():
            v = sphere_integral_monomial(b, self.dim)
            if v:
                _add_raw(out, l, c * v)
        return _prune(out)

    # ---- JSON ----
    def to_json(self) -> dict:
        from .serialize import degree_to_json, coeff_to_json

        comps = []
        for l in range(self.logk + 1 if self.terms else 0):
            comps.append(
                [
                    {"beta": list(b), "coeff": coeff_to_json(c)}
                    for (b, ll), c in sorted(self.terms.items())
                    if ll == l
                ]
            )
        return {
            "dim": self.dim,
            "degree": degree_to_json(self.degree),
            "logk": max(len(comps) - 1, 0),
            "components": comps,
        }

    @classmethod
    def from_json(cls, doc: dict) -> "LogPolyhomFn":
        from .serialize import degree_from_json, coeff_from_json

        terms = {}
        for l, comp in enumerate(doc["components"]):
            for t in comp:
                key = (tuple(int(v) for v in t["beta"]), l)
                if key in terms:
                    raise ValueError(f"duplicate term {key}")
                terms[key] = coeff_from_json(t["coeff"])
        out = cls(int(doc["dim"]), degree_from_json(doc["degree"]), terms)
        if "logk" in doc and out.terms and out.logk > int(doc["logk"]):
            raise ValueError("logk smaller than the highest log power present")
        return out


# --------------------------------------------------------------------------
# operations
# --------------------------------------------------------------------------

def lph_mul(f: LogPolyhomFn, g: LogPolyhomFn) -> LogPolyhomFn:
    """Product ``P^{a,k} x P^{b,l} -> P^{a+b,k+l}`` (exact Cauchy product in log powers)."""
    if f.dim != g.dim:
        raise DegreeMismatch("dimension mismatch")
    out: dict = {}
    for (b1, l1), c1 in f.terms.items():
        for (b2, l2), c2 in g.terms.items():
            _add_into(out, tuple(x + y for x, y in zip(b1, b2)), l1 + l2, c1 * c2)
    return LogPolyhomFn._raw(f.dim, f.degree + g.degree, _prune(out))


def partial_deriv_multi(f: LogPolyhomFn, alpha: Sequence[int]) -> LogPolyhomFn:
    alpha = tuple(alpha)
    out: dict = {}
    for (b, l), c in f.terms.items():
        for (b2, l2), factor in _d_multi(b, l, f.degree, alpha):
            _add_raw(out, (b2, l2), c * factor)
    return LogPolyhomFn._raw(f.dim, f.degree - sum(alpha), _prune(out))


def partial_deriv(f: LogPolyhomFn, j: int) -> LogPolyhomFn:
    """``d f / d xi_j``; degree drops by one, log degree does not grow."""
    if not 0 <= j < f.dim:
        raise ValueError(f"axis {j} out of range for dimension {f.dim}")
    alpha = [0] * f.dim
    alpha[j] = 1
    return partial_deriv_multi(f, alpha)


def divergence(fields: Sequence[LogPolyhomFn]) -> LogPolyhomFn:
    """``sum_j d f_j / d xi_j``."""
    if not fields:
        raise ValueError("empty vector field")
    total = partial_deriv(fields[0], 0)
    for j, fj in enumerate(fields[1:], start=1):
        total = total + partial_deriv(fj, j)
    return total


def res_j(f: LogPolyhomFn, j: int):
    """``int_{S^{n-1}} f_j``; requires degree exactly ``-n``."""
    if f.degree != QI(-f.dim):
        raise DegreeMismatch(f"res_j needs degree {-f.dim}, got {f.degree}")
    total = None
    for (b, l), c in f.terms.items():
        if l != j:
            continue
        v = sphere_integral_monomial(b, f.dim)
        if v:
            total = c * v if total is None else total + c * v
    return ExactScalar.of(0) if total is None else total


def log_shift(f: LogPolyhomFn) -> LogPolyhomFn:
    """``sum_l l f_l log^{l-1}|xi|``."""
    out = {(b, l - 1): c * QI(l) for (b, l), c in f.terms.items() if l}
    return LogPolyhomFn._raw(f.dim, f.degree, _prune(out))


def euler_apply(f: LogPolyhomFn) -> LogPolyhomFn:
    """``sum_j xi_j d f / d xi_j``, computed by differentiation."""
    total = LogPolyhomFn.zero(f.dim, f.degree)
    for j in range(f.dim):
        total = total + partial_deriv(f, j).times_coordinate(j)
    return total


def radial_divergence(F: LogPolyhomFn) -> LogPolyhomFn:
    """``sum_j d (xi_j F) / d xi_j``."""
    return divergence([F.times_coordinate(j) for j in range(F.dim)])


def radial_primitive(f: LogPolyhomFn) -> LogPolyhomFn:
    """``F`` in ``P^{a,k}`` with ``sum_j d_j (x_j F) = f``; needs ``a != -n``.

    ``g log^l`` maps to ``g sum_j (-1)^(l-j) l! / (j! (n+a)^(l-j+1)) log^j``.
    """
    c = f.degree + f.dim
    if not c:
        raise DegenerateDegree(f"no radial primitive at degree a = -n = {-f.dim}")
    out: dict = {}
    for (b, l), coeff in f.terms.items():
        for j in range(l + 1):
            factor = QI(mpq((-1) ** (l - j) * factorial(l), factorial(j))) / c ** (l - j + 1)
            _add_raw(out, (b, j), coeff * factor)
    return LogPolyhomFn._raw(f.dim, f.degree, _prune(out))


# --------------------------------------------------------------------------
# circle (n = 2) Fourier machinery
# --------------------------------------------------------------------------

@lru_cache(maxsize=None)
def _monomial_fourier(b1: int, b2: int) -> tuple:
    """Fourier modes of ``cos^b1 sin^b2`` as ``((k, QI), ...)``."""
    # cos = (z + 1/z)/2, sin = (z - 1/z)/(2i), z = e^{i theta}
    poly = {0: QI(1)}
    for factor in [{1: QI(mpq(1, 2)), -1: QI(mpq(1, 2))}] * b1 + \
                  [{1: QI(0, mpq(-1, 2)), -1: QI(0, mpq(1, 2))}] * b2:
        nxt: dict = defaultdict(lambda: QI(0))
        for k1, c1 in poly.items():
            for k2, c2 in factor.items():
                nxt[k1 + k2] = nxt[k1 + k2] + c1 * c2
        poly = {k: c for k, c in nxt.items() if c}
    return tuple(sorted(poly.items()))


def restrict_to_circle(h) -> TrigPoly:
    """Fourier series of ``h`` restricted to ``S^1`` (as a 1-d :class:`TrigPoly`)."""
    if isinstance(h, LogPolyhomFn):
        if h.logk:
            raise ValueError("restrict_to_circle takes a homogeneous (log-free) function")
        h = h.component(0)
    if h.dim != 2:
        raise UnsupportedDimension("restriction to the circle needs n = 2")
    modes: dict = {}
    for (b1, b2), c in h.terms.items():
        for k, f in _monomial_fourier(b1, b2):
            _add_raw(modes, (k,), c * f)
    return TrigPoly(1, _prune(modes))


def circle_to_homogeneous(series: TrigPoly, degree) -> LogPolyhomFn:
    """Inverse of :func:`restrict_to_circle`: extend by homogeneity of ``degree``."""
    if series.dim != 1:
        raise UnsupportedDimension("expected a Fourier series on the circle")
    deg = _as_degree(degree)
    # e^{ik theta} = (xi_1 + i xi_2)^k, e^{-ik theta} = (xi_1 - i xi_2)^k on S^1
    out: dict = {}
    for (k,), c in series.modes.items():
        sgn = 1 if k >= 0 else -1
        m = abs(k)
        for j in range(m + 1):
            binom = factorial(m) // (factorial(j) * factorial(m - j))
            f = QI(binom) * QI(0, sgn) ** (m - j)
            _add_into(out, (j, m - j), 0, c * f)
    return LogPolyhomFn._raw(2, deg, _prune(out))


def _solve_circle_laplacian(g: TrigPoly) -> TrigPoly:
    """Mean-zero solution of ``-F'' = g`` on the circle; ``g`` must have mean zero."""
    if g.mode0():
        raise ResidueObstruction("right-hand side has nonzero mean")
    return TrigPoly(1, {m: c * QI(mpq(1, m[0] * m[0])) for m, c in g.modes.items()})


def divergence_decompose(f: LogPolyhomFn, k: int | None = None) -> list[LogPolyhomFn]:
    """Write ``f`` as ``sum_j d f_j / d xi_j`` with ``f_j`` in ``P^{a+1,k}``.

    ``k`` is the log level of the class ``f`` is taken in (default: the
    highest log power present); a larger ``k`` lets the decomposition raise
    the log power by one.

    For ``a != -n`` the radial primitive gives ``f_j = xi_j F``.  At the
    critical degree (implemented for ``n = 2``) the top residue must vanish;
    ``res_{k-1}`` is first removed with the identity
    ``sum_j d_j (xi_j |xi|^-n log^k) = k |xi|^-n log^{k-1}`` and the rest is
    ``Delta F`` with ``F`` solved mode by mode on the circle.
    """
    n = f.dim
    if f.degree != QI(-n):
        F = radial_primitive(f)
        parts = [F.times_coordinate(j) for j in range(n)]
    else:
        if n != 2:
            raise UnsupportedDimension("critical-degree decomposition is implemented for n = 2")
        if k is None:
            k = f.logk
        elif k < f.logk:
            raise ValueError(f"class level k = {k} is below the log power {f.logk} of f")
        parts = _decompose_critical_2d(f, k)
    if divergence(parts) != f:
        raise LogPhgError("internal error: divergence decomposition failed verification")
    return parts


def _decompose_critical_2d(f: LogPolyhomFn, k: int) -> list[LogPolyhomFn]:
    top = res_j(f, k)
    if top:
        raise ResidueObstruction(f"res_{k}(f) = {top} is nonzero")
    deg = f.degree
    parts = [LogPolyhomFn.zero(2, deg + 1), LogPolyhomFn.zero(2, deg + 1)]
    rest = f
    if k >= 1:
        r = res_j(f, k - 1)
        if r:
            c = r / ExactScalar.pi_power(2, 2)  # res_{k-1} / vol(S^1)
            radial = LogPolyhomFn.monomial(2, deg, log=k, coeff=c * QI(mpq(1, k)))
            parts = [radial.times_coordinate(j) for j in range(2)]
            rest = f - LogPolyhomFn.monomial(2, deg, log=k - 1, coeff=c)
    if not rest:
        return parts
    g = {l: restrict_to_circle(rest.component(l)) for l in range(k + 1)}
    zero = TrigPoly(1)
    F: dict = {}
    for j in range(k, -1, -1):
        rhs = g.get(j, zero)
        if j + 2 <= k:
            # constant shift of F_{j+2} is free; use it to make rhs mean-free
            rhs_pre = rhs + F[j + 2] * QI((j + 1) * (j + 2))
            shift = rhs_pre.mode0() * QI(mpq(-1, (j + 1) * (j + 2)))
            F[j + 2] = F[j + 2] + TrigPoly.constant(1, shift)
            rhs = rhs + F[j + 2] * QI((j + 1) * (j + 2))
        F[j] = _solve_circle_laplacian(rhs)
    Fh = LogPolyhomFn.zero(2, 0)
    for j, series in F.items():
        Fh = Fh + circle_to_homogeneous(series, 0).times_log(j)
    # f = Delta F = -sum_j d_j^2 F  =>  f_j = -d_j F
    return [parts[j] - partial_deriv(Fh, j) for j in range(2)]


# --------------------------------------------------------------------------
# linear changes of variables xi -> T xi with T = c * O
# --------------------------------------------------------------------------

def _rational_sqrt(q: mpq):
    if q < 0:
        return None
    from gmpy2 import is_square, isqrt

    num, den = int(q.numerator), int(q.denominator)
    if is_square(num) and is_square(den):
        return mpq(int(isqrt(num)), int(isqrt(den)))
    return None


def scaled_orthogonal_factor(T) -> mpq:
    """Return ``c > 0`` with ``T = c O``, ``O`` rational orthogonal, or raise."""
    T = as_matrix(T)
    n = len(T)
    g = mat_mul(mat_T(T), T)
    c2 = g[0][0]
    if c2 == 0 or any(g[i][j] != (c2 if i == j else 0) for i in range(n) for j in range(n)):
        raise UnsupportedTransform("matrix is not a scalar multiple of an orthogonal matrix")
    c = _rational_sqrt(c2)
    if c is None:
        raise UnsupportedTransform("scale factor of T is irrational")
    return c


def rational_power(c: mpq, e: QI) -> mpq:
    """``c**e`` for ``c > 0`` when the result is rational, else raise."""
    c = as_mpq(c)
    if c == 1:
        return mpq(1)
    if e.im:
        raise UnsupportedTransform("complex power of a scale factor is not exact")
    p, q = int(e.re.numerator), int(e.re.denominator)
    num, den = int(c.numerator), int(c.denominator)
    from gmpy2 import iroot

    rn, exact_n = iroot(num, q)
    rd, exact_d = iroot(den, q)
    if not (exact_n and exact_d):
        raise UnsupportedTransform(f"{c}^({e}) is irrational")
    base = mpq(int(rn), int(rd))
    return base**p if p >= 0 else 1 / base ** (-p)


@lru_cache(maxsize=None)
def _linear_monomial(beta: Beta, T: tuple) -> tuple:
    """Expand ``(T xi)^beta`` as ``((beta', coeff mpq), ...)``."""
    n = len(beta)
    poly = {(0,) * n: mpq(1)}
    for i, e in enumerate(beta):
        row = T[i]
        for _ in range(e):
            nxt: dict = defaultdict(lambda: mpq(0))
            for b, c in poly.items():
                for j in range(n):
                    if row[j]:
                        b2 = list(b)
                        b2[j] += 1
                        nxt[tuple(b2)] += c * row[j]
            poly = {b: c for b, c in nxt.items() if c}
    return tuple(sorted(poly.items()))


def compose_linear(f: LogPolyhomFn, T) -> LogPolyhomFn:
    """``xi -> f(T xi)`` for ``T = c O`` (stays in the monomial-norm-log basis).

    ``|T xi| = c |xi|`` so ``|T xi|^s log^l|T xi| = c^s |xi|^s (log|xi| + log c)^l``.
    """
    T = as_matrix(T)
    if len(T) != f.dim:
        raise DegreeMismatch("matrix dimension differs from function dimension")
    c = scaled_orthogonal_factor(T)
    logc = ExactScalar.log_rational(c) if c != 1 else None
    out: dict = {}
    for (b, l), coeff in f.terms.items():
        s = f.degree - sum(b)
        scale = rational_power(c, s)
        for b2, lc in _linear_monomial(b, T):
            base = coeff * QI(lc * scale)
            for r in range(l + 1):
                if r < l and logc is None:
                    continue
                binom = factorial(l) // (factorial(r) * factorial(l - r))
                v = base * QI(binom)
                if r < l:
                    v = v * logc ** (l - r)
                _add_into(out, b2, r, v)
    return LogPolyhomFn._raw(f.dim, f.degree, _prune(out))


def is_identity(T) -> bool:
    T = as_matrix(T)
    return T == identity(len(T))


def abs_det(T) -> mpq:
    return abs(mat_det(as_matrix(T)))
