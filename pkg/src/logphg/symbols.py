"""Finite log-polyhomogeneous symbols on flat tori.

A :class:`SymbolExpansion` of order ``m`` is the finite sum

    sigma(x, xi) = psi(xi) * sum_j a_{m-j}(x, xi),    a_{m-j} in P^{m-j,k}(T^n, R^n)

whose components are :class:`~logphg.homogeneous.LogPolyhomFn` objects with
:class:`~logphg.trig.TrigPoly` coefficients.  Because the sum is finite, every
formula of the calculus (composition, adjoint, commutators) is an exact
finite computation at each fixed degree; ``depth`` records the lowest degree
that is still known after a truncated composition (``None`` = exact).
"""

from __future__ import annotations

import itertools
import math
from functools import lru_cache
from math import factorial
from typing import Iterable, Mapping, Sequence

from gmpy2 import mpq

from .errors import EmptySymbol, LogPhgError, UnsupportedTransform
from .homogeneous import (
    LogPolyhomFn,
    _as_degree,
    compose_linear,
    lph_mul,
    partial_deriv_multi,
    res_j,
)
from .scalars import QI, ExactScalar, as_mpq
from .serialize import coeff_from_json, coeff_to_json, degree_from_json, degree_to_json, rat_from_json, rat_to_json
from .trig import TrigPoly, as_matrix, mat_inv, mat_mul, mat_T

__all__ = [
    "SymbolExpansion",
    "ResidueDensity",
    "compose",
    "adjoint",
    "commutator",
    "leading_symbol",
    "residue_density",
    "Res_k",
    "poisson_bracket",
    "pushforward_linear",
    "nabla_P",
    "multi_indices",
    "DEFAULT_DEPTH_SPAN",
]

ResidueDensity = TrigPoly

DEFAULT_DEPTH_SPAN = 6


@lru_cache(maxsize=None)
def multi_indices(n: int, total: int) -> tuple:
    """All ``alpha`` in ``Z_+^n`` with ``|alpha| = total``."""
    if n == 1:
        return ((total,),)
    out = []
    for first in range(total, -1, -1):
        for rest in multi_indices(n - 1, total - first):
            out.append((first,) + rest)
    return tuple(out)


@lru_cache(maxsize=None)
def _alpha_factor(alpha: tuple) -> QI:
    """``i^{-|alpha|} / alpha!``."""
    denom = 1
    for a in alpha:
        denom *= factorial(a)
    return QI(0, -1) ** sum(alpha) * QI(mpq(1, denom))


def _lift(f: LogPolyhomFn, dual=None) -> LogPolyhomFn:
    """Promote scalar coefficients to constant trigonometric polynomials."""
    def conv(c):
        if isinstance(c, TrigPoly):
            return c
        return TrigPoly.constant(f.dim, c, dual)

    if all(isinstance(c, TrigPoly) for c in f.terms.values()):
        return f
    return f.map_coeffs(conv)


def _dual_of(f: LogPolyhomFn):
    for c in f.terms.values():
        if isinstance(c, TrigPoly):
            return c.dual
    return None


def _real_floor(x) -> int:
    return math.floor(x)


class SymbolExpansion:
    """Finite log-polyhomogeneous symbol ``psi * sum_j a_{m-j}`` on a torus."""

    __slots__ = ("dim", "order", "components", "depth", "dual")

    def __init__(
        self,
        dim: int,
        order,
        components: Mapping[int, LogPolyhomFn] | Sequence[LogPolyhomFn] | None = None,
        depth=None,
        dual=None,
    ):
        self.dim = int(dim)
        self.order = _as_degree(order)
        self.dual = None if dual is None else TrigPoly(self.dim, {}, dual).dual
        self.depth = None if depth is None else as_mpq(depth)
        if components is None:
            components = {}
        if not isinstance(components, Mapping):
            components = dict(enumerate(components))
        comps = {}
        for j, f in components.items():
            j = int(j)
            if j < 0:
                raise ValueError("component index must be >= 0")
            if f.dim != self.dim:
                raise ValueError("component dimension mismatch")
            if f.terms and f.degree != self.order - j:
                raise ValueError(f"component {j} has degree {f.degree}, expected {self.order - j}")
            f = _lift(f.with_degree(self.order - j), self.dual)
            if any(c.dual != self.dual for c in f.terms.values()):
                raise ValueError("component lives on a different torus")
            if f.terms and (self.depth is None or (self.order - j).re >= self.depth):
                comps[j] = f
        self.components = comps

    @classmethod
    def _raw(cls, dim, order, comps, depth, dual) -> "SymbolExpansion":
        obj = cls.__new__(cls)
        obj.dim, obj.order, obj.components, obj.depth, obj.dual = dim, order, comps, depth, dual
        return obj

    # ---- convenient constructors ----
    @classmethod
    def from_terms(cls, dim: int, order, terms: Iterable, depth=None, dual=None) -> "SymbolExpansion":
        """Build from ``(j, beta, l, coeff)`` tuples; ``coeff`` is a scalar,
        a :class:`TrigPoly`, or a ``{mode: scalar}`` mapping."""
        order = _as_degree(order)
        by_j: dict = {}
        for j, beta, l, coeff in terms:
            if isinstance(coeff, Mapping):
                coeff = TrigPoly(dim, coeff, dual)
            elif not isinstance(coeff, TrigPoly):
                coeff = TrigPoly.constant(dim, coeff, dual)
            by_j.setdefault(j, {})
            key = (tuple(beta), l)
            by_j[j][key] = by_j[j][key] + coeff if key in by_j[j] else coeff
        comps = {j: LogPolyhomFn(dim, order - j, t) for j, t in by_j.items()}
        return cls(dim, order, comps, depth, dual)

    @classmethod
    def multiplication(cls, trig: TrigPoly) -> "SymbolExpansion":
        """Order-zero symbol of the multiplication operator by ``trig``."""
        return cls(trig.dim, 0, {0: LogPolyhomFn(trig.dim, 0, {((0,) * trig.dim, 0): trig})},
                   dual=trig.dual)

    @classmethod
    def x_independent(cls, f: LogPolyhomFn, extra: Sequence[LogPolyhomFn] = ()) -> "SymbolExpansion":
        comps = {0: f}
        for g in extra:
            comps[int((f.degree - g.degree).re)] = g
        return cls(f.dim, f.degree, comps)

    # ---- structure ----
    def component(self, j: int) -> LogPolyhomFn:
        f = self.components.get(j)
        if f is None:
            return LogPolyhomFn.zero(self.dim, self.order - j)
        return f

    def component_at(self, degree) -> LogPolyhomFn:
        d = _as_degree(degree)
        off = self.order - d
        if not off.is_integer or off.re < 0:
            return LogPolyhomFn.zero(self.dim, d)
        return self.component(int(off.re))

    def knows_degree(self, degree) -> bool:
        d = _as_degree(degree)
        return self.depth is None or d.re >= self.depth

    @property
    def logk(self) -> int:
        return max((f.logk for f in self.components.values()), default=0)

    @property
    def max_offset(self) -> int:
        return max(self.components, default=-1)

    def is_x_independent(self) -> bool:
        return all(c.is_constant for f in self.components.values() for c in f.terms.values())

    def truncate(self, depth) -> "SymbolExpansion":
        d = as_mpq(depth)
        if self.depth is not None:
            d = max(d, self.depth)
        return SymbolExpansion(self.dim, self.order, self.components, d, self.dual)

    def _compat(self, other: "SymbolExpansion"):
        if self.dim != other.dim or self.dual != other.dual:
            raise ValueError("symbols live on different tori")
        if self.order - other.order != 0 and not (self.order - other.order).is_integer:
            raise ValueError("orders differ by a non-integer")

    def __add__(self, other):
        if not isinstance(other, SymbolExpansion):
            return NotImplemented
        self._compat(other)
        top = self.order if (self.order - other.order).re >= 0 else other.order
        comps: dict = {}
        for s in (self, other):
            shift = int((top - s.order).re)
            for j, f in s.components.items():
                comps[j + shift] = comps[j + shift] + f if j + shift in comps else f
        depth = _max_depth(self.depth, other.depth)
        return SymbolExpansion(self.dim, top, comps, depth, self.dual)

    def __neg__(self):
        return SymbolExpansion._raw(
            self.dim, self.order, {j: -f for j, f in self.components.items()}, self.depth, self.dual
        )

    def __sub__(self, other):
        if not isinstance(other, SymbolExpansion):
            return NotImplemented
        return self + (-other)

    def __mul__(self, scalar):
        if isinstance(scalar, SymbolExpansion):
            return compose(self, scalar)
        comps = {j: f * scalar for j, f in self.components.items()}
        return SymbolExpansion(self.dim, self.order, {j: f for j, f in comps.items() if f},
                               self.depth, self.dual)

    __rmul__ = __mul__

    def is_zero(self) -> bool:
        return not self.components

    def __eq__(self, other):
        if not isinstance(other, SymbolExpansion):
            return NotImplemented
        return (
            self.dim == other.dim
            and self.dual == other.dual
            and self.depth == other.depth
            and (self.order == other.order or not (self.components or other.components))
            and self.components == other.components
        )

    def agrees_with(self, other: "SymbolExpansion", depth=None) -> bool:
        """Equality of all components at degrees both symbols know (and >= depth)."""
        diff = self - other
        lim = diff.depth if depth is None else _max_depth(diff.depth, as_mpq(depth))
        return all(
            lim is not None and (diff.order - j).re < lim for j in diff.components
        )

    def __repr__(self):
        body = ", ".join(f"[{self.order - j}] {f._body()}" for j, f in sorted(self.components.items()))
        return f"SymbolExpansion(n={self.dim}, order={self.order}, depth={self.depth}: {body})"

    # ---- JSON ----
    def to_json(self) -> dict:
        comps = []
        for j, f in sorted(self.components.items()):
            terms = []
            for (b, l), c in sorted(f.terms.items()):
                terms.append(
                    {
                        "beta": list(b),
                        "log": l,
                        "xmodes": [
                            {"m": list(m), "coeff": coeff_to_json(v)} for m, v in sorted(c.modes.items())
                        ],
                    }
                )
            comps.append({"degree_offset": j, "terms": terms})
        doc = {
            "dim": self.dim,
            "order": degree_to_json(self.order),
            "logk": self.logk,
            "components": comps,
        }
        if self.depth is not None:
            doc["depth"] = rat_to_json(self.depth)
        if self.dual is not None:
            doc["dual"] = [[rat_to_json(v) for v in row] for row in self.dual]
        return doc

    @classmethod
    def from_json(cls, doc: dict) -> "SymbolExpansion":
        dim = int(doc["dim"])
        order = degree_from_json(doc["order"])
        dual = doc.get("dual")
        if dual is not None:
            dual = [[rat_from_json(v) for v in row] for row in dual]
        depth = doc.get("depth")
        if depth is not None:
            depth = rat_from_json(depth)
        comps = {}
        for comp in doc["components"]:
            j = int(comp["degree_offset"])
            if j in comps:
                raise ValueError(f"duplicate degree_offset {j}")
            terms = {}
            for t in comp["terms"]:
                key = (tuple(int(v) for v in t["beta"]), int(t.get("log", 0)))
                modes = {}
                for xm in t["xmodes"]:
                    m = tuple(int(v) for v in xm["m"])
                    if m in modes:
                        raise ValueError(f"duplicate mode {m}")
                    modes[m] = coeff_from_json(xm["coeff"])
                if key in terms:
                    raise ValueError(f"duplicate term {key}")
                terms[key] = TrigPoly(dim, modes, dual)
            comps[j] = LogPolyhomFn(dim, order - j, terms)
        out = cls(dim, order, comps, depth, dual)
        if "logk" in doc and out.logk > int(doc["logk"]):
            raise ValueError("logk smaller than the highest log power present")
        return out


def _max_depth(a, b):
    if a is None:
        return b
    if b is None:
        return a
    return max(a, b)


def _effective_depth(A: SymbolExpansion, B: SymbolExpansion, depth):
    top = (A.order + B.order).re
    if depth is None:
        depth = top - DEFAULT_DEPTH_SPAN
    d = as_mpq(depth)
    if A.depth is not None:
        d = max(d, A.depth + B.order.re)
    if B.depth is not None:
        d = max(d, B.depth + A.order.re)
    return d


def _x_derivs(b: LogPolyhomFn, alpha: tuple) -> LogPolyhomFn:
    if not any(alpha):
        return b
    return b.map_coeffs(lambda c: c.dx_multi(alpha))


def compose(A: SymbolExpansion, B: SymbolExpansion, depth=None) -> SymbolExpansion:
    """Symbol of ``AB``: ``sum_alpha i^{-|alpha|}/alpha! (d_xi^alpha a)(d_x^alpha b)``.

    Retains the degrees ``>= depth`` (default: ``ord(A) + ord(B) - 6``).  At
    each retained degree the sum over ``(alpha, l, l')`` is finite and exact.
    """
    if A.dim != B.dim or A.dual != B.dual:
        raise ValueError("symbols live on different tori")
    n = A.dim
    order = A.order + B.order
    d = _effective_depth(A, B, depth)
    J = _real_floor(order.re - d)
    comps: dict = {}
    if J >= 0:
        for lb, b in B.components.items():
            for r in range(0, J - lb + 1):
                for alpha in multi_indices(n, r):
                    db = _x_derivs(b, alpha)
                    if not db:
                        continue
                    fac = _alpha_factor(alpha)
                    for la, a in A.components.items():
                        t = la + lb + r
                        if t > J:
                            continue
                        da = partial_deriv_multi(a, alpha) if r else a
                        if not da:
                            continue
                        prod = lph_mul(da, db)
                        if r:
                            prod = prod * fac
                        comps[t] = comps[t] + prod if t in comps else prod
    return SymbolExpansion(n, order, {t: f for t, f in comps.items() if f}, d, A.dual)


def adjoint(A: SymbolExpansion, depth=None) -> SymbolExpansion:
    """Symbol of the formal adjoint: ``sum_alpha i^{-|alpha|}/alpha! d_xi^alpha d_x^alpha conj(a)``."""
    n = A.dim
    order = A.order.conjugate()
    if depth is None:
        depth = order.re - DEFAULT_DEPTH_SPAN
    d = as_mpq(depth)
    if A.depth is not None:
        d = max(d, A.depth)
    J = _real_floor(order.re - d)
    comps: dict = {}
    for l, a in A.components.items():
        ac = a.conjugate()
        for r in range(0, J - l + 1):
            for alpha in multi_indices(n, r):
                term = partial_deriv_multi(_x_derivs(ac, alpha), alpha) if r else ac
                if not term:
                    continue
                if r:
                    term = term * _alpha_factor(alpha)
                t = l + r
                comps[t] = comps[t] + term if t in comps else term
    return SymbolExpansion(n, order, {t: f for t, f in comps.items() if f}, d, A.dual)


def commutator(A: SymbolExpansion, B: SymbolExpansion, depth=None) -> SymbolExpansion:
    """``compose(A, B) - compose(B, A)``."""
    return compose(A, B, depth) - compose(B, A, depth)


def leading_symbol(A: SymbolExpansion) -> LogPolyhomFn:
    f = A.components.get(0)
    if f is None:
        raise EmptySymbol("top component vanishes")
    return f


def _critical_offset(A: SymbolExpansion):
    off = A.order + A.dim
    if not off.is_integer or off.re < 0:
        return None
    return int(off.re)


def residue_density(A: SymbolExpansion, k: int) -> TrigPoly:
    """``(k+1)!/(2 pi)^n * int_{|xi|=1} a_{-n,k}(x, xi) |dxi|`` as a trigonometric polynomial."""
    n = A.dim
    zero = TrigPoly(n, {}, A.dual)
    if not A.knows_degree(-n):
        raise LogPhgError(f"symbol truncated at depth {A.depth} above degree {-n}")
    j = _critical_offset(A)
    if j is None:
        return zero
    comp = A.components.get(j)
    if comp is None:
        return zero
    r = res_j(comp, k)
    if not r:
        return zero
    return r * ExactScalar.pi_power(-2 * n, mpq(factorial(k + 1), 2**n))


def Res_k(A: SymbolExpansion, k: int) -> ExactScalar:
    """Higher noncommutative residue via the local formula: ``vol(T) * mode_0(density)``."""
    return residue_density(A, k).integral()


def poisson_bracket(f: LogPolyhomFn, g: LogPolyhomFn) -> LogPolyhomFn:
    """``{f, g} = sum_j d_xi_j f d_x_j g - d_x_j f d_xi_j g``."""
    if f.dim != g.dim:
        raise ValueError("dimension mismatch")
    n = f.dim
    dual = _dual_of(f) or _dual_of(g)
    f, g = _lift(f, dual), _lift(g, dual)
    total = LogPolyhomFn.zero(n, f.degree + g.degree - 1)
    for j in range(n):
        e = tuple(int(i == j) for i in range(n))
        total = total + lph_mul(partial_deriv_multi(f, e), _x_derivs(g, e))
        total = total - lph_mul(_x_derivs(f, e), partial_deriv_multi(g, e))
    return total


def pushforward_linear(A: SymbolExpansion, T) -> SymbolExpansion:
    """Symbol of ``kappa_* A`` for ``kappa(x) = T x`` with ``T = c O``.

    ``sigma(y, eta) = sigma_A(T^{-1} y, T^t eta)``; the torus becomes
    ``R^n / 2 pi T Z^n`` (dual frequencies ``T^{-t} W``).
    """
    T = as_matrix(T)
    if len(T) != A.dim:
        raise UnsupportedTransform("matrix dimension differs from symbol dimension")
    Tt = mat_T(T)
    try:
        inv_t = mat_inv(Tt)
    except ZeroDivisionError:
        raise UnsupportedTransform("singular matrix") from None
    W = inv_t if A.dual is None else mat_mul(inv_t, A.dual)
    new_comps = {}
    for j, f in A.components.items():
        g = compose_linear(f, Tt)
        new_comps[j] = g.map_coeffs(lambda c: c.with_dual(W))
    return SymbolExpansion(A.dim, A.order, new_comps, A.depth, W)


def _check_scalar_leading(P: SymbolExpansion):
    top = P.components.get(0)
    ok = (
        top is not None
        and P.logk == 0
        and len(top.terms) == 1
        and P.order.is_real
        and P.order.re > 0
    )
    if ok:
        (beta, l), c = next(iter(top.terms.items()))
        ok = not any(beta) and l == 0 and c.is_constant
        if ok:
            v = c.mode0()
            ok = v.is_rational and v.as_qi().re > 0
    if not ok:
        raise ValueError("P must be classical with scalar positive leading symbol c|xi|^m")


def nabla_P(A: SymbolExpansion, P: SymbolExpansion, j: int, depth=None) -> SymbolExpansion:
    """Iterated commutator ``[P, [P, ... [P, A]]]`` (``j`` times), re-based to order ``a + j(m-1)``."""
    _check_scalar_leading(P)
    cur = A
    m = P.order
    for i in range(1, j + 1):
        nxt = commutator(P, cur, depth)
        bound = A.order + i * (m - 1)
        shift = nxt.order - bound
        if not shift.is_integer:
            raise LogPhgError("order bookkeeping failed")
        s = int(shift.re)
        if any(t < s for t in nxt.components):
            raise LogPhgError("iterated commutator exceeds its order bound")
        cur = SymbolExpansion._raw(
            nxt.dim, bound, {t - s: f for t, f in nxt.components.items()}, nxt.depth, nxt.dual
        )
    return cur
