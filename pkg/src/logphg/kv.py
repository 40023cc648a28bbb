"""Kontsevich-Vishik density and trace on flat tori.

For a symbol of non-integer order no component has degree ``-n``, so the
finite-part integral of each trigonometric mode is free of logarithmic
ambiguity.  The density is ``(2 pi)^{-n} oint a(x, xi) dxi``, computed mode
by mode with :func:`~logphg.regint.reg_int`.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import factorial
from typing import Iterable

from gmpy2 import mpq

from .errors import IntegerOrder
from .homogeneous import LogPolyhomFn
from .regint import DEFAULT_QUAD_TOL, MeromorphicValue, RegIntValue, family_reg_int, reg_int
from .scalars import QI, ExactScalar
from .symbols import SymbolExpansion
from .trig import TrigPoly

__all__ = ["KVDensity", "kv_density", "TR", "family_TR", "FamilyTR"]


def _mode_parts(A: SymbolExpansion) -> dict:
    """``mode -> [scalar LogPolyhomFn per component]``."""
    out: dict = {}
    for j, f in A.components.items():
        per_mode: dict = {}
        for key, c in f.terms.items():
            for m, v in c.modes.items():
                per_mode.setdefault(m, {})[key] = v
        for m, terms in per_mode.items():
            out.setdefault(m, []).append(LogPolyhomFn(A.dim, f.degree, terms))
    return out


def _inv_two_pi_n(n: int) -> ExactScalar:
    return ExactScalar.pi_power(-2 * n, mpq(1, 2**n))


@dataclass
class KVDensity:
    """``mode -> (2 pi)^{-n} oint a_m(xi) dxi``; the density is ``sum_m value_m e^{i<Wm,x>}``."""

    dim: int
    modes: dict
    dual: object = None

    def volume(self) -> ExactScalar:
        return TrigPoly(self.dim, {}, self.dual).volume()

    def mode0(self) -> RegIntValue:
        zero = (0,) * self.dim
        return self.modes.get(zero, RegIntValue(ExactScalar.of(0), 0j, 0.0))

    def integral(self) -> RegIntValue:
        return self.mode0().scale(self.volume())

    def __call__(self, x) -> complex:
        probe = TrigPoly(self.dim, {}, self.dual)
        total = 0j
        import cmath

        for m, v in self.modes.items():
            w = [float(t) for t in probe.frequency(m)]
            total += v.numeric * cmath.exp(1j * sum(a * b for a, b in zip(w, x)))
        return total

    def to_json(self) -> list:
        return [{"m": list(m), **v.to_json()} for m, v in sorted(self.modes.items())]


def _check_order(A: SymbolExpansion):
    if A.order.is_integer:
        raise IntegerOrder(f"order {A.order} is an integer")


def kv_density(A: SymbolExpansion, quad_tol: float = DEFAULT_QUAD_TOL) -> KVDensity:
    """Kontsevich-Vishik density of a non-integer-order symbol."""
    _check_order(A)
    scale = _inv_two_pi_n(A.dim)
    modes = {m: reg_int(parts, quad_tol).scale(scale) for m, parts in _mode_parts(A).items()}
    return KVDensity(A.dim, modes, A.dual)


def TR(A: SymbolExpansion, quad_tol: float = DEFAULT_QUAD_TOL) -> RegIntValue:
    """Kontsevich-Vishik trace: integral of the density over the torus."""
    _check_order(A)
    zero = (0,) * A.dim
    parts = _mode_parts(A).get(zero, [])
    vol = TrigPoly(A.dim, {}, A.dual).volume()
    return reg_int(parts, quad_tol).scale(vol * _inv_two_pi_n(A.dim))


@dataclass
class FamilyTR:
    """``z -> TR(A(z))`` for a template family with fixed trigonometric coefficients."""

    dim: int
    factor: ExactScalar
    base: object  # FamilyRegInt of the mode-0 part

    def poles(self) -> list[MeromorphicValue]:
        out = []
        for p in self.base.poles():
            lau = {q: v * self.factor for q, v in p.laurent.items()}
            out.append(MeromorphicValue(p.nu, lau, self._scaled(p.regular)))
        return out

    def pole(self, nu) -> MeromorphicValue:
        p = self.base.pole(nu)
        return MeromorphicValue(p.nu, {q: v * self.factor for q, v in p.laurent.items()},
                                self._scaled(p.regular))

    def _scaled(self, fn):
        c = complex(self.factor)
        return None if fn is None else (lambda z: c * fn(z))

    def __call__(self, z) -> complex:
        return complex(self.factor) * self.base(z)


def family_TR(template: Iterable, dim: int, dual=None, quad_tol: float = DEFAULT_QUAD_TOL) -> FamilyTR:
    """Trace family of ``A(z) = sum (j, beta, l, coeff)`` terms of degree ``z - j``.

    ``coeff`` may be a scalar, a :class:`TrigPoly` or a ``{mode: scalar}``
    map; only mode 0 contributes to the trace.
    """
    zero = (0,) * dim
    flat = []
    for j, beta, l, coeff in template:
        if isinstance(coeff, TrigPoly):
            c = coeff.mode0()
        elif isinstance(coeff, dict):
            c = ExactScalar.of(coeff.get(zero, 0))
        else:
            c = ExactScalar.of(coeff)
        if c:
            flat.append((j, beta, l, c))
    vol = TrigPoly(dim, {}, dual).volume()
    return FamilyTR(dim, vol * _inv_two_pi_n(dim), family_reg_int(flat, dim, quad_tol))


def family_residue_formula(A_nu: SymbolExpansion, k: int) -> ExactScalar:
    """``((-1)^{k+1}/(k+1)) Res_k(A(nu))`` from the local residue formula."""
    from .symbols import Res_k

    return Res_k(A_nu, k) * QI(mpq((-1) ** (k + 1), k + 1))


__all__.append("family_residue_formula")
