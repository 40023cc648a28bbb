"""Trigonometric polynomials on flat tori.

A :class:`TrigPoly` is ``sum_m c_m exp(i <W m, x>)`` with exact coefficients.
``W`` is the dual frequency matrix; ``W = I`` (stored as ``None``) is the
standard torus ``(R / 2 pi Z)^n`` of volume ``(2 pi)^n``.  After a linear
change of variables ``y = T x`` the torus becomes ``R^n / 2 pi T Z^n`` and
the frequencies transform as ``W -> T^{-t} W``.
"""

from __future__ import annotations

import cmath
from typing import Mapping, Sequence

import numpy as np
from gmpy2 import mpq

from .scalars import QI, ExactScalar, as_mpq

__all__ = ["TrigPoly", "Matrix", "as_matrix", "mat_det", "mat_inv", "mat_mul", "mat_T", "mat_vec"]

Matrix = tuple  # tuple of row tuples of mpq


def as_matrix(rows) -> Matrix:
    m = tuple(tuple(as_mpq(v) for v in row) for row in rows)
    n = len(m)
    if any(len(r) != n for r in m):
        raise ValueError("matrix must be square")
    return m


def identity(n: int) -> Matrix:
    return tuple(tuple(mpq(int(i == j)) for j in range(n)) for i in range(n))


def mat_T(a: Matrix) -> Matrix:
    return tuple(zip(*a))


def mat_mul(a: Matrix, b: Matrix) -> Matrix:
    bt = mat_T(b)
    return tuple(tuple(sum((x * y for x, y in zip(row, col)), mpq(0)) for col in bt) for row in a)


def mat_vec(a: Matrix, v) -> tuple:
    return tuple(sum((x * y for x, y in zip(row, v)), mpq(0)) for row in a)


def mat_det(a: Matrix) -> mpq:
    """Exact determinant by fraction-free Gaussian elimination over Q."""
    m = [list(r) for r in a]
    n = len(m)
    det = mpq(1)
    for c in range(n):
        piv = next((r for r in range(c, n) if m[r][c] != 0), None)
        if piv is None:
            return mpq(0)
        if piv != c:
            m[c], m[piv] = m[piv], m[c]
            det = -det
        det *= m[c][c]
        for r in range(c + 1, n):
            f = m[r][c] / m[c][c]
            if f:
                m[r] = [x - f * y for x, y in zip(m[r], m[c])]
    return det


def mat_inv(a: Matrix) -> Matrix:
    n = len(a)
    m = [list(r) + [mpq(int(i == j)) for j in range(n)] for i, r in enumerate(a)]
    for c in range(n):
        piv = next((r for r in range(c, n) if m[r][c] != 0), None)
        if piv is None:
            raise ZeroDivisionError("singular matrix")
        m[c], m[piv] = m[piv], m[c]
        p = m[c][c]
        m[c] = [x / p for x in m[c]]
        for r in range(n):
            if r != c and m[r][c]:
                f = m[r][c]
                m[r] = [x - f * y for x, y in zip(m[r], m[c])]
    return tuple(tuple(r[n:]) for r in m)


def _canon_dual(dual, n):
    if dual is None:
        return None
    d = as_matrix(dual)
    if len(d) != n:
        raise ValueError("dual matrix dimension mismatch")
    return None if d == identity(n) else d


class TrigPoly:
    """Exact trigonometric polynomial; immutable."""

    __slots__ = ("dim", "modes", "dual")

    def __init__(self, dim: int, modes: Mapping | None = None, dual=None):
        self.dim = int(dim)
        clean = {}
        for m, c in (modes or {}).items():
            m = tuple(int(v) for v in m)
            if len(m) != self.dim:
                raise ValueError(f"mode {m} has wrong dimension")
            c = ExactScalar.of(c)
            if c:
                clean[m] = c
        self.modes = clean
        self.dual = _canon_dual(dual, self.dim)

    @classmethod
    def _raw(cls, dim, modes, dual):
        obj = cls.__new__(cls)
        obj.dim = dim
        obj.modes = modes
        obj.dual = dual
        return obj

    @classmethod
    def constant(cls, dim: int, c=1, dual=None) -> "TrigPoly":
        return cls(dim, {(0,) * dim: c}, dual)

    @classmethod
    def exp(cls, m: Sequence[int], c=1, dual=None) -> "TrigPoly":
        return cls(len(m), {tuple(m): c}, dual)

    def _check(self, other: "TrigPoly"):
        if other.dim != self.dim or other.dual != self.dual:
            raise ValueError("trigonometric polynomials live on different tori")

    def __add__(self, other):
        if not isinstance(other, TrigPoly):
            return NotImplemented
        self._check(other)
        out = dict(self.modes)
        for m, c in other.modes.items():
            s = out.get(m)
            if s is None:
                out[m] = c
            else:
                s = s + c
                if s:
                    out[m] = s
                else:
                    del out[m]
        return TrigPoly._raw(self.dim, out, self.dual)

    def __neg__(self):
        return TrigPoly._raw(self.dim, {m: -c for m, c in self.modes.items()}, self.dual)

    def __sub__(self, other):
        if not isinstance(other, TrigPoly):
            return NotImplemented
        return self + (-other)

    def __mul__(self, other):
        if isinstance(other, TrigPoly):
            self._check(other)
            out: dict = {}
            for m1, c1 in self.modes.items():
                for m2, c2 in other.modes.items():
                    m = tuple(a + b for a, b in zip(m1, m2))
                    c = c1 * c2
                    s = out.get(m)
                    out[m] = c if s is None else s + c
            return TrigPoly._raw(self.dim, {m: c for m, c in out.items() if c}, self.dual)
        if isinstance(other, (QI, ExactScalar, int)) or hasattr(other, "numerator"):
            if not other:
                return TrigPoly._raw(self.dim, {}, self.dual)
            return TrigPoly._raw(self.dim, {m: c * other for m, c in self.modes.items()}, self.dual)
        return NotImplemented

    __rmul__ = __mul__

    def frequency(self, m) -> tuple:
        if self.dual is None:
            return tuple(mpq(v) for v in m)
        return mat_vec(self.dual, m)

    def dx(self, j: int) -> "TrigPoly":
        """Partial derivative in x_j: mode m is multiplied by i*(W m)_j."""
        out = {}
        for m, c in self.modes.items():
            w = self.frequency(m)[j]
            if w:
                out[m] = c * QI(0, w)
        return TrigPoly._raw(self.dim, out, self.dual)

    def dx_multi(self, alpha: Sequence[int]) -> "TrigPoly":
        out = {}
        for m, c in self.modes.items():
            w = self.frequency(m)
            f = QI(1)
            for wj, aj in zip(w, alpha):
                if aj:
                    f = f * QI(0, wj) ** aj
            if f:
                out[m] = c * f
        return TrigPoly._raw(self.dim, out, self.dual)

    def conjugate(self) -> "TrigPoly":
        return TrigPoly._raw(
            self.dim, {tuple(-v for v in m): c.conjugate() for m, c in self.modes.items()}, self.dual
        )

    def mode(self, m) -> ExactScalar:
        return self.modes.get(tuple(m), ExactScalar.of(0))

    def mode0(self) -> ExactScalar:
        return self.mode((0,) * self.dim)

    def volume(self) -> ExactScalar:
        """Volume of the underlying torus, ``(2 pi)^n / |det W|``."""
        v = ExactScalar.pi_power(2 * self.dim, mpq(2) ** self.dim)
        if self.dual is not None:
            v = v * QI(1 / abs(mat_det(self.dual)))
        return v

    def integral(self) -> ExactScalar:
        return self.volume() * self.mode0()

    def with_dual(self, dual) -> "TrigPoly":
        return TrigPoly(self.dim, self.modes, dual)

    @property
    def is_constant(self) -> bool:
        return all(not any(m) for m in self.modes)

    def __call__(self, x) -> complex:
        x = np.asarray(x, dtype=float)
        total = 0j
        for m, c in self.modes.items():
            w = [float(v) for v in self.frequency(m)]
            total += complex(c) * cmath.exp(1j * float(np.dot(w, x)))
        return total

    def __eq__(self, other):
        if not isinstance(other, TrigPoly):
            return NotImplemented
        return self.dim == other.dim and self.dual == other.dual and self.modes == other.modes

    def __hash__(self):
        return hash((self.dim, self.dual, frozenset(self.modes.items())))

    def __bool__(self):
        return bool(self.modes)

    def __repr__(self):
        if not self.modes:
            return "TrigPoly(0)"
        parts = [f"({c})e{list(m)}" for m, c in sorted(self.modes.items())]
        return "TrigPoly(" + " + ".join(parts) + ")"
