"""Regularized (finite-part) integrals of cutoff log-polyhomogeneous functions.

For ``f = psi * sum_j f_{a-j}`` the ball integral ``int_{|xi|<=R} f`` is,
for ``R >= 1``, a finite sum ``sum p_alpha(log R) R^alpha``.  Its constant
term ``p_0(0)`` is the regularized integral.  Everything except the head
integral over ``1/4 <= |xi| <= 1`` is computed exactly: the radial part by
closed-form antiderivatives of ``r^{gamma-1} log^l r``, the angular part by
the exact monomial sphere integrals.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from math import factorial
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np
from gmpy2 import mpq
from scipy import integrate

from .errors import IllConditioned, NonRealDegree, SingularMatrix, UnsupportedDimension
from .homogeneous import LogPolyhomFn, _as_degree
from .scalars import QI, ExactScalar

__all__ = [
    "psi",
    "Cutoff",
    "AsymptoticExpansion",
    "RegIntValue",
    "MeromorphicValue",
    "FamilyRegInt",
    "ball_integral_expansion",
    "reg_int",
    "numeric_lim",
    "NumericLimit",
    "numeric_ball_integrals",
    "transform_rule_rhs",
    "family_reg_int",
    "head_integral",
    "DEFAULT_QUAD_TOL",
    "default_r_grid",
]

DEFAULT_QUAD_TOL = 1e-12


# --------------------------------------------------------------------------
# cutoff
# --------------------------------------------------------------------------

def _h(s):
    s = np.asarray(s, dtype=float)
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        a = np.exp(-1.0 / s)
        b = np.exp(-1.0 / (1.0 - s))
        out = a / (a + b)
    return np.where(s <= 0, 0.0, np.where(s >= 1, 1.0, out))


def psi(r):
    """The fixed radial cutoff: 0 on ``[0, 1/4]``, 1 on ``[1/2, inf)``, smooth and monotone."""
    r = np.asarray(r, dtype=float)
    out = _h(4.0 * r - 1.0)
    return out if out.ndim else float(out)


class Cutoff:
    """The cutoff as an object (callable on radii or on points of R^n)."""

    inner = 0.25
    outer = 0.5

    def __call__(self, r):
        return psi(r)

    def of_points(self, xi):
        return psi(np.linalg.norm(np.asarray(xi, dtype=float), axis=-1))


# --------------------------------------------------------------------------
# exact radial pieces
# --------------------------------------------------------------------------

def _as_parts(f) -> list[LogPolyhomFn]:
    if isinstance(f, LogPolyhomFn):
        parts = [f]
    else:
        parts = list(f)
    parts = [p for p in parts if p.terms]
    if parts and any(p.dim != parts[0].dim for p in parts):
        raise ValueError("components have different dimensions")
    return parts


def _radial_data(parts: Sequence[LogPolyhomFn]) -> dict:
    """``(gamma, l) -> int_S f_l`` with ``gamma = degree + n`` (merged over components)."""
    out: dict = {}
    for p in parts:
        gamma = p.degree + p.dim
        for l, s in p.radial_sphere_factors().items():
            key = (gamma, l)
            out[key] = out[key] + s if key in out else s
    return {k: v for k, v in out.items() if v}


@lru_cache(maxsize=4096)
def _head_real(gamma: float, l: int, tol: float) -> tuple[float, float]:
    def g(r):
        return psi(r) * r ** (gamma - 1.0) * math.log(r) ** l

    v1, e1 = integrate.quad(g, 0.25, 0.5, epsabs=tol / 2, epsrel=0, limit=200)
    v2, e2 = integrate.quad(g, 0.5, 1.0, epsabs=tol / 2, epsrel=0, limit=200)
    return v1 + v2, e1 + e2


def head_integral(gamma, l: int, tol: float = DEFAULT_QUAD_TOL) -> tuple[complex, float]:
    """``int_{1/4}^1 psi(r) r^{gamma-1} log^l r dr`` and an error estimate."""
    gamma = complex(gamma)
    if gamma.imag == 0:
        v, e = _head_real(gamma.real, int(l), float(tol))
        return complex(v), e

    def re(r):
        return (psi(r) * r ** (gamma - 1.0) * math.log(r) ** l).real

    def im(r):
        return (psi(r) * r ** (gamma - 1.0) * math.log(r) ** l).imag

    out, err = 0j, 0.0
    for a, b in ((0.25, 0.5), (0.5, 1.0)):
        vr, er = integrate.quad(re, a, b, epsabs=tol / 4, epsrel=0, limit=200)
        vi, ei = integrate.quad(im, a, b, epsabs=tol / 4, epsrel=0, limit=200)
        out += complex(vr, vi)
        err += er + ei
    return out, err


def _tail_coefficients(gamma: QI, l: int) -> dict:
    """``int_1^R r^{gamma-1} log^l r dr`` as ``{(alpha, j): QI}`` in ``R^alpha log^j R``."""
    if gamma == 0:
        return {(QI(0), l + 1): QI(mpq(1, l + 1))}
    out = {}
    for j in range(l + 1):
        out[(gamma, j)] = QI((-1) ** (l - j) * mpq(factorial(l), factorial(j))) / gamma ** (l - j + 1)
    out[(QI(0), 0)] = QI((-1) ** (l + 1) * factorial(l)) / gamma ** (l + 1)
    return out


def _tail_constant(gamma: QI, l: int) -> QI:
    if gamma == 0:
        return QI(0)
    return QI((-1) ** (l + 1) * factorial(l)) / gamma ** (l + 1)


# --------------------------------------------------------------------------
# result types
# --------------------------------------------------------------------------

def _num_to_json(z: complex):
    z = complex(z)
    return z.real if z.imag == 0 else [z.real, z.imag]


@dataclass(frozen=True)
class RegIntValue:
    """``exact`` is the exactly known part, ``numeric`` the full value."""

    exact: ExactScalar
    head: complex
    abs_err_bound: float

    @property
    def numeric(self) -> complex:
        return complex(self.exact) + self.head

    def __float__(self):
        z = self.numeric
        if abs(z.imag) > max(1e-12, 1e-12 * abs(z.real)):
            raise TypeError("value is not real")
        return z.real

    def __add__(self, other: "RegIntValue"):
        return RegIntValue(self.exact + other.exact, self.head + other.head,
                           self.abs_err_bound + other.abs_err_bound)

    def scale(self, c) -> "RegIntValue":
        c_exact = ExactScalar.of(c)
        cz = complex(c_exact)
        return RegIntValue(self.exact * c_exact, self.head * cz, self.abs_err_bound * abs(cz))

    def to_json(self) -> dict:
        return {
            "exact": self.exact.to_json(),
            "numeric": _num_to_json(self.numeric),
            "abs_err_bound": self.abs_err_bound,
        }


@dataclass
class AsymptoticExpansion:
    """``int_{|xi| <= R} f ~ sum_{(alpha, l)} c_{alpha,l} R^alpha log^l R`` (exact for ``R >= 1``).

    ``coefficients`` holds exact values; the constant slot ``(0, 0)`` has an
    additional numeric head contribution ``head`` (error ``head_err``).
    """

    dim: int
    coefficients: dict
    head: complex = 0j
    head_err: float = 0.0

    def coefficient(self, alpha, l: int) -> ExactScalar:
        return self.coefficients.get((_as_degree(alpha), l), ExactScalar.of(0))

    def constant(self) -> RegIntValue:
        return RegIntValue(self.coefficient(0, 0), self.head, self.head_err + 1e-15)

    def basis(self) -> list:
        keys = set(self.coefficients) | {(QI(0), 0)}
        return sorted(keys, key=lambda k: (float(k[0].re), k[1]))

    def __call__(self, R: float) -> complex:
        total = self.head
        lr = math.log(R)
        for (alpha, l), c in self.coefficients.items():
            total += complex(c) * R ** complex(alpha) * lr**l
        return total


@dataclass(frozen=True)
class MeromorphicValue:
    """Exact principal part of a meromorphic function at the pole ``nu``.

    ``laurent[q]`` is the coefficient of ``(z - nu)^{-q}`` (``q = 1 .. order``).
    """

    nu: QI
    laurent: dict
    regular: Callable | None = None

    @property
    def order(self) -> int:
        return max((q for q, v in self.laurent.items() if v), default=0)

    def residue(self, q: int) -> ExactScalar:
        return self.laurent.get(q, ExactScalar.of(0))

    def principal_part(self, z: complex) -> complex:
        w = complex(z) - complex(self.nu)
        return sum(complex(v) / w**q for q, v in self.laurent.items())

    def to_json(self) -> dict:
        from .serialize import degree_to_json

        return {
            "pole": degree_to_json(self.nu),
            "laurent": {str(q): v.to_json() for q, v in sorted(self.laurent.items()) if v},
        }


# --------------------------------------------------------------------------
# ball integrals and the regularized integral
# --------------------------------------------------------------------------

def _require_real(parts):
    for p in parts:
        if not p.degree.is_real:
            raise NonRealDegree(f"degree {p.degree} is not real")


def ball_integral_expansion(f, quad_tol: float = DEFAULT_QUAD_TOL) -> AsymptoticExpansion:
    """Exact large-``R`` expansion of ``int_{|xi|<=R} psi f`` (valid for ``R >= 1``)."""
    parts = _as_parts(f)
    _require_real(parts)
    if not parts:
        return AsymptoticExpansion(getattr(f, "dim", 0), {})
    coeffs: dict = {}
    head, err = 0j, 0.0
    for (gamma, l), s in _radial_data(parts).items():
        for key, c in _tail_coefficients(gamma, l).items():
            v = s * c
            coeffs[key] = coeffs[key] + v if key in coeffs else v
        h, e = head_integral(gamma.re, l, quad_tol)
        sz = complex(s)
        head += sz * h
        err += abs(sz) * e
    coeffs = {k: v for k, v in coeffs.items() if v}
    return AsymptoticExpansion(parts[0].dim, coeffs, head, err)


def reg_int(f, quad_tol: float = DEFAULT_QUAD_TOL) -> RegIntValue:
    """Finite-part integral ``oint psi f dxi`` (the ``R^0 log^0`` coefficient)."""
    parts = _as_parts(f)
    _require_real(parts)
    exact = ExactScalar.of(0)
    head, err = 0j, 0.0
    for (gamma, l), s in _radial_data(parts).items():
        t = _tail_constant(gamma, l)
        if t:
            exact = exact + s * t
        h, e = head_integral(gamma.re, l, quad_tol)
        sz = complex(s)
        head += sz * h
        err += abs(sz) * e
    return RegIntValue(exact, head, err + 1e-15 * (abs(complex(exact)) + abs(head)))


# --------------------------------------------------------------------------
# numeric limit (independent oracle)
# --------------------------------------------------------------------------

def default_r_grid(points: int = 24, r_min: float = 10.0, r_max: float = 1e4) -> np.ndarray:
    return np.geomspace(r_min, r_max, points)


@dataclass
class NumericLimit:
    constant: float
    condition: float
    residual: float
    misfit: bool
    basis: list
    coefficients: np.ndarray = field(repr=False)


def _dedupe_basis(basis) -> list:
    seen, out = set(), []
    for alpha, l in basis:
        a = complex(alpha)
        key = (round(a.real, 12), round(a.imag, 12), int(l))
        if key not in seen:
            seen.add(key)
            out.append((a, int(l)))
    if (0.0, 0.0, 0) not in seen:
        out.append((0j, 0))
    return out


def numeric_lim(
    g,
    basis: Iterable,
    r_grid: Sequence[float] | None = None,
    cond_max: float = 1e10,
    misfit_tol: float = 1e-9,
) -> NumericLimit:
    """Constant term of ``g(R) ~ sum c R^alpha log^l R`` by least squares.

    ``g`` is either a callable ``R -> value`` or an array of samples on
    ``r_grid``.  Columns are scaled to unit norm before a QR solve; the
    condition number refers to the scaled matrix.
    """
    R = default_r_grid() if r_grid is None else np.asarray(r_grid, dtype=float)
    basis = _dedupe_basis(basis)
    if len(R) < len(basis) + 2:
        raise ValueError("grid must have at least basis size + 2 points")
    if callable(g):
        y = np.array([g(r) for r in R])
    else:
        y = np.asarray(g)
    y = y.astype(complex) if np.iscomplexobj(y) else y.astype(float)
    lr = np.log(R)
    cols = []
    for alpha, l in basis:
        col = np.exp(alpha * lr) * lr**l
        cols.append(col.real if alpha.imag == 0 else col)
    M = np.array(cols).T
    if np.iscomplexobj(M) and not np.iscomplexobj(y):
        y = y.astype(complex)
    scale = np.linalg.norm(M, axis=0)
    Ms = M / scale
    sv = np.linalg.svd(Ms, compute_uv=False)
    cond = float(sv[0] / sv[-1]) if sv[-1] > 0 else math.inf
    if cond > cond_max:
        raise IllConditioned(f"least-squares condition number {cond:.3g} exceeds {cond_max:.1g}", cond)
    Q, Rm = np.linalg.qr(Ms)
    coef = np.linalg.solve(Rm, Q.conj().T @ y) / scale
    resid = float(np.linalg.norm(M @ coef - y) / max(np.linalg.norm(y), 1e-300))
    const_idx = next(i for i, (a, l) in enumerate(basis) if a == 0 and l == 0)
    const = coef[const_idx]
    if np.iscomplexobj(const) and abs(const.imag) <= 1e-14 * max(abs(const.real), 1):
        const = const.real
    return NumericLimit(const, cond, resid, resid > misfit_tol, basis, coef)


# --------------------------------------------------------------------------
# brute-force ball integrals of f(A xi) (oracle for the transformation rule)
# --------------------------------------------------------------------------

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(20)


def _panels(a: float, b: float, width: float) -> np.ndarray:
    k = max(1, int(math.ceil((b - a) / width)))
    return np.linspace(a, b, k + 1)


def numeric_ball_integrals(
    f: LogPolyhomFn | Sequence[LogPolyhomFn],
    A=None,
    r_grid: Sequence[float] | None = None,
    n_theta: int = 256,
) -> np.ndarray:
    """``R -> int_{|xi|<=R} (psi f)(A xi) dxi`` on ``r_grid`` for ``n = 2``.

    Pure quadrature on the raw integrand: trapezoid rule in the angle and
    composite Gauss-Legendre in ``u = log r`` (fine panels across the
    cutoff transition, coarse ones outside).
    """
    parts = _as_parts(f)
    n = parts[0].dim
    if n != 2:
        raise UnsupportedDimension("numeric ball integrals are implemented for n = 2")
    A = np.eye(2) if A is None else np.array([[float(v) for v in row] for row in A])
    R = default_r_grid() if r_grid is None else np.sort(np.asarray(r_grid, dtype=float))
    sv = np.linalg.svd(A, compute_uv=False)
    r_lo = 0.25 / sv[0]
    r_hi = 0.5 / sv[-1]
    theta = 2 * np.pi * np.arange(n_theta) / n_theta
    omega = np.stack([np.cos(theta), np.sin(theta)], axis=-1)

    def integrand(u):
        r = np.exp(u)
        pts = r[:, None, None] * omega[None, :, :]
        y = pts @ A.T
        rad = np.linalg.norm(y, axis=-1)
        vals = np.zeros(rad.shape, dtype=complex)
        mask = rad > 0.25
        ym = y[mask]
        for p in parts:
            vals[mask] += p(ym)
        vals = vals * psi(rad)
        return vals.mean(axis=1) * 2 * np.pi * r**2

    edges = list(_panels(math.log(r_lo), math.log(r_hi), 0.02))
    last = edges[-1]
    for target in np.log(R):
        if target <= last:
            raise ValueError("grid radii must exceed the cutoff transition")
        edges.extend(_panels(last, target, 0.5)[1:])
        last = target
    edges = np.array(edges)
    targets = set(np.round(np.log(R), 12))
    acc = 0j
    out = []
    for a, b in zip(edges[:-1], edges[1:]):
        u = 0.5 * (b - a) * _GL_NODES + 0.5 * (a + b)
        acc += 0.5 * (b - a) * np.dot(_GL_WEIGHTS, integrand(u))
        if round(b, 12) in targets:
            out.append(acc)
    out = np.array(out)
    return out.real if np.all(out.imag == 0) else out


# --------------------------------------------------------------------------
# transformation rule
# --------------------------------------------------------------------------

def _sphere_rule(n: int, N: int):
    """Nodes and weights for integration over ``S^{n-1}``."""
    if n == 1:
        return np.array([[1.0], [-1.0]]), np.array([1.0, 1.0])
    if n == 2:
        x, w = np.polynomial.legendre.leggauss(N)
        th = np.pi * (x + 1)
        return np.stack([np.cos(th), np.sin(th)], axis=-1), w * np.pi
    if n == 3:
        x, w = np.polynomial.legendre.leggauss(N)
        th = np.pi * (x + 1)
        wt = w * np.pi
        ct, wc = np.polynomial.legendre.leggauss(N)
        st = np.sqrt(1 - ct**2)
        pts = np.stack(
            [
                np.outer(st, np.cos(th)).ravel(),
                np.outer(st, np.sin(th)).ravel(),
                np.repeat(ct, N),
            ],
            axis=-1,
        )
        return pts, np.outer(wc, wt).ravel()
    raise UnsupportedDimension("sphere quadrature implemented for n <= 3")


def _sphere_quad(fn, n: int, rel: float = 1e-9, N0: int = 16, N_max: int = 4096, atol: float = 0.0) -> complex:
    prev = None
    N = N0
    while N <= N_max:
        pts, w = _sphere_rule(n, N)
        vals = fn(pts)
        val = complex(np.dot(w, vals))
        if n == 1:
            return val
        floor = max(atol, 1e-15 * float(np.dot(w, np.abs(vals))))
        if prev is not None and abs(val - prev) <= max(rel * abs(val), floor):
            return val
        prev = val
        N *= 2
    return prev


def transform_rule_rhs(f, A, quad_tol: float = DEFAULT_QUAD_TOL) -> complex:
    """``|det A|^{-1} (oint f + sum_l (-1)^{l+1}/(l+1) int_S f_{-n,l} log^{l+1}|A^{-1} xi|)``."""
    parts = _as_parts(f)
    n = parts[0].dim
    Am = np.array([[float(v) for v in row] for row in A], dtype=float)
    if Am.shape != (n, n):
        raise ValueError("matrix has the wrong shape")
    det = np.linalg.det(Am)
    if det == 0 or np.linalg.cond(Am) > 1e14:
        raise SingularMatrix("matrix is singular")
    Ainv = np.linalg.inv(Am)
    total = reg_int(parts, quad_tol).numeric
    crit = [p for p in parts if p.degree == QI(-n)]
    sv = np.linalg.svd(Ainv, compute_uv=False)
    log_span = max(abs(math.log(sv[0])), abs(math.log(sv[-1])))
    for p in crit:
        for l in range(p.logk + 1):
            lev = p.log_level(l)
            if not lev:
                continue

            def fn(pts, lev=lev, l=l):
                return lev(pts) * np.log(np.linalg.norm(pts @ Ainv.T, axis=-1)) ** (l + 1)

            # round-off scale of the integrand: |f| times the size of the log factor
            pts, w = _sphere_rule(n, 16)
            atol = 1e-14 * float(np.dot(w, np.abs(lev(pts)))) * max(1.0, log_span) ** (l + 1)
            total += (-1) ** (l + 1) / (l + 1) * _sphere_quad(fn, n, atol=atol)
    return total / abs(det)


# --------------------------------------------------------------------------
# meromorphic families
# --------------------------------------------------------------------------

@dataclass
class FamilyRegInt:
    """``z -> oint psi f(z)`` for a template family of degree ``z``.

    ``sphere_data`` maps ``(j, l)`` to ``int_S`` of the level-``l`` part of the
    component of degree ``z - j``; poles sit at ``z = j - n``.
    """

    dim: int
    sphere_data: dict
    quad_tol: float = DEFAULT_QUAD_TOL

    def poles(self) -> list[MeromorphicValue]:
        by_nu: dict = {}
        for (j, l), s in self.sphere_data.items():
            nu = QI(j - self.dim)
            coeff = s * QI((-1) ** (l + 1) * factorial(l))
            lau = by_nu.setdefault(nu, {})
            lau[l + 1] = lau[l + 1] + coeff if l + 1 in lau else coeff
        out = []
        for nu, lau in sorted(by_nu.items(), key=lambda kv: kv[0].re):
            lau = {q: v for q, v in lau.items() if v}
            if lau:
                out.append(MeromorphicValue(nu, lau, self.regular_part_at(nu)))
        return out

    def pole(self, nu) -> MeromorphicValue:
        nu = _as_degree(nu)
        for p in self.poles():
            if p.nu == nu:
                return p
        return MeromorphicValue(nu, {}, self.regular_part_at(nu))

    def lemma_residue(self, nu, k: int) -> ExactScalar:
        """Closed formula ``(-1)^{k+1} k! res_k(f_{-n}(nu))``."""
        nu = _as_degree(nu)
        j = nu + self.dim
        if not j.is_integer:
            return ExactScalar.of(0)
        s = self.sphere_data.get((int(j.re), k), ExactScalar.of(0))
        return s * QI((-1) ** (k + 1) * factorial(k))

    def __call__(self, z) -> complex:
        z = complex(z)
        total = 0j
        for (j, l), s in self.sphere_data.items():
            gamma = z - j + self.dim
            if gamma == 0:
                raise ZeroDivisionError(f"z = {z} is a pole")
            h, _ = head_integral(gamma, l, self.quad_tol)
            total += complex(s) * (h + (-1) ** (l + 1) * factorial(l) / gamma ** (l + 1))
        return total

    def regular_part_at(self, nu) -> Callable:
        """``z -> I(z) - principal part at nu`` (holomorphic near ``nu``)."""
        nu = _as_degree(nu)
        nz = complex(nu)

        def reg(z):
            z = complex(z)
            total = 0j
            for (j, l), s in self.sphere_data.items():
                gamma = z - j + self.dim
                h, _ = head_integral(gamma, l, self.quad_tol)
                total += complex(s) * h
                if QI(j - self.dim) != nu:
                    total += complex(s) * (-1) ** (l + 1) * factorial(l) / gamma ** (l + 1)
            return total

        reg.nu = nz
        return reg


def family_reg_int(template: Iterable, dim: int, quad_tol: float = DEFAULT_QUAD_TOL) -> FamilyRegInt:
    """Meromorphic family ``z -> oint psi f(z)``.

    ``template`` lists ``(j, beta, l, coeff)``: the term
    ``coeff * xi^beta |xi|^{z - j - |beta|} log^l|xi|`` of degree ``z - j``.
    A :class:`LogPolyhomFn` (or a list of them, read as offsets 0, 1, ...)
    is also accepted; its degree is ignored.
    """
    data: dict = {}
    if isinstance(template, LogPolyhomFn):
        template = [template]
    items = list(template)
    if items and isinstance(items[0], LogPolyhomFn):
        flat = []
        for j, f in enumerate(items):
            flat.extend((j, b, l, c) for (b, l), c in f.terms.items())
        items = flat
    for j, beta, l, coeff in items:
        f = LogPolyhomFn(dim, 0, {(tuple(beta), l): coeff})
        for ll, s in f.radial_sphere_factors().items():
            key = (int(j), ll)
            data[key] = data[key] + s if key in data else s
    return FamilyRegInt(dim, {k: v for k, v in data.items() if v}, quad_tol)
