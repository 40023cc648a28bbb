"""Spectral cross-checks with Fourier multipliers on Z^n.

An operator ``A`` with radial symbol ``q`` and a positive elliptic ``P`` with
radial symbol ``p`` act diagonally on the exponentials ``e^{i<kappa,x>}``, so

    Tr(A e^{-tP}) = sum_{kappa in Z^n} q(kappa) exp(-t p(kappa)).

Fitting this against the known small-``t`` basis ``t^alpha log^l t`` gives
the residues (from the ``log^{k+1} t`` coefficients) and the regularized
trace (from the ``t^0`` coefficient) without using the symbol calculus.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from math import factorial
from typing import Iterable, Sequence

import mpmath
import numpy as np
from scipy import integrate

from .errors import BasisMissing, IllConditioned
from .homogeneous import sphere_volume
from .regint import psi

__all__ = [
    "RadialProfile",
    "PolyProfile",
    "MultiplierModel",
    "FittedExpansion",
    "heat_trace_lattice",
    "heat_trace_continuum",
    "fit_expansion",
    "auto_basis",
    "res_from_fit",
    "tr_from_fit",
    "zeta_laurent_from_heat",
    "default_t_grid",
    "sample_heat_trace",
    "lattice_sum",
]

TRUNCATION = 46.0


@dataclass(frozen=True)
class RadialProfile:
    """``q(xi) = psi(|xi|) * sum c |xi|^a log^l |xi|`` given as ``(a, l, c)`` triples."""

    terms: tuple

    @classmethod
    def monomial(cls, degree, log: int = 0, coeff: float = 1.0) -> "RadialProfile":
        return cls(((Fraction(degree), int(log), float(coeff)),))

    @property
    def order(self) -> Fraction:
        return max(Fraction(a) for a, _, _ in self.terms)

    @property
    def logk(self) -> int:
        return max(l for _, l, _ in self.terms)

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            lr = np.log(r)
            total = np.zeros_like(r)
            for a, l, c in self.terms:
                total = total + c * r ** float(a) * lr**l
        cut = psi(r)
        return np.where(cut > 0, cut * np.nan_to_num(total), 0.0)

    def to_json(self) -> dict:
        return {"terms": [{"degree": str(a), "log": l, "coeff": c} for a, l, c in self.terms]}

    @classmethod
    def from_json(cls, doc: dict) -> "RadialProfile":
        if "terms" in doc:
            return cls(tuple((Fraction(str(t["degree"])), int(t.get("log", 0)), float(t.get("coeff", 1)))
                             for t in doc["terms"]))
        return cls.monomial(Fraction(str(doc["degree"])), int(doc.get("log", 0)), float(doc.get("coeff", 1)))


@dataclass(frozen=True)
class PolyProfile:
    """``p(xi) = sum_i c_i |xi|^i``; must have positive leading and constant coefficients."""

    coeffs: tuple

    def __post_init__(self):
        c = self.coeffs
        if not c or c[-1] <= 0:
            raise ValueError("leading coefficient must be positive")
        if any(v < 0 for v in c):
            raise ValueError("coefficients must be nonnegative so that p >= p(0)")
        if c[0] < 1:
            raise ValueError("p must satisfy p >= 1 (constant coefficient >= 1)")

    @property
    def order(self) -> int:
        return len(self.coeffs) - 1

    @property
    def leading(self) -> float:
        return float(self.coeffs[-1])

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        return np.polynomial.polynomial.polyval(r, np.asarray(self.coeffs, dtype=float))

    def to_json(self) -> dict:
        return {"kind": "poly", "coeffs": list(self.coeffs)}

    @classmethod
    def from_json(cls, doc: dict) -> "PolyProfile":
        if doc.get("kind", "poly") != "poly":
            raise ValueError(f"unknown profile kind {doc.get('kind')!r}")
        return cls(tuple(float(v) for v in doc["coeffs"]))


@dataclass(frozen=True)
class MultiplierModel:
    """Radial Fourier multipliers ``A = q(D)`` and ``P = p(D)`` on ``T^n``."""

    dim: int
    q: RadialProfile
    p: PolyProfile

    @property
    def m(self) -> int:
        return self.p.order

    def to_json(self) -> dict:
        return {"n": self.dim, "q": self.q.to_json(), "p": self.p.to_json()}

    @classmethod
    def from_json(cls, doc: dict) -> "MultiplierModel":
        return cls(int(doc.get("n", 1)), RadialProfile.from_json(doc["q"]), PolyProfile.from_json(doc["p"]))


# --------------------------------------------------------------------------
# heat traces
# --------------------------------------------------------------------------

def _radius_cap(p: PolyProfile, t: float) -> float:
    """Smallest ``R`` with ``t p(r) > TRUNCATION`` for all ``r > R``."""
    R = (TRUNCATION / (t * p.leading)) ** (1.0 / p.order)
    while t * float(p(R)) <= TRUNCATION:
        R *= 1.05
    lo, hi = 0.0, R
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if t * float(p(mid)) > TRUNCATION:
            hi = mid
        else:
            lo = mid
    return hi


def _lattice_radii(n: int, R: float) -> tuple[np.ndarray, np.ndarray]:
    """Distinct nonzero norms of lattice points in the ball of radius ``R`` and their multiplicities."""
    K = int(math.floor(R))
    if n == 1:
        r = np.arange(1, K + 1, dtype=float)
        return r, np.full(K, 2.0)
    ax = np.arange(-K, K + 1)
    sq = np.zeros((1,), dtype=np.int64)
    for _ in range(n):
        sq = (sq[:, None] + (ax**2)[None, :]).ravel()
        sq = sq[sq <= R * R]
    sq = sq[sq > 0]
    vals, counts = np.unique(sq, return_counts=True)
    return np.sqrt(vals.astype(float)), counts.astype(float)


def heat_trace_lattice(model: MultiplierModel, t: float) -> float:
    """``sum_kappa q(kappa) exp(-t p(kappa))`` with terms ``t p > 46`` dropped."""
    if t <= 0:
        raise ValueError("t must be positive")
    R = _radius_cap(model.p, t)
    r, mult = _lattice_radii(model.dim, R)
    keep = t * model.p(r) <= TRUNCATION
    r, mult = r[keep], mult[keep]
    terms = mult * model.q(r) * np.exp(-t * model.p(r))
    return math.fsum(terms.tolist())


def lattice_sum(model: MultiplierModel, cutoff: int = 20000) -> float:
    """``sum_{kappa in Z} q(kappa)`` for ``n = 1`` and order ``< -1``.

    Direct compensated sum up to ``cutoff``; the remainder is the
    Euler-Maclaurin tail ``int_K^inf g - g(K)/2 - g'(K)/12 + g^(3)(K)/720``
    with the integral and derivatives evaluated by mpmath.
    """
    if model.dim != 1:
        raise ValueError("lattice_sum is implemented for n = 1")
    if float(model.q.order) >= -1:
        raise ValueError("lattice sum diverges for order >= -n")
    K = int(cutoff)
    r = np.arange(1, K + 1, dtype=float)
    head = math.fsum((2.0 * model.q(r)).tolist())
    mpmath.mp.dps = 30

    def g(x):
        # psi = 1 beyond 1/2, so the profile is the bare sum of terms there
        return 2 * mpmath.fsum(c * x ** (mpmath.mpf(a.numerator) / a.denominator) * mpmath.log(x) ** l for a, l, c in model.q.terms)

    tail = mpmath.quad(g, [K, 10 * K, mpmath.inf])
    tail -= g(K) / 2
    tail -= mpmath.diff(g, K, 1) / 12
    tail += mpmath.diff(g, K, 3) / 720
    return head + float(tail)


def _continuum_integrand(model: MultiplierModel, t: float):
    def fn(u):
        r = math.exp(u)
        return float(model.q(np.array([r]))[0]) * math.exp(-t * float(model.p(np.array([r]))[0])) * r**model.dim

    return fn


def heat_trace_continuum(model: MultiplierModel, t: float, tol: float = 1e-12) -> float:
    """``int_{R^n} q(xi) exp(-t p(xi)) dxi`` by radial quadrature in ``log r`` times ``vol(S^{n-1})``."""
    if t <= 0:
        raise ValueError("t must be positive")
    svol = float(sphere_volume(model.dim))
    R = _radius_cap(model.p, t) * 1.2
    fn = _continuum_integrand(model, t)
    pieces = [math.log(0.25), math.log(0.5)]
    u = math.log(0.5)
    while u < math.log(R):
        u = min(u + 2.0, math.log(R))
        pieces.append(u)
    total, err = 0.0, 0.0
    for a, b in zip(pieces[:-1], pieces[1:]):
        v, e = integrate.quad(fn, a, b, epsabs=tol, epsrel=tol, limit=200)
        total += v
        err += e
    return svol * total


# --------------------------------------------------------------------------
# fitting
# --------------------------------------------------------------------------

def sample_heat_trace(model: MultiplierModel, ts, source: str = "lattice", threads: int | None = None) -> np.ndarray:
    """``(t, Tr(A e^{-tP}))`` rows on the grid ``ts``, evaluated with up to ``threads`` workers."""
    if source == "lattice":
        fn = heat_trace_lattice
    elif source == "continuum":
        fn = heat_trace_continuum
    else:
        raise ValueError(f"unknown heat-trace source {source!r}")
    ts = [float(t) for t in ts]
    workers = max(1, int(threads or 1))
    if workers == 1:
        vals = [fn(model, t) for t in ts]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            vals = list(pool.map(lambda t: fn(model, t), ts))
    return np.column_stack([ts, vals])


def default_t_grid(points: int = 40, t_min: float = 1e-6, t_max: float = 1e-2) -> np.ndarray:
    return np.geomspace(t_min, t_max, points)


@dataclass
class FittedExpansion:
    basis: list
    coefficients: np.ndarray
    residual: float
    condition: float
    samples: np.ndarray = field(default=None, repr=False)

    def coefficient(self, alpha, l: int) -> float:
        a = Fraction(alpha)
        for (b, ll), c in zip(self.basis, self.coefficients):
            if b == a and ll == l:
                return float(c)
        raise BasisMissing(f"basis has no t^{alpha} log^{l} t term")

    def has(self, alpha, l: int) -> bool:
        return (Fraction(alpha), l) in self.basis

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        lt = np.log(t)
        return sum(c * t ** float(a) * lt**l for (a, l), c in zip(self.basis, self.coefficients))

    def to_json(self) -> dict:
        return {
            "basis": [{"alpha": str(a), "log": l} for a, l in self.basis],
            "coefficients": [float(c) for c in self.coefficients],
            "residual": self.residual,
            "condition": self.condition,
        }


def _basis_list(basis) -> list:
    out, seen = [], set()
    for a, l in basis:
        key = (Fraction(a), int(l))
        if key not in seen:
            seen.add(key)
            out.append(key)
    return sorted(out)


def fit_expansion(samples, basis: Iterable, cond_max: float = 1e12) -> FittedExpansion:
    """Least squares of ``(t, value)`` samples against ``{t^alpha log^l t}``.

    Columns are normalized before the solve; the reported condition number
    is that of the normalized design matrix.
    """
    samples = np.asarray(samples, dtype=float)
    t, y = samples[:, 0], samples[:, 1]
    basis = _basis_list(basis)
    if len(t) < len(basis) + 4:
        raise ValueError("need at least |basis| + 4 samples")
    lt = np.log(t)
    M = np.array([t ** float(a) * lt**l for a, l in basis]).T
    scale = np.linalg.norm(M, axis=0)
    Ms = M / scale
    sv = np.linalg.svd(Ms, compute_uv=False)
    cond = float(sv[0] / sv[-1]) if sv[-1] > 0 else math.inf
    if cond > cond_max:
        raise IllConditioned(f"fit condition number {cond:.3g} exceeds {cond_max:.1g}", cond)
    Q, Rm = np.linalg.qr(Ms)
    coef = np.linalg.solve(Rm, Q.T @ y) / scale
    resid = float(np.linalg.norm(M @ coef - y) / max(np.linalg.norm(y), 1e-300))
    return FittedExpansion(basis, coef, resid, cond, samples)


def auto_basis(model: MultiplierModel, max_exponent=1) -> list:
    """Small-``t`` exponents of ``Tr(A e^{-tP})`` for a radial multiplier model.

    A term ``|xi|^a log^k|xi|`` of ``q`` starts the series ``t^{-(a+n)/m}``
    (log powers up to ``k``, or ``k+1`` when the exponent is a nonnegative
    integer).  The lower-order coefficients ``c_i`` of ``p`` shift exponents
    by ``(m-i)/m``; the Gamma-function poles add plain integer powers.
    Everything is truncated at ``max_exponent``.
    """
    n, m = model.dim, model.m
    top = Fraction(max_exponent)
    shifts = {Fraction(m - i, m) for i, c in enumerate(model.p.coeffs[:-1]) if c}
    logs: dict = {}

    def add(e, L):
        if e <= top:
            logs[e] = max(logs.get(e, -1), L)

    for a, k, _ in model.q.terms:
        e0 = -(Fraction(a) + n) / m
        add(e0, k + 1 if e0 >= 0 and e0.denominator == 1 else k)
    for i in range(int(math.floor(top)) + 1):
        add(Fraction(i), 0)
    changed = True
    while changed:
        changed = False
        for e, L in list(logs.items()):
            for s in shifts:
                if e + s <= top and logs.get(e + s, -1) < L:
                    logs[e + s] = L
                    changed = True
    return [(e, l) for e in sorted(logs) for l in range(logs[e] + 1)]


def res_from_fit(fit: FittedExpansion, m: int, k: int) -> float:
    """``Res_k = m^{k+1} (-1)^{k+1} (k+1)! * [t^0 log^{k+1} t]``."""
    c = fit.coefficient(0, k + 1)
    return m ** (k + 1) * (-1) ** (k + 1) * factorial(k + 1) * c


def tr_from_fit(fit: FittedExpansion) -> float:
    """The ``t^0 log^0 t`` coefficient."""
    return fit.coefficient(0, 0)


def _rgamma_taylor(s0, order: int) -> list:
    mpmath.mp.dps = 30
    return [float(v) for v in mpmath.taylor(mpmath.rgamma, mpmath.mpf(float(s0)), order)]


def zeta_laurent_from_heat(fit: FittedExpansion, s0) -> dict:
    """Laurent coefficients of ``Tr(A P^{-s})`` at ``s0`` from the heat expansion.

    A heat term ``c_l t^alpha log^l t`` contributes ``c_l (-1)^l l! / (s + alpha)^{l+1}``
    to ``Gamma(s) Tr(A P^{-s})``.  Returns ``{q: coefficient of (s - s0)^{-q}}``.
    """
    s0 = Fraction(s0)
    alpha = -s0
    cs = {l: c for (a, l), c in zip(fit.basis, fit.coefficients) if a == alpha}
    if not cs:
        raise BasisMissing(f"fit has no t^{alpha} terms")
    L = max(cs)
    g = _rgamma_taylor(s0, L + 1)
    out = {}
    for q in range(1, L + 2):
        total = 0.0
        for l, c in cs.items():
            r = l + 1 - q
            if 0 <= r < len(g):
                total += c * (-1) ** l * factorial(l) * g[r]
        out[q] = total
    while out and len(out) > 1 and out[max(out)] == 0.0:
        del out[max(out)]
    return out
