"""Property suites run by ``logphg verify`` and by the acceptance tests.

Every check is deterministic given the seed.  Exact checks compare
:class:`~logphg.scalars.ExactScalar` values with ``==``; numeric checks
report the observed error next to the tolerance.
"""

from __future__ import annotations

import random
import time
from dataclasses import dataclass
from math import factorial
from typing import Callable

import numpy as np
from gmpy2 import mpq

from .homogeneous import (
    LogPolyhomFn,
    divergence,
    divergence_decompose,
    euler_apply,
    log_shift,
    partial_deriv,
    partial_deriv_multi,
    radial_divergence,
    radial_primitive,
    res_j,
    sphere_volume,
)
from .randgen import random_beta, random_lph, random_symbol
from .scalars import QI, ExactScalar
from .symbols import Res_k, SymbolExpansion, compose

__all__ = ["CheckResult", "SUITES", "run_suite", "format_table"]


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str
    seconds: float = 0.0


def _timed(name: str, fn: Callable[[], tuple[bool, str]]) -> CheckResult:
    t0 = time.perf_counter()
    try:
        ok, detail = fn()
    except Exception as exc:  # report, do not crash the table
        ok, detail = False, f"{type(exc).__name__}: {exc}"
    return CheckResult(name, ok, detail, time.perf_counter() - t0)


# --------------------------------------------------------------------------
# exact identities
# --------------------------------------------------------------------------

def check_res_of_derivative(seed: int, count: int = 100) -> tuple[bool, str]:
    """``res_k(d_j f) = 0`` for ``f`` in ``P^{1-n,k}``, ``n`` in 1..3, ``k <= 3``."""
    rng = random.Random(seed)
    tried = 0
    for _ in range(count):
        n = rng.choice((1, 2, 3))
        k = rng.randint(0, 3)
        f = random_lph(rng, n, 1 - n, k=k, terms=4, max_beta=4)
        top = f.logk
        for j in range(n):
            tried += 1
            if res_j(partial_deriv(f, j), top):
                return False, f"nonzero res_{top}(d_{j} f) for f = {f}"
    return True, f"{tried} exact zeros"


def _xi_power(f: LogPolyhomFn, alpha) -> LogPolyhomFn:
    for j, a in enumerate(alpha):
        for _ in range(a):
            f = f.times_coordinate(j)
    return f


def check_res_xi_alpha_d_beta(seed: int, count: int = 100) -> tuple[bool, str]:
    """``res_k(xi^alpha d^beta f) = 0`` when ``|beta| > |alpha|`` and the degree is ``-n``."""
    rng = random.Random(seed)
    tried = 0
    for _ in range(count):
        n = rng.choice((1, 2, 3))
        k = rng.randint(0, 2)
        b = rng.randint(1, 3)
        beta = random_beta(rng, n, b)
        while sum(beta) == 0:
            beta = random_beta(rng, n, b)
        alpha = random_beta(rng, n, sum(beta) - 1)
        a = -n + sum(beta) - sum(alpha)
        f = random_lph(rng, n, a, k=k, terms=3, max_beta=3)
        g = _xi_power(partial_deriv_multi(f, beta), alpha)
        tried += 1
        if res_j(g, f.logk):
            return False, f"nonzero for alpha={alpha}, beta={beta}, f={f}"
    return True, f"{tried} exact zeros"


def _random_pair(rng: random.Random):
    n = rng.choice((1, 2))
    if rng.random() < 0.25:
        a = QI(mpq(rng.choice((-5, -3, -1, 1, 3)), 2))
        b = QI(mpq(rng.choice((-5, -3, -1, 1)), 2))
    else:
        a = QI(rng.randint(-3, 2))
        b = QI(rng.randint(-3, 2))
    # keep degree -n reachable with the default depth
    while (a + b).re < -n:
        b = b + 1
    ka, kb = rng.randint(0, 2), rng.randint(0, 1)
    comps_a = tuple(sorted(rng.sample(range(0, 5), 3)))
    comps_b = tuple(sorted(rng.sample(range(0, 5), 2)))
    A = random_symbol(rng, n, a, ka, comps_a, terms=2, max_beta=2, max_mode=3)
    B = random_symbol(rng, n, b, kb, comps_b, terms=2, max_beta=2, max_mode=3)
    return A, B


def check_commutator_residue(seed: int, count: int = 200) -> tuple[bool, str]:
    """``Res_{k+l}([A, B]) = 0`` exactly for random trigonometric symbols."""
    rng = random.Random(seed)
    nontrivial = 0
    for i in range(count):
        A, B = _random_pair(rng)
        # only the degree -n part enters the residue
        depth = -A.dim
        AB = compose(A, B, depth)
        C = AB - compose(B, A, depth)
        top = A.logk + B.logk
        r = Res_k(C, top)
        if r:
            return False, f"pair {i}: Res_{top} = {r}"
        # the individual products usually have a nonzero residue
        if Res_k(AB, top):
            nontrivial += 1
    return True, f"{count} pairs exact zero ({nontrivial} with Res(AB) != 0)"


def check_euler(seed: int, count: int = 100) -> tuple[bool, str]:
    rng = random.Random(seed)
    for _ in range(count):
        n = rng.choice((1, 2, 3))
        a = QI(mpq(rng.randint(-8, 8), rng.randint(1, 3)), mpq(rng.randint(-2, 2), 3))
        f = random_lph(rng, n, a, k=rng.randint(0, 3), terms=4, max_beta=4)
        if euler_apply(f) != f * a + log_shift(f):
            return False, f"Euler identity fails for {f}"
    return True, f"{count} exact identities"


def check_primitive(seed: int, count: int = 100) -> tuple[bool, str]:
    rng = random.Random(seed)
    done = 0
    while done < count:
        n = rng.choice((1, 2, 3))
        a = QI(mpq(rng.randint(-8, 8), rng.randint(1, 3)))
        if a == -n:
            continue
        f = random_lph(rng, n, a, k=rng.randint(0, 3), terms=4, max_beta=4)
        F = radial_primitive(f)
        if radial_divergence(F) != f:
            return False, f"primitive fails for {f}"
        done += 1
    return True, f"{count} exact identities"


def check_divergence_decompose(seed: int, count: int = 40) -> tuple[bool, str]:
    rng = random.Random(seed)
    done = 0
    while done < count:
        k = rng.randint(0, 2)
        f = random_lph(rng, 2, -2, k=k, terms=4, max_beta=4)
        # remove the obstruction: subtract res_k(f)/(2 pi) * |xi|^{-2} log^k
        top = f.logk
        r = res_j(f, top)
        if r:
            comp = dict(f.terms)
            key = ((0, 0), top)
            corr = r * ExactScalar.pi_power(-2, mpq(1, 2))
            if corr.is_rational:
                comp[key] = comp.get(key, ExactScalar.of(0)) - corr
                f = LogPolyhomFn(2, -2, comp)
            else:
                continue
        parts = divergence_decompose(f, top)
        if divergence(parts) != f:
            return False, f"decomposition fails for {f}"
        done += 1
    return True, f"{count} exact re-differentiations"


def check_model_residue(seed: int = 0, kmax: int = 3) -> tuple[bool, str]:
    vals = []
    for k in range(kmax + 1):
        A = SymbolExpansion(1, -1, {0: LogPolyhomFn(1, -1, {((0,), k): 1})})
        r = Res_k(A, k)
        vals.append(str(r))
        if r != ExactScalar.of(2 * factorial(k + 1)):
            return False, f"Res_{k} = {r}, expected {2 * factorial(k + 1)}"
    return True, "Res_k = " + ", ".join(vals)


def check_ball_log_coefficient(seed: int, count: int = 30) -> tuple[bool, str]:
    from .regint import ball_integral_expansion

    rng = random.Random(seed)
    for _ in range(count):
        n = rng.choice((1, 2, 3))
        k = rng.randint(0, 3)
        f = random_lph(rng, n, -n, k=k, terms=4, max_beta=4, complex_=False)
        lower = random_lph(rng, n, 1 - n, k=k, terms=2, max_beta=2, complex_=False)
        exp = ball_integral_expansion([f, lower])
        K = f.logk
        expect = res_j(f, K) * QI(mpq(1, K + 1))
        if exp.coefficient(0, K + 1) != expect:
            return False, f"coefficient mismatch for {f}"
    return True, f"{count} exact matches"


def check_family_poles(seed: int = 0) -> tuple[bool, str]:
    from .kv import family_TR, family_residue_formula
    from .regint import family_reg_int

    n_checked = 0
    for n in (1, 2):
        for k in range(3):
            for extra in ((), ((1, (1,) + (0,) * (n - 1), 0, 1),), ((2, (2,) + (0,) * (n - 1), k, 3),)):
                tmpl = [(0, (0,) * n, k, 1)] + list(extra)
                fam = family_reg_int(tmpl, n)
                for pole in fam.poles():
                    kk = pole.order - 1
                    if pole.residue(kk + 1) != fam.lemma_residue(pole.nu, kk):
                        return False, f"lemma mismatch n={n} k={k} at {pole.nu}"
                    n_checked += 1
                ftr = family_TR(tmpl, n)
                for pole in ftr.poles():
                    kk = pole.order - 1
                    nu = pole.nu
                    comps = {}
                    for j, beta, l, c in tmpl:
                        key = j
                        comps.setdefault(key, {})[(beta, l)] = c
                    A = SymbolExpansion(n, nu, {j: LogPolyhomFn(n, nu - j, t) for j, t in comps.items()})
                    if pole.residue(kk + 1) != family_residue_formula(A, kk):
                        return False, f"trace-family mismatch n={n} k={k} at {nu}"
                    n_checked += 1
    return True, f"{n_checked} exact pole coefficients"


# --------------------------------------------------------------------------
# numeric checks
# --------------------------------------------------------------------------

def check_transformation_rule(seed: int = 0, tol: float = 1e-5) -> tuple[bool, str]:
    from .regint import default_r_grid, numeric_ball_integrals, numeric_lim, transform_rule_rhs

    mats = {
        "2I": [[2, 0], [0, 2]],
        "rotation": [[mpq(3, 5), mpq(4, 5)], [mpq(-4, 5), mpq(3, 5)]],
        "diag(1,3)": [[1, 0], [0, 3]],
        "shear": [[1, 1], [0, 1]],
    }
    worst = 0.0
    R = default_r_grid()
    for k in (0, 1):
        f = LogPolyhomFn(2, -2, {((0, 0), k): 1})
        for name, A in mats.items():
            vals = numeric_ball_integrals(f, A, R)
            lhs = numeric_lim(vals, [(0, l) for l in range(k + 2)], R).constant
            rhs = transform_rule_rhs(f, A)
            err = abs(lhs - rhs) / abs(rhs)
            worst = max(worst, err)
            if err > tol:
                return False, f"k={k} A={name}: rel err {err:.2e}"
    return True, f"worst rel err {worst:.2e} (tol {tol:g})"


def check_kv_convergent(seed: int = 0, tol: float = 1e-8) -> tuple[bool, str]:
    from scipy import integrate

    from .kv import TR
    from .regint import psi

    worst = 0.0
    cases = [(1, mpq(-3, 2), 0), (1, mpq(-5, 2), 1), (2, mpq(-5, 2), 0), (2, mpq(-7, 3), 1)]
    for n, a, k in cases:
        A = SymbolExpansion(n, a, {0: LogPolyhomFn(n, a, {((0,) * n, k): 1})})
        tr = TR(A).numeric.real
        sv = float(sphere_volume(n))
        g = lambda r: psi(r) * r ** (float(a) + n - 1) * np.log(r) ** k
        ref = 0.0
        for lo, hi in ((0.25, 0.5), (0.5, 1.0), (1.0, np.inf)):
            ref += integrate.quad(g, lo, hi, epsabs=1e-14, epsrel=1e-13, limit=500)[0]
        # TR integrates the density (2 pi)^{-n} oint over the torus of volume (2 pi)^n
        ref *= sv
        err = abs(tr - ref) / abs(ref)
        worst = max(worst, err)
        if err > tol:
            return False, f"n={n} a={a}: rel err {err:.2e}"
    return True, f"worst rel err {worst:.2e} (tol {tol:g})"


def spectral_res_values(k: int, p=(1, 0, 1), grid=(40, 1e-6, 1e-2), max_exponent: int = 2) -> tuple[float, float]:
    from .spectral import (
        MultiplierModel,
        PolyProfile,
        RadialProfile,
        auto_basis,
        default_t_grid,
        fit_expansion,
        heat_trace_lattice,
        res_from_fit,
    )

    model = MultiplierModel(1, RadialProfile.monomial(-1, k), PolyProfile(tuple(float(c) for c in p)))
    T = default_t_grid(*grid)
    ys = np.array([heat_trace_lattice(model, t) for t in T])
    fit = fit_expansion(np.c_[T, ys], auto_basis(model, max_exponent))
    return res_from_fit(fit, model.m, k), fit.condition


def check_spectral_residue(seed: int = 0, tol: float = 5e-2) -> tuple[bool, str]:
    parts, ok = [], True
    for k in (0, 1, 2):
        r, cond = spectral_res_values(k)
        target = 2 * factorial(k + 1)
        err = abs(r - target) / target
        ok &= err <= tol
        parts.append(f"k={k}: {r:.6g} vs {target} (rel {err:.1e}, cond {cond:.1e})")
    return ok, "; ".join(parts)


def check_spectral_p_independence(seed: int = 0, tol: float = 5e-2) -> tuple[bool, str]:
    parts, ok = [], True
    for k in (0, 1, 2):
        vals = [spectral_res_values(k, p)[0] for p in ((1, 0, 1), (1, 0, 2), (1, 0, 0, 0, 1))]
        spread = max(abs(x - y) / max(abs(x), abs(y)) for x in vals for y in vals)
        ok &= spread <= tol
        parts.append(f"k={k}: " + ", ".join(f"{v:.6g}" for v in vals) + f" (spread {spread:.1e})")
    return ok, "; ".join(parts)


def tr_fit_values(p, order=mpq(-3, 2), k: int = 0, grid=(40, 1e-6, 1e-2), max_exponent: int = 2):
    from fractions import Fraction

    from .spectral import (
        MultiplierModel,
        PolyProfile,
        RadialProfile,
        auto_basis,
        default_t_grid,
        fit_expansion,
        heat_trace_lattice,
        lattice_sum,
        tr_from_fit,
    )

    model = MultiplierModel(
        1, RadialProfile.monomial(Fraction(int(order.numerator), int(order.denominator)), k),
        PolyProfile(tuple(float(c) for c in p)),
    )
    T = default_t_grid(*grid)
    ys = np.array([heat_trace_lattice(model, t) for t in T])
    fit = fit_expansion(np.c_[T, ys], auto_basis(model, max_exponent))
    return tr_from_fit(fit), lattice_sum(model)


def check_tr_fit(seed: int = 0, tol_sum: float = 1e-4, tol_p: float = 1e-3) -> tuple[bool, str]:
    vals, ok, parts = [], True, []
    for p in ((1, 0, 1), (1, 0, 2)):
        tr, ref = tr_fit_values(p)
        err = abs(tr - ref) / abs(ref)
        ok &= err <= tol_sum
        vals.append(tr)
        parts.append(f"p={p}: {tr:.10g} vs sum {ref:.10g} (rel {err:.1e})")
    spread = abs(vals[0] - vals[1]) / abs(vals[0])
    ok &= spread <= tol_p
    parts.append(f"P-spread {spread:.1e}")
    return ok, "; ".join(parts)


SUITES = {
    "exact": [
        ("res_k(d_j f) = 0", check_res_of_derivative),
        ("res_k(xi^a d^b f) = 0, |b|>|a|", check_res_xi_alpha_d_beta),
        ("Res_{k+l}[A,B] = 0 (200 pairs)", check_commutator_residue),
        ("Euler identity", check_euler),
        ("radial primitive", check_primitive),
        ("divergence decomposition n=2", check_divergence_decompose),
        ("Res_k model = 2(k+1)!", check_model_residue),
        ("R^0 log^{k+1} R coefficient", check_ball_log_coefficient),
        ("meromorphic family poles", check_family_poles),
    ],
    "numeric": [
        ("transformation rule", check_transformation_rule),
        ("TR = convergent integral", check_kv_convergent),
        ("TR from heat fit", check_tr_fit),
    ],
    "spectral": [
        ("Res_k from heat fit", check_spectral_residue),
        ("Res_k P-independence", check_spectral_p_independence),
    ],
}


def run_suite(name: str, seed: int = 0) -> list[CheckResult]:
    if name == "all":
        names = list(SUITES)
    elif name in SUITES:
        names = [name]
    else:
        raise KeyError(f"unknown suite {name!r}; choose from {sorted(SUITES) + ['all']}")
    out = []
    for s in names:
        for label, fn in SUITES[s]:
            out.append(_timed(f"[{s}] {label}", lambda fn=fn: fn(seed)))
    return out


def format_table(results: list[CheckResult]) -> str:
    width = max((len(r.name) for r in results), default=10)
    lines = [f"{'check'.ljust(width)}  result  time    detail"]
    for r in results:
        lines.append(f"{r.name.ljust(width)}  {'PASS' if r.passed else 'FAIL':6}  {r.seconds:6.2f}s  {r.detail}")
    return "\n".join(lines)
