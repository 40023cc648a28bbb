"""Seeded random generators for property checks (shared by tests and ``verify``)."""

from __future__ import annotations

import random
from typing import Sequence

from gmpy2 import mpq

from .homogeneous import LogPolyhomFn
from .scalars import QI
from .symbols import SymbolExpansion
from .trig import TrigPoly

__all__ = ["random_qi", "random_lph", "random_trig", "random_symbol", "random_beta"]


def random_qi(rng: random.Random, complex_: bool = True, span: int = 4) -> QI:
    re = mpq(rng.randint(-span, span), rng.randint(1, 3))
    im = mpq(rng.randint(-span, span), rng.randint(1, 3)) if complex_ and rng.random() < 0.5 else 0
    if re == 0 and im == 0:
        re = mpq(1)
    return QI(re, im)


def random_beta(rng: random.Random, n: int, max_total: int) -> tuple:
    total = rng.randint(0, max_total)
    beta = [0] * n
    for _ in range(total):
        beta[rng.randrange(n)] += 1
    return tuple(beta)


def random_lph(
    rng: random.Random,
    n: int,
    degree,
    k: int = 1,
    terms: int = 3,
    max_beta: int = 3,
    complex_: bool = True,
) -> LogPolyhomFn:
    out = {}
    for _ in range(terms):
        out[(random_beta(rng, n, max_beta), rng.randint(0, k))] = random_qi(rng, complex_)
    return LogPolyhomFn(n, degree, out)


def random_trig(rng: random.Random, n: int, max_mode: int = 3, modes: int = 2, dual=None) -> TrigPoly:
    out = {}
    for _ in range(modes):
        m = tuple(rng.randint(-max_mode, max_mode) for _ in range(n))
        out[m] = random_qi(rng)
    return TrigPoly(n, out, dual)


def random_symbol(
    rng: random.Random,
    n: int,
    order,
    k: int = 1,
    components: Sequence[int] = (0, 1, 2),
    terms: int = 2,
    max_beta: int = 2,
    max_mode: int = 3,
    x_dependent: bool = True,
) -> SymbolExpansion:
    """Random finite symbol with the given component offsets."""
    comps = {}
    order = order if isinstance(order, QI) else QI(mpq(order))
    for j in components:
        f = {}
        for _ in range(terms):
            key = (random_beta(rng, n, max_beta), rng.randint(0, k))
            f[key] = random_trig(rng, n, max_mode) if x_dependent else TrigPoly.constant(n, random_qi(rng))
        comps[j] = LogPolyhomFn(n, order - j, f)
    return SymbolExpansion(n, order, comps)
