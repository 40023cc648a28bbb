"""JSON encodings shared by the library and the CLI.

Rationals are written as ``[num, den]`` pairs of decimal strings so that
arbitrarily large integers survive any JSON reader.  A Gaussian-rational
coefficient is the flat list ``[re_num, re_den, im_num, im_den]``; anything
involving pi or logarithms is written as an ExactScalar document
``{"pi_terms": [...]}``.
"""

from __future__ import annotations

from gmpy2 import mpq

from .scalars import QI, ExactScalar

__all__ = [
    "rat_to_json",
    "rat_from_json",
    "degree_to_json",
    "degree_from_json",
    "coeff_to_json",
    "coeff_from_json",
]


def rat_to_json(x: mpq) -> list[str]:
    return [str(x.numerator), str(x.denominator)]


def rat_from_json(pair) -> mpq:
    if isinstance(pair, (int, str)):
        from .scalars import as_mpq

        return as_mpq(pair)
    num, den = pair
    return mpq(int(num), int(den))


def degree_to_json(a: QI) -> list[str]:
    return rat_to_json(a.re) + rat_to_json(a.im)


def degree_from_json(doc) -> QI:
    if isinstance(doc, (int, str)):
        return QI(doc)
    if len(doc) == 2:
        return QI(rat_from_json(doc))
    if len(doc) == 4:
        return QI(rat_from_json(doc[:2]), rat_from_json(doc[2:]))
    raise ValueError(f"bad degree encoding {doc!r}")


def coeff_to_json(c: ExactScalar):
    try:
        q = c.as_qi()
    except ValueError:
        return c.to_json()
    return degree_to_json(q)


def coeff_from_json(doc) -> ExactScalar:
    if isinstance(doc, dict):
        return ExactScalar.from_json(doc)
    return ExactScalar.of(degree_from_json(doc))
