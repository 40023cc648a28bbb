"""Exact calculus of log-polyhomogeneous symbols, residues and regularized traces."""

from .errors import *  # noqa: F401,F403
from .homogeneous import (
    HomogeneousFn,
    LogPolyhomFn,
    divergence,
    divergence_decompose,
    euler_apply,
    lph_mul,
    partial_deriv,
    radial_primitive,
    res_j,
    sphere_integral_monomial,
)
from .scalars import QI, ExactScalar
from .symbols import (
    SymbolExpansion,
    Res_k,
    adjoint,
    commutator,
    compose,
    leading_symbol,
    nabla_P,
    poisson_bracket,
    pushforward_linear,
    residue_density,
)
from .trig import TrigPoly

__version__ = "0.1.0"
