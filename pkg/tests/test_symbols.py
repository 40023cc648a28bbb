import json
import random

import pytest
from gmpy2 import mpq

from logphg import (
    QI,
    ExactScalar,
    LogPolyhomFn,
    Res_k,
    SymbolExpansion,
    TrigPoly,
    adjoint,
    commutator,
    compose,
    leading_symbol,
    lph_mul,
    nabla_P,
    poisson_bracket,
    pushforward_linear,
    residue_density,
)
from logphg.errors import EmptySymbol, LogPhgError, UnsupportedTransform
from logphg.homogeneous import sphere_volume
from logphg.randgen import random_symbol

from conftest import pi, q

M = LogPolyhomFn.monomial
ZERO = ExactScalar.of(0)
I = QI(0, 1)


def model(n, k, coeff=1):
    """``|xi|^-n log^k |xi|`` on the torus."""
    return SymbolExpansion.from_terms(n, -n, [(0, (0,) * n, k, coeff)])


def d1(n=1):
    beta = (1,) + (0,) * (n - 1)
    return SymbolExpansion.from_terms(n, 1, [(0, beta, 0, 1)])


def e1(n=1, sign=1):
    m = (sign,) + (0,) * (n - 1)
    return SymbolExpansion.multiplication(TrigPoly.exp(m))


class TestCompose:
    def test_x_independent(self):
        A = SymbolExpansion.x_independent(M(2, 1))
        C = compose(A, A)
        assert C == SymbolExpansion.x_independent(M(2, 2)).truncate(C.depth)

    def test_derivative_and_exponential(self):
        C = compose(d1(), e1(), depth=-3) - compose(e1(), d1(), depth=-3)
        expected = SymbolExpansion.multiplication(TrigPoly.exp((1,)))
        assert C.component_at(0) == expected.component(0)
        assert all(not C.component_at(d) for d in (1, -1, -2, -3))

    def test_associativity(self, rng):
        for _ in range(8):
            n = rng.choice((1, 2))
            A, B, C = (random_symbol(rng, n, rng.randint(-2, 2), 1, (0, 1), terms=2, max_mode=2)
                       for _ in range(3))
            d = (A.order + B.order + C.order).re - 3
            lhs = compose(compose(A, B, d), C, d)
            rhs = compose(A, compose(B, C, d), d)
            assert lhs.agrees_with(rhs)
            assert lhs.components

    def test_leading_symbol_multiplicative(self, rng):
        for _ in range(15):
            n = rng.choice((1, 2))
            A = random_symbol(rng, n, q(rng.randint(-5, 5), 2), 2, (0, 2))
            B = random_symbol(rng, n, rng.randint(-2, 2), 1, (0, 1))
            assert leading_symbol(compose(A, B)) == lph_mul(leading_symbol(A), leading_symbol(B))

    def test_depth_respected(self):
        A = random_symbol(random.Random(1), 2, 1, 1, (0, 1, 2, 3))
        C = compose(A, A, depth=-1)
        assert all((C.order - j).re >= -1 for j in C.components)


class TestAdjoint:
    def test_real_x_independent(self):
        A = SymbolExpansion.x_independent(M(2, q(-3, 2)))
        assert adjoint(A).agrees_with(A)

    def test_multiplication(self):
        assert adjoint(e1(2)).agrees_with(e1(2, -1))

    def test_involution(self, rng):
        for _ in range(10):
            A = random_symbol(rng, rng.choice((1, 2)), QI(mpq(rng.randint(-4, 4), 3), mpq(1, 2)), 1, (0, 1))
            assert adjoint(adjoint(A)).agrees_with(A)


class TestCommutator:
    def test_self(self, rng):
        A = random_symbol(rng, 2, 1, 1, (0, 1))
        assert commutator(A, A).is_zero()

    def test_derivative_and_exponential(self):
        C = commutator(d1(), e1())
        assert C.component_at(0) == e1().component(0)

    def test_poisson_bracket_is_leading_term(self, rng):
        for _ in range(15):
            n = rng.choice((1, 2))
            A = random_symbol(rng, n, rng.randint(-2, 2), 1, (0, 1))
            B = random_symbol(rng, n, q(rng.randint(-3, 3), 2), 1, (0, 1))
            C = commutator(A, B)
            pb = poisson_bracket(leading_symbol(A), leading_symbol(B))
            assert C.component_at(A.order + B.order - 1) * I == pb

    def test_residue_vanishes(self, rng):
        for _ in range(25):
            n = rng.choice((1, 2))
            a = rng.randint(-2, 1)
            A = random_symbol(rng, n, a, 2, (0, 1, 2))
            B = random_symbol(rng, n, -n - a + rng.randint(0, 1), 1, (0, 1, 2))
            assert Res_k(commutator(A, B, depth=-n), A.logk + B.logk) == ZERO


class TestPoissonBracket:
    def test_derivative_exponential(self):
        xi1 = M(1, 1, beta=(1,))
        ex = LogPolyhomFn(1, 0, {((0,), 0): TrigPoly.exp((1,))})
        assert poisson_bracket(xi1, ex) == LogPolyhomFn(1, 0, {((0,), 0): TrigPoly.exp((1,), I)})

    def test_antisymmetric(self, rng):
        f = random_symbol(rng, 2, q(1, 3), 1, (0,)).component(0)
        assert not poisson_bracket(f, f)

    def test_residue_of_bracket_with_degree_one(self, rng):
        for _ in range(20):
            n = rng.choice((1, 2))
            f = random_symbol(rng, n, -n, 2, (0,), terms=3).component(0)
            g = random_symbol(rng, n, 1, 1, (0,), terms=3).component(0)
            h = poisson_bracket(f, g)
            S = SymbolExpansion(n, -n, {0: h})
            assert Res_k(S, f.logk + g.logk) == ZERO


class TestResidue:
    @pytest.mark.parametrize("k,value", [(0, 2), (1, 4), (2, 12), (3, 48)])
    def test_model_on_circle(self, k, value):
        assert Res_k(model(1, k), k) == ExactScalar.of(value)

    @pytest.mark.parametrize("n", [1, 2, 3])
    def test_density_constant(self, n):
        k = 2
        dens = residue_density(model(n, k), k)
        expected = sphere_volume(n) * ExactScalar.pi_power(-2 * n, mpq(6, 2**n))
        assert dens == TrigPoly.constant(n, expected)

    def test_low_order_has_no_density(self):
        A = SymbolExpansion.from_terms(2, -3, [(0, (0, 0), 1, 1)])
        assert not residue_density(A, 1)

    def test_derivative_type_vanishes(self):
        # xi_1 d_2 d_2 (|xi|^-1 log^2) has degree -2 and |beta| > |alpha|
        f = M(2, -1, log=2)
        from logphg import partial_deriv

        g = partial_deriv(partial_deriv(f, 1), 1).times_coordinate(0)
        S = SymbolExpansion(2, -2, {0: g})
        assert Res_k(S, 2) == ZERO

    def test_higher_level_absent(self):
        assert Res_k(model(2, 1), 2) == ZERO

    def test_truncated_above_critical_degree(self):
        A = model(2, 0).truncate(-1)
        with pytest.raises(LogPhgError):
            Res_k(SymbolExpansion.from_terms(2, 0, [(0, (0, 0), 0, 1)], depth=-1), 0)
        assert A.is_zero()


class TestPushforward:
    def test_identity(self, rng):
        A = random_symbol(rng, 2, q(1, 2), 1, (0, 1))
        assert pushforward_linear(A, [[1, 0], [0, 1]]) == A

    @pytest.mark.parametrize("T", [[[2, 0], [0, 2]], [[mpq(3, 5), mpq(4, 5)], [mpq(-4, 5), mpq(3, 5)]]])
    def test_residue_invariance(self, rng, T):
        for _ in range(6):
            A = random_symbol(rng, 2, 0, 2, (0, 1, 2, 3))
            B = pushforward_linear(A, T)
            for k in range(A.logk + 1):
                assert Res_k(B, k) == Res_k(A, k)

    def test_scaling_introduces_logs(self):
        B = pushforward_linear(model(2, 1), [[2, 0], [0, 2]])
        coeffs = [c for f in B.components.values() for c in f.terms.values()]
        assert any(key[1] for c in coeffs for key in c.mode0().terms)

    def test_general_matrix_rejected(self):
        with pytest.raises(UnsupportedTransform):
            pushforward_linear(model(2, 0), [[1, 1], [0, 1]])


class TestNablaP:
    def test_zero_iterations(self, rng):
        A = random_symbol(rng, 1, 0, 1, (0, 1))
        P = SymbolExpansion.x_independent(M(1, 2))
        assert nabla_P(A, P, 0) == A

    def test_multipliers_commute(self):
        A = SymbolExpansion.x_independent(M(2, q(-1, 2), log=1))
        P = SymbolExpansion.x_independent(M(2, 2))
        assert nabla_P(A, P, 2).is_zero()

    def test_order_bound(self, rng):
        for _ in range(10):
            n = rng.choice((1, 2))
            A = random_symbol(rng, n, rng.randint(-2, 2), 1, (0, 1))
            P = SymbolExpansion.from_terms(n, 2, [(0, (0,) * n, 0, 1), (1, (1,) + (0,) * (n - 1), 0, TrigPoly.exp((1,) + (0,) * (n - 1)))])
            for j in (1, 2):
                N = nabla_P(A, P, j)
                assert N.order == A.order + j
                assert all(i >= 0 for i in N.components)

    def test_requires_scalar_leading_symbol(self, rng):
        with pytest.raises(ValueError):
            nabla_P(model(1, 0), e1(), 1)


def test_leading_symbol():
    A = SymbolExpansion.x_independent(M(2, 2), [M(2, 0)])
    assert leading_symbol(A) == SymbolExpansion.x_independent(M(2, 2)).component(0)
    with pytest.raises(EmptySymbol):
        leading_symbol(SymbolExpansion(2, 0))


def test_leading_symbol_ignores_lower_terms(rng):
    A = random_symbol(rng, 2, 1, 1, (0, 1))
    B = random_symbol(rng, 2, 0, 1, (0, 1))
    assert leading_symbol(A + B) == leading_symbol(A)


def test_json_round_trip(rng):
    for _ in range(10):
        A = random_symbol(rng, rng.choice((1, 2, 3)), QI(mpq(rng.randint(-5, 5), 2), mpq(rng.randint(-1, 1), 3)), 2, (0, 1, 3))
        doc = json.loads(json.dumps(A.to_json()))
        assert SymbolExpansion.from_json(doc) == A
        assert SymbolExpansion.from_json(doc).to_json() == doc
    B = pushforward_linear(model(2, 1), [[2, 0], [0, 2]])
    assert SymbolExpansion.from_json(json.loads(json.dumps(B.to_json()))) == B
