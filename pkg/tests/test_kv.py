import math

import numpy as np
import pytest
from gmpy2 import mpq
from scipy import integrate

from logphg import QI, ExactScalar, LogPolyhomFn, Res_k, SymbolExpansion, TrigPoly, commutator, pushforward_linear
from logphg.errors import IntegerOrder
from logphg.kv import TR, family_residue_formula, family_TR, kv_density
from logphg.randgen import random_symbol
from logphg.regint import psi, reg_int

from conftest import pi, q

M = LogPolyhomFn.monomial


def radial(a, n=1, log=0, extra=()):
    return SymbolExpansion.from_terms(n, a, [(0, (0,) * n, log, 1), *extra])


class TestDensity:
    def test_x_independent_constant(self):
        A = radial(q(-1, 3), 2, log=1)
        D = kv_density(A)
        assert list(D.modes) == [(0, 0)]
        expected = reg_int(M(2, q(-1, 3), log=1)).numeric / (2 * math.pi) ** 2
        assert D.mode0().numeric == pytest.approx(expected, rel=1e-12)
        assert D([0.3, 1.2]) == pytest.approx(expected, rel=1e-12)

    def test_modes(self):
        trig = TrigPoly(1, {(0,): 1, (2,): q(1, 2)})
        A = SymbolExpansion.from_terms(1, q(1, 2), [(0, (0,), 0, trig)])
        D = kv_density(A)
        assert D.modes[(2,)].numeric == pytest.approx(0.5 * D.modes[(0,)].numeric, rel=1e-12)

    def test_integer_order(self):
        with pytest.raises(IntegerOrder):
            kv_density(radial(-1))
        with pytest.raises(IntegerOrder):
            TR(radial(-2, 2))


class TestTrace:
    def test_three_halves(self):
        A = radial(q(-3, 2))
        v = TR(A)
        assert v.numeric == pytest.approx(reg_int(M(1, q(-3, 2))).numeric, rel=1e-12)
        conv = 2 * (integrate.quad(lambda r: psi(r) * r**-1.5, 0.25, 0.5, epsabs=1e-14)[0]
                    + integrate.quad(lambda r: r**-1.5, 0.5, np.inf, epsabs=1e-14)[0])
        assert v.numeric.real == pytest.approx(conv, rel=1e-8)

    @pytest.mark.parametrize("a,n", [(q(-5, 2), 2), (q(-7, 3), 1), (q(-10, 3), 3)])
    def test_convergent_integral(self, a, n):
        vol = {1: 2.0, 2: 2 * math.pi, 3: 4 * math.pi}[n]
        e = float(a) + n - 1
        conv = vol * (integrate.quad(lambda r: psi(r) * r**e, 0.25, 0.5, epsabs=1e-15)[0]
                      + integrate.quad(lambda r: r**e, 0.5, np.inf, epsabs=1e-15)[0])
        assert TR(radial(a, n)).numeric.real == pytest.approx(conv, rel=1e-8)

    def test_linear(self, rng):
        A = random_symbol(rng, 2, q(-1, 2), 1, (0, 1))
        B = random_symbol(rng, 2, q(-1, 2), 1, (0, 2))
        lhs = TR(A * QI(3) + B * QI(0, 2))
        rhs = 3 * TR(A).numeric + 2j * TR(B).numeric
        assert lhs.numeric == pytest.approx(rhs, rel=1e-10)

    @pytest.mark.parametrize("a", [-0.5, -1.25, 0.75])
    def test_commutator_with_exponential_has_zero_trace(self, a):
        # A = Op(psi |xi|^a e^{-ix}), B = e^{ix}: the mode-0 symbol of [A, B] is
        # h(xi + 1) - h(xi) with h = psi |xi|^a, so its finite-part integral is zero
        def h(x):
            return psi(abs(x)) * abs(x) ** a

        def ball(R):
            return (integrate.quad(h, R, R + 1, epsabs=1e-14, epsrel=1e-13)[0]
                    - integrate.quad(h, -R, -R + 1, epsabs=1e-14, epsrel=1e-13)[0])

        from logphg.regint import numeric_lim

        basis = [(a - j, 0) for j in range(6)]
        lim = numeric_lim(ball, basis)
        assert abs(lim.constant) < 1e-6

    @pytest.mark.parametrize("T", [[[mpq(3, 5), mpq(-4, 5)], [mpq(4, 5), mpq(3, 5)]], [[4, 0], [0, 4]]])
    def test_coordinate_invariance(self, rng, T):
        A = random_symbol(rng, 2, q(-3, 2), 1, (0, 2))
        B = pushforward_linear(A, T)
        assert TR(B).numeric == pytest.approx(TR(A).numeric, rel=1e-10, abs=1e-12)

    def test_json(self):
        D = kv_density(radial(q(1, 2)))
        doc = D.to_json()
        assert doc[0]["m"] == [0]
        assert set(doc[0]) == {"m", "exact", "numeric", "abs_err_bound"}


class TestFamily:
    def test_torus_pole(self):
        F = family_TR([(0, (0, 0), 0, 1)], 2)
        assert F.pole(-2).laurent == {1: pi(2, -2)}
        assert F.pole(-2).residue(1) == family_residue_formula(radial(-2, 2), 0)

    @pytest.mark.parametrize("k", [0, 1, 2])
    @pytest.mark.parametrize("n", [1, 2])
    def test_residue_linkage(self, k, n):
        trig = TrigPoly(n, {(0,) * n: 2, (1,) * n: 1})
        beta2 = (2,) + (0,) * (n - 1)
        tmpl = [(0, (0,) * n, l, trig) for l in range(k + 1)] + [(1, beta2, k, 3)]
        F = family_TR(tmpl, n)
        for p in F.poles():
            nu = p.nu
            assert p.order <= k + 1
            A_nu = SymbolExpansion.from_terms(n, nu, tmpl)
            assert p.residue(k + 1) == family_residue_formula(A_nu, k)

    def test_holomorphic_away_from_poles(self):
        F = family_TR([(0, (0,), 1, 1), (1, (1,), 0, 2)], 1)
        z0, h = -0.4 + 0.3j, 1e-4
        dx = (F(z0 + h) - F(z0 - h)) / (2 * h)
        dy = (F(z0 + 1j * h) - F(z0 - 1j * h)) / (2j * h)
        assert dx == pytest.approx(dy, rel=1e-6)

    def test_matches_trace(self):
        F = family_TR([(0, (0, 0), 1, 1)], 2)
        z = mpq(-5, 2)
        A = SymbolExpansion.from_terms(2, QI(z), [(0, (0, 0), 1, 1)])
        assert F(float(z)) == pytest.approx(TR(A).numeric, rel=1e-10)
