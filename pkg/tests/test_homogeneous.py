import json
import random

import numpy as np
import pytest
from gmpy2 import mpq

from logphg import (
    QI,
    ExactScalar,
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
from logphg.errors import DegenerateDegree, DegreeMismatch, ResidueObstruction, UnsupportedDimension
from logphg.homogeneous import log_shift, radial_divergence, restrict_to_circle
from logphg.randgen import random_lph
from logphg.trig import TrigPoly

from conftest import pi, q

M = LogPolyhomFn.monomial


class TestSphereIntegrals:
    def test_circle(self):
        assert sphere_integral_monomial((0, 0), 2) == pi(2, 2)
        assert sphere_integral_monomial((2, 0), 2) == pi(2)
        assert sphere_integral_monomial((1, 1), 2) == ExactScalar.of(0)

    def test_two_sphere(self):
        assert sphere_integral_monomial((2, 0, 0), 3) == pi(2, mpq(4, 3))

    def test_odd_dimension_volume(self):
        # |S^4| = 8 pi^2 / 3
        assert sphere_integral_monomial((0,) * 5, 5) == pi(4, mpq(8, 3))

    @pytest.mark.parametrize("beta", [(2, 2), (4, 0), (2, 0, 2), (0, 6, 0)])
    def test_against_quadrature(self, beta):
        n = len(beta)
        rng = np.random.default_rng(0)
        pts = rng.standard_normal((400_000, n))
        pts /= np.linalg.norm(pts, axis=1)[:, None]
        est = np.mean(np.prod(pts**np.array(beta), axis=1)) * float(sphere_integral_monomial((0,) * n, n))
        assert est == pytest.approx(float(sphere_integral_monomial(beta, n)), rel=2e-2)


class TestProducts:
    def test_norm_powers(self):
        assert lph_mul(M(2, q(1, 3)), M(2, q(-5, 2))) == M(2, q(-13, 6))

    def test_single_term(self):
        f = M(2, -1, log=1)
        g = M(2, -1, beta=(1, 0))
        assert lph_mul(f, g) == M(2, -2, beta=(1, 0), log=1)

    def test_log_type(self):
        f = M(2, 0) + M(2, 0, log=1)
        g = M(2, 0) - M(2, 0, log=1)
        h = lph_mul(f, g)
        assert h == M(2, 0) - M(2, 0, log=2)
        assert h.logk == 2

    def test_normal_form(self):
        # xi_1^2 + xi_2^2 = |xi|^2
        assert M(2, 2, beta=(2, 0)) + M(2, 2, beta=(0, 2)) == M(2, 2)


class TestDerivatives:
    def test_square(self):
        assert partial_deriv(M(2, 2), 0) == M(2, 1, beta=(1, 0), coeff=2)

    def test_log(self):
        assert partial_deriv(M(2, 0, log=1), 0) == M(2, -1, beta=(1, 0))

    def test_hand_expansion(self):
        f = M(2, -1, beta=(1, 0), log=1)
        expected = (M(2, -2, log=1) - M(2, -2, beta=(2, 0), log=1, coeff=2)
                    + M(2, -2, beta=(2, 0)))
        assert partial_deriv(f, 0) == expected

    def test_finite_difference(self):
        f = M(2, -1, beta=(1, 0), log=1)
        df = partial_deriv(f, 0)
        rng = np.random.default_rng(5)
        h = 1e-5
        for _ in range(20):
            x = rng.uniform(-2, 2, 2)
            e = np.array([h, 0.0])
            fd = (f(x + e) - f(x - e)) / (2 * h)
            assert df(x).real == pytest.approx(fd.real, rel=1e-7, abs=1e-8)

    def test_random_finite_difference(self, rng):
        for _ in range(10):
            n = rng.choice((1, 2, 3))
            f = random_lph(rng, n, q(rng.randint(-6, 6), 2), k=2, terms=4, max_beta=3)
            j = rng.randrange(n)
            df = partial_deriv(f, j)
            x = np.array([rng.uniform(0.5, 1.5) * rng.choice((-1, 1)) for _ in range(n)])
            e = np.zeros(n)
            e[j] = 1e-6
            fd = (f(x + e) - f(x - e)) / 2e-6
            assert complex(df(x)) == pytest.approx(complex(fd), rel=1e-6, abs=1e-6)


class TestResidues:
    def test_values(self):
        assert res_j(M(2, -2), 0) == pi(2, 2)
        assert res_j(M(2, -2, log=1), 1) == pi(2, 2)
        assert res_j(M(2, -2, log=1), 0) == ExactScalar.of(0)

    def test_derivative_has_no_top_residue(self):
        f = partial_deriv(M(2, -1, beta=(1, 0), log=2), 0)
        assert res_j(f, 2) == ExactScalar.of(0)

    def test_wrong_degree(self):
        with pytest.raises(DegreeMismatch):
            res_j(M(2, -1), 0)


class TestEuler:
    def test_power(self):
        a = q(-7, 3)
        assert euler_apply(M(3, a)) == M(3, a, coeff=a)

    def test_log(self):
        a = q(5, 2)
        f = M(2, a, log=1)
        assert euler_apply(f) == M(2, a, log=1, coeff=a) + M(2, a)

    def test_monomial(self):
        a = q(1, 2)
        f = M(2, a, beta=(2, 0))
        assert euler_apply(f) == f * a

    def test_random(self, rng):
        for _ in range(30):
            n = rng.choice((1, 2, 3))
            a = QI(mpq(rng.randint(-8, 8), 3), mpq(rng.randint(-2, 2), 5))
            f = random_lph(rng, n, a, k=3, terms=4, max_beta=4)
            assert euler_apply(f) == f * a + log_shift(f)


class TestPrimitive:
    def test_power(self):
        a, n = q(-1, 2), 3
        assert radial_primitive(M(n, a)) == M(n, a, coeff=QI(1) / (a + n))

    def test_log(self):
        a, n = q(3), 2
        c = a + n
        F = radial_primitive(M(n, a, log=1))
        assert F == M(n, a, log=1, coeff=QI(1) / c) - M(n, a, coeff=QI(1) / (c * c))
        assert radial_divergence(F) == M(n, a, log=1)

    def test_complex_degree(self):
        f = M(2, QI(mpq(-1), mpq(2)), log=2)
        assert radial_divergence(radial_primitive(f)) == f

    def test_degenerate(self):
        with pytest.raises(DegenerateDegree):
            radial_primitive(M(2, -2, beta=(1, 0)))


class TestDivergenceDecompose:
    @pytest.mark.parametrize("k", [1, 2, 3])
    def test_log_raising(self, k):
        f = M(2, -2, log=k - 1)
        parts = divergence_decompose(f, k)
        expected = [M(2, -2, log=k, coeff=q(1, k)).times_coordinate(j) for j in range(2)]
        assert parts == expected

    def test_circle_solve(self):
        f = M(2, -2, beta=(2, 0)) - M(2, -2, beta=(0, 2))
        parts = divergence_decompose(f)
        assert divergence(parts) == f
        assert all(p.degree == QI(-1) for p in parts)

    def test_noncritical(self):
        f = M(2, q(-1, 2), beta=(1, 1), log=2)
        assert divergence(divergence_decompose(f)) == f

    def test_obstruction(self):
        with pytest.raises(ResidueObstruction):
            divergence_decompose(M(2, -2))

    def test_dimension(self):
        with pytest.raises(UnsupportedDimension):
            divergence_decompose(M(3, -3, beta=(1, 1, 0)))


class TestCircle:
    def test_cos_squared(self):
        s = restrict_to_circle(M(2, 0, beta=(2, 0)))
        assert s == TrigPoly(1, {(0,): q(1, 2), (2,): q(1, 4), (-2,): q(1, 4)})

    def test_mixed(self):
        s = restrict_to_circle(M(2, 0, beta=(1, 1)))
        assert s == TrigPoly(1, {(2,): QI(0, mpq(-1, 4)), (-2,): QI(0, mpq(1, 4))})

    def test_one(self):
        assert restrict_to_circle(M(2, 0)) == TrigPoly(1, {(0,): 1})


def test_json_round_trip(rng):
    for _ in range(20):
        n = rng.choice((1, 2, 3))
        f = random_lph(rng, n, QI(mpq(rng.randint(-9, 9), 4), mpq(rng.randint(-1, 1), 3)), k=2, terms=5)
        doc = json.loads(json.dumps(f.to_json()))
        assert LogPolyhomFn.from_json(doc) == f
        assert LogPolyhomFn.from_json(doc).to_json() == f.to_json()
