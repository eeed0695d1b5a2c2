from __future__ import annotations

import math

import numpy as np
import pytest
from numpy.testing import assert_allclose
from scipy.integrate import quad

from nlslab.domain import (
    Grid,
    Harmonic,
    InversePower,
    Potential,
    Profile,
    check_v1,
    check_v2,
    default_half_width,
    grid_for,
    h1_norm_sq,
    l2_norm_sq,
    parse_potential,
    quadrature,
    x_norm_sq,
)
from nlslab.errors import GridMismatchError, InvalidInputError
from nlslab.spectrum import omega1


class ConstantVirial(Potential):
    """Constant ``V``: ``2V + rV'`` is constant."""

    kind = "test-constant"

    def value(self, r):
        return np.full_like(np.asarray(r, dtype=float), 0.5)

    def derivative(self, r):
        return np.zeros_like(np.asarray(r, dtype=float))

    @property
    def spec(self):
        return "test-constant"


class TestGrid:
    def test_half_line_starts_at_zero(self):
        g = Grid.half_line(10.0, 0.1)
        assert g.nodes[0] == 0.0
        assert g.n == 101
        assert_allclose(g.r_max, 10.0)

    def test_offset_grid_avoids_origin(self):
        g = Grid.half_line(10.0, 0.1, offset=True)
        assert_allclose(g.nodes[0], 0.05)
        assert g.offset

    def test_full_line_symmetric(self):
        g = Grid.full_line(5.0, 0.1)
        assert_allclose(g.nodes, -g.nodes[::-1], atol=1e-14)
        assert g.x_min == -(g.n - 1) * g.dx / 2

    @pytest.mark.parametrize("dx, n", [(0.0, 100), (-0.1, 100), (0.1, 10)])
    def test_rejects_bad_parameters(self, dx, n):
        with pytest.raises(InvalidInputError):
            Grid("half-line", 0.0, dx, n)

    def test_singular_potential_gets_offset_grid(self):
        assert grid_for(InversePower(1, 0.5), 0.01, 5.0).offset
        assert not grid_for(Harmonic(1), 0.01, 5.0).offset

    def test_mirrored_profile_is_even(self):
        g = Grid.half_line(4.0, 0.1)
        full = Profile(g, np.exp(-g.nodes)).mirrored()
        assert full.grid.n == 2 * g.n - 1
        assert_allclose(full.values, full.values[::-1])

    def test_profile_rejects_nan(self):
        g = Grid.half_line(4.0, 0.1)
        vals = np.ones(g.n)
        vals[3] = np.nan
        with pytest.raises(InvalidInputError):
            Profile(g, vals)


class TestQuadrature:
    def test_zero(self, line_grid):
        assert quadrature(Profile(line_grid, np.zeros(line_grid.n)), full_line=True) == 0.0

    def test_sech_squared(self, line_grid):
        f = Profile(line_grid, 2 / np.cosh(line_grid.nodes) ** 2)
        assert_allclose(quadrature(f, full_line=True), 4.0, atol=1e-8)

    def test_constant_exact(self):
        g = Grid.half_line(1.0, 0.01)
        assert g.n == 101
        assert quadrature(Profile(g, np.ones(g.n))) == pytest.approx(1.0, abs=1e-15)


class TestXNorm:
    def test_zero_profile(self, line_grid, harmonic):
        assert x_norm_sq(Profile(line_grid, np.zeros(line_grid.n)), harmonic, 1.0) == 0.0

    def test_soliton_value(self, sech_profile, zero):
        assert_allclose(x_norm_sq(sech_profile, zero, 1.0), 16 / 3, atol=1e-6)

    def test_affine_in_omega(self, sech_profile, harmonic):
        lhs = x_norm_sq(sech_profile, harmonic, 2.0) - x_norm_sq(sech_profile, harmonic, 1.0)
        assert_allclose(lhs, l2_norm_sq(sech_profile.values, sech_profile.grid), rtol=1e-12)

    def test_coercive_above_omega1(self, harmonic):
        g = Grid.full_line(15.0, 0.01)
        om1 = omega1(harmonic)
        rng = np.random.default_rng(3)
        for _ in range(5):
            c = rng.uniform(-2, 2, 4)
            u = Profile(g, np.exp(-0.5 * g.nodes**2) * np.polyval(c, g.nodes))
            omega = om1 + 0.3
            assert x_norm_sq(u, harmonic, omega) >= (omega - om1) * l2_norm_sq(u.values, g) * (1 - 1e-6)

    def test_h1_embedding_constant_stable(self, harmonic):
        g = Grid.full_line(15.0, 0.01)
        rng = np.random.default_rng(7)
        ratios = []
        for _ in range(20):
            width = rng.uniform(0.5, 2.0)
            shift = rng.uniform(-1, 1)
            u = Profile(g, np.exp(-((g.nodes - shift) ** 2) / width**2))
            ratios.append(h1_norm_sq(u) / x_norm_sq(u, harmonic, 0.0))
        # a single constant bounds the ratio over the family
        assert max(ratios) < 5.0


class TestAdmissibility:
    @pytest.fixture
    def probe(self):
        return Grid.half_line(20.0, 0.01, offset=True)

    def test_v1_harmonic(self, probe):
        assert check_v1(Harmonic(1), probe).passed

    def test_v1_inverse(self, probe):
        assert check_v1(InversePower(1, 0.5), probe).passed

    def test_v1_zero_fails(self, probe, zero):
        rep = check_v1(zero, probe)
        assert not rep.passed
        assert rep.reason == "V′ ≡ 0"

    def test_v2_harmonic(self, probe):
        assert check_v2(Harmonic(1), probe, 3).passed

    def test_v2_inverse(self, probe):
        assert check_v2(InversePower(1, 0.5), probe, 5).passed

    def test_v2_constant_virial_fails_at_critical_exponent(self, probe):
        V = ConstantVirial()
        assert not check_v2(V, probe, 5).passed
        assert check_v2(V, probe, 3).passed

    def test_step_fails_v2(self, probe):
        assert not check_v2(parse_potential("step:1:1"), probe, 3).passed


class TestPotentials:
    @pytest.mark.parametrize("spec", ["harmonic:2", "inverse:1:0.5", "step:1:2", "harmonic:1+inverse:0.5:0.3"])
    def test_derivative_matches_finite_difference(self, spec):
        V = parse_potential(spec)
        r = np.linspace(0.3, 5.0, 40)
        h = 1e-6
        assert_allclose(V.derivative(r), (V.value(r + h) - V.value(r - h)) / (2 * h), rtol=1e-6, atol=1e-8)

    @pytest.mark.parametrize("spec", ["harmonic:2", "inverse:1:0.5", "step:1:2"])
    def test_integrals(self, spec):
        V = parse_potential(spec)
        r = 1.7
        exact, _ = quad(lambda t: float(V.value(t)), 0.0, r)
        assert_allclose(V.integral(r), exact, rtol=1e-8)

    def test_hat_average_of_smooth_potential(self):
        V = Harmonic(1)
        x = np.array([0.0, 0.5, 2.0])
        # hat mean of x^2 over [x-h, x+h] is x^2 + h^2/6
        assert_allclose(V.hat_average(x, 0.1), x**2 + 0.01 / 6, rtol=1e-10)

    def test_parse_round_trip(self):
        assert parse_potential("harmonic:1+inverse:1:0.5").spec == "harmonic:1+inverse:1:0.5"

    @pytest.mark.parametrize("text", ["", "cubic:1", "harmonic:a", "harmonic:1:2"])
    def test_parse_rejects(self, text):
        with pytest.raises(InvalidInputError):
            parse_potential(text)

    def test_default_half_width_clamped(self, harmonic, zero):
        assert 20.0 <= default_half_width(harmonic, 1.0, -1.0) <= 200.0
        w = default_half_width(zero, 1e-4, 0.0)
        assert w == 200.0

    def test_grid_mismatch_error(self):
        from nlslab.domain import require_same_grid

        with pytest.raises(GridMismatchError):
            require_same_grid(Grid.half_line(1.0, 0.01), Grid.half_line(1.0, 0.02))

    def test_x_norm_uses_abs_for_complex(self, sech_profile, zero):
        z = Profile(sech_profile.grid, np.exp(0.3j) * sech_profile.values)
        assert_allclose(x_norm_sq(z, zero, 1.0), x_norm_sq(sech_profile, zero, 1.0), rtol=1e-12)
        assert math.isfinite(x_norm_sq(z, zero, 1.0))
