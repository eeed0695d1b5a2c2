from __future__ import annotations

import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from nlslab.domain import Profile
from nlslab.functionals import action_level, evaluate_functionals, nehari_project
from nlslab.ground_state import find_ground_state


class TestEvaluate:
    def test_zero_profile(self, line_grid, harmonic):
        fv = evaluate_functionals(Profile(line_grid, np.zeros(line_grid.n)), harmonic, 1.0, 3)
        assert fv.E == fv.S == fv.K == fv.Q == fv.N == 0.0

    def test_soliton_values(self, sech_profile, zero):
        fv = evaluate_functionals(sech_profile, zero, 1.0, 3)
        assert_allclose(fv.K, 0.0, atol=1e-6)
        for value in (fv.S, fv.Q, fv.N):
            assert_allclose(value, 4 / 3, atol=1e-6)

    def test_scaled_soliton(self, sech_profile, zero):
        u = Profile(sech_profile.grid, 2 * sech_profile.values)
        assert_allclose(evaluate_functionals(u, zero, 1.0, 3).K, -64.0, atol=1e-5)

    @pytest.mark.parametrize("p", [2.0, 3.0, 4.5])
    def test_algebraic_identities(self, sech_profile, harmonic, p):
        u = Profile(sech_profile.grid, 0.7 * sech_profile.values)
        fv = evaluate_functionals(u, harmonic, 0.4, p)
        assert_allclose(fv.S - fv.K / (p + 1), fv.Q, rtol=1e-12)
        assert_allclose(fv.S - fv.K / 2, fv.N, rtol=1e-12)

    def test_complex_input_uses_modulus(self, sech_profile, zero):
        z = Profile(sech_profile.grid, np.exp(1j * 0.4) * sech_profile.values)
        assert_allclose(
            evaluate_functionals(z, zero, 1.0, 3).S, evaluate_functionals(sech_profile, zero, 1.0, 3).S, rtol=1e-12
        )

    def test_rejects_p_not_above_one(self, sech_profile, zero):
        with pytest.raises(ValueError):
            evaluate_functionals(sech_profile, zero, 1.0, 1.0)


class TestNehari:
    @pytest.mark.parametrize("scale, expected", [(1.0, 1.0), (2.0, 0.5), (0.5, 2.0)])
    def test_scaling_law(self, sech_profile, zero, scale, expected):
        u = Profile(sech_profile.grid, scale * sech_profile.values)
        lam, proj = nehari_project(u, zero, 1.0, 3)
        assert_allclose(lam, expected, rtol=1e-6)
        assert_allclose(evaluate_functionals(proj, zero, 1.0, 3).K, 0.0, atol=1e-9)


class TestActionLevel:
    def test_soliton(self, soliton_state):
        assert_allclose(action_level(soliton_state), 4 / 3, rtol=1e-8)

    @pytest.mark.parametrize("omega", [0.25, 4.0])
    def test_scaling(self, zero, omega):
        phi = find_ground_state(zero, omega, 3, oracle=True)
        assert_allclose(action_level(phi), omega**1.5 * 4 / 3, rtol=1e-7)

    def test_harmonic_solvers_agree(self, harmonic, harmonic_state):
        flow = find_ground_state(harmonic, 1.0, 3, solver="flow")
        d = action_level(harmonic_state)
        assert d > 0
        assert_allclose(action_level(flow), d, atol=1e-5)

    def test_ground_state_minimizes_over_trial_profiles(self, harmonic_state):
        phi = harmonic_state
        V, omega, p = phi.potential, phi.omega, phi.p
        d = action_level(phi)
        r = phi.grid.nodes
        rng = np.random.default_rng(11)
        for _ in range(100):
            width = rng.uniform(0.3, 3.0)
            power = rng.uniform(1.0, 4.0)
            wiggle = rng.uniform(-0.5, 0.5)
            u = Profile(phi.grid, np.exp(-np.abs(r / width) ** power) * (1 + wiggle * np.cos(r)))
            _, proj = nehari_project(u, V, omega, p)
            assert evaluate_functionals(proj, V, omega, p).S >= d * (1 - 1e-9)
        assert math.isfinite(d)
