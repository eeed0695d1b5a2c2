from __future__ import annotations

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from nlslab.cli import RunConfig
from nlslab.domain import Grid, Profile, l2_norm_sq, parse_potential, quadrature, x_norm_sq
from nlslab.functionals import evaluate_functionals, nehari_project
from nlslab.spectrum import omega1

GRID = Grid.full_line(12.0, 0.02)
X = GRID.nodes

widths = st.floats(0.3, 3.0)
centres = st.floats(-2.0, 2.0)
amps = st.floats(0.1, 3.0)
exponents = st.floats(1.2, 5.0)
potentials = st.sampled_from(["harmonic:1", "harmonic:0.3", "inverse:1:0.5", "harmonic:1+inverse:0.5:0.3"])


def bump(width, centre, amp):
    return amp * np.exp(-(((X - centre) / width) ** 2))


def profile(width, centre, amp):
    return Profile(GRID, bump(width, centre, amp))


@settings(max_examples=40, deadline=None)
@given(widths, centres, amps, widths, centres, amps, st.floats(-3, 3))
def test_quadrature_linear_and_monotone(w1, c1, a1, w2, c2, a2, k):
    f, g = bump(w1, c1, a1), bump(w2, c2, a2)
    qf = quadrature(Profile(GRID, f), full_line=True)
    qg = quadrature(Profile(GRID, g), full_line=True)
    assert_allclose(quadrature(Profile(GRID, f + k * g), full_line=True), qf + k * qg, rtol=1e-10, atol=1e-12)
    assert quadrature(Profile(GRID, f + g), full_line=True) >= qf


@settings(max_examples=30, deadline=None)
@given(widths, centres, amps, potentials, st.floats(0.05, 5.0))
def test_x_norm_coercive(w, c, a, spec, gap):
    V = parse_potential(spec)
    grid = Grid.full_line(12.0, 0.02, avoid_origin=V.singular)
    u = Profile(grid, a * np.exp(-(((grid.nodes - c) / w) ** 2)))
    omega = omega1(V) + gap
    assert x_norm_sq(u, V, omega) >= gap * l2_norm_sq(u.values, grid) * (1 - 1e-3)
    assert_allclose(x_norm_sq(u, V, omega + 1) - x_norm_sq(u, V, omega), l2_norm_sq(u.values, grid), rtol=1e-10)


@settings(max_examples=40, deadline=None)
@given(widths, centres, amps, exponents, st.floats(0.0, 3.0))
def test_functional_identities(w, c, a, p, omega):
    V = parse_potential("harmonic:1")
    fv = evaluate_functionals(profile(w, c, a), V, omega, p)
    scale = max(abs(fv.S), abs(fv.K), abs(fv.Q), 1e-300)
    assert abs(fv.S - fv.K / (p + 1) - fv.Q) <= 1e-12 * scale
    assert abs(fv.S - fv.K / 2 - fv.N) <= 1e-12 * scale


@settings(max_examples=40, deadline=None)
@given(widths, centres, amps, exponents, st.floats(-0.9, 3.0))
def test_nehari_projection_lands_on_manifold(w, c, a, p, omega):
    V = parse_potential("harmonic:1")
    _, proj = nehari_project(profile(w, c, a), V, omega, p)
    fv = evaluate_functionals(proj, V, omega, p)
    assert abs(fv.K) <= 1e-10 * fv.Q


@settings(max_examples=25, deadline=None)
@given(
    st.sampled_from(["groundstate", "scan", "evolve", "verify"]),
    potentials,
    exponents,
    st.one_of(st.none(), st.floats(-0.9, 50.0)),
    st.floats(1e-3, 0.1),
    st.lists(st.integers(0, 99), min_size=1, max_size=3),
    st.booleans(),
)
def test_config_round_trip(command, spec, p, omega, dx, seeds, oracle):
    cfg = RunConfig(command=command, potential=spec, p=p, omega=omega, dx=dx,
                    seed=",".join(map(str, seeds)), oracle_mode=oracle)
    text = cfg.to_text()
    assert RunConfig.from_text(text) == cfg
    assert RunConfig.from_text(text).to_text() == text
