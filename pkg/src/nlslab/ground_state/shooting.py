"""Shooting on the initial height ``phi(0)`` for the radial stationary equation.

Integrating ``phi'' = (V + omega) phi - phi^p`` outward from ``phi'(0) = 0``
sorts trajectories into three classes:

``crosses-zero``
    the height is too large; the trajectory overshoots through zero.
``blows-up``
    the height is too small; the trajectory turns upward while still
    positive and leaves along the growing branch (for confining or
    asymptotically constant ``V`` it grows without bound).
``decays``
    the trajectory reaches the box edge positive and decreasing.

The ground state sits on the boundary between the first two classes, so
bisection on the height isolates it.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from nlslab.domain import Grid, Potential, Profile, check_v1, default_half_width, grid_for
from nlslab.errors import InvalidInputError, NoGroundStateError
from nlslab.ground_state.ode import STOP_NONFINITE, STOP_TURN, STOP_ZERO, integrate_second_order
from nlslab.ground_state.state import GroundState, finalize, newton_polish
from nlslab.spectrum import omega1 as compute_omega1

CROSSES_ZERO = "crosses-zero"
BLOWS_UP = "blows-up"
DECAYS = "decays"

# Series start for potentials that are singular at the origin.
_SINGULAR_START = 1e-7


@dataclass
class Shot:
    """Outcome of one outward integration."""

    classification: str
    phi0: float
    r_stop: float
    values: np.ndarray
    reached: int
    grid: Grid

    @property
    def profile(self) -> Profile:
        """Samples on the grid, zero-padded past the stopping radius."""
        out = np.zeros(self.grid.n)
        out[: self.reached] = self.values
        return Profile(self.grid, out)


def _initial_state(V: Potential, omega: float, p: float, phi0: float, grid: Grid):
    if not V.singular:
        return 0.0, (phi0, 0.0)
    r = min(_SINGULAR_START, grid.x_min)
    gap = omega - phi0 ** (p - 1)
    phi = phi0 * (1.0 + 0.5 * gap * r * r + V.double_integral(r))
    dphi = phi0 * (gap * r + V.integral(r))
    return r, (float(phi), float(dphi))


def shoot(
    V: Potential,
    omega: float,
    p: float,
    phi0: float,
    grid: Grid,
    rtol: float = 1e-12,
) -> Shot:
    """Integrate outward from ``r = 0`` with adaptive Dormand-Prince 5(4) steps."""
    if not phi0 > 0:
        raise InvalidInputError("initial height phi0 must be positive")
    r0, (phi_start, dphi_start) = _initial_state(V, omega, p, phi0, grid)
    nodes = grid.nodes
    vfun = V.scalar()
    pm1 = p - 1.0

    def accel(r, phi):
        return (vfun(r) + omega) * phi - abs(phi) ** pm1 * phi

    if not V.singular and accel(0.0, phi0) >= 0:
        # phi'' >= 0 at the origin: the trajectory rises immediately.
        return Shot(BLOWS_UP, phi0, 0.0, np.array([phi0]), 1, grid)
    if V.singular and dphi_start >= 0:
        return Shot(BLOWS_UP, phi0, r0, np.array([phi_start]), 1, grid)

    h0 = r0 if V.singular else None
    vals, reason, r_stop = integrate_second_order(
        accel, r0, phi_start, dphi_start, nodes, rtol=rtol, atol=1e-14 * phi0, h0=h0
    )
    if reason == STOP_ZERO:
        cls = CROSSES_ZERO
    elif reason in (STOP_TURN, STOP_NONFINITE):
        cls = BLOWS_UP
    elif vals.size < nodes.size:
        # step budget exhausted; treat as an unresolved rise
        cls = BLOWS_UP
    else:
        cls = DECAYS
    return Shot(cls, phi0, float(r_stop), vals, vals.size, grid)


def _height_guess(omega: float, p: float, omega1: float) -> float:
    return ((omega - omega1) * (p + 1) / 2.0) ** (1.0 / (p - 1))


def bracket_height(V, omega, p, grid, omega1, lo_limit=1e-6, hi_limit=1e6):
    """Return ``(lo, hi, shot_lo, shot_hi)`` with lo blowing up and hi crossing zero."""
    guess = min(max(_height_guess(omega, p, omega1), 10 * lo_limit), hi_limit / 10)
    shot = shoot(V, omega, p, guess, grid)
    if shot.classification == DECAYS:
        return guess, guess, shot, shot
    factor = 2.0
    if shot.classification == BLOWS_UP:
        lo, shot_lo = guess, shot
        h = guess
        while True:
            h *= factor
            if h > hi_limit:
                raise NoGroundStateError(f"no crossing trajectory below phi0 = {hi_limit:g}")
            s = shoot(V, omega, p, h, grid)
            if s.classification != BLOWS_UP:
                return lo, h, shot_lo, s
            lo, shot_lo = h, s
    hi, shot_hi = guess, shot
    h = guess
    while True:
        h /= factor
        if h < lo_limit:
            raise NoGroundStateError(f"no rising trajectory above phi0 = {lo_limit:g}")
        s = shoot(V, omega, p, h, grid)
        if s.classification != CROSSES_ZERO:
            return h, hi, s, shot_hi
        hi, shot_hi = h, s


def wkb_tail(values: np.ndarray, cut: int, grid: Grid, V: Potential, omega: float, floor: float) -> np.ndarray:
    """Replace samples past ``cut`` by the decaying linear WKB branch."""
    r = grid.nodes
    kappa = np.sqrt(np.maximum(V.value(r) + omega, floor))
    out = values.copy()
    seg = slice(cut, grid.n)
    k = kappa[seg]
    exponent = np.concatenate([[0.0], np.cumsum(0.5 * (k[1:] + k[:-1]) * grid.dx)])
    out[seg] = values[cut] * np.exp(-exponent) * np.sqrt(k[0] / k)
    return out


def find_ground_state_shooting(
    V: Potential,
    omega: float,
    p: float,
    grid: Grid | None = None,
    dx: float = 5e-3,
    half_width: float | None = None,
    oracle: bool = False,
    rel_tol: float = 1e-12,
) -> GroundState:
    """Ground state by bisection on ``phi(0)`` followed by a Newton polish.

    The bisection brackets the separatrix between ``blows-up`` and
    ``crosses-zero`` to relative width ``rel_tol``. The better of the two
    bracketing trajectories is kept up to where they separate, continued by
    the WKB tail, and polished with Newton's method on the compact
    fourth-order discretization.
    """
    if not p > 1:
        raise InvalidInputError("the nonlinearity exponent p must exceed 1")
    om1 = compute_omega1(V)
    if not omega > om1:
        raise InvalidInputError(f"omega below omega1: omega = {omega:g} <= omega1 = {om1:.6g}")
    if grid is None:
        if half_width is None:
            half_width = default_half_width(V, omega, om1)
        grid = grid_for(V, dx, half_width)
    if V.is_zero():
        if not oracle:
            raise InvalidInputError("(V1) violated: V ≡ 0 needs oracle mode")
    else:
        v1 = check_v1(V, grid)
        if not v1.passed:
            raise InvalidInputError(f"(V1) violated: {v1.reason}")

    lo, hi, shot_lo, shot_hi = bracket_height(V, omega, p, grid, om1)
    bisections = 0
    while hi - lo > rel_tol * hi:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        s = shoot(V, omega, p, mid, grid)
        bisections += 1
        if s.classification == BLOWS_UP:
            lo, shot_lo = mid, s
        elif s.classification == CROSSES_ZERO:
            hi, shot_hi = mid, s
        else:
            lo = hi = mid
            shot_lo = shot_hi = s
            break

    values = _splice(shot_lo, shot_hi, grid, V, omega, om1)
    values, sweeps = newton_polish(values, grid, V, omega, p)
    gs = finalize(
        values,
        grid,
        V,
        omega,
        p,
        solver="shooting",
        omega1=om1,
        iterations=bisections + sweeps,
        phi0=0.5 * (lo + hi) if grid.offset else None,
    )
    gs.extras.update({"bisections": bisections, "newton_sweeps": sweeps, "bracket": [lo, hi]})
    return gs


def _splice(shot_lo: Shot, shot_hi: Shot, grid: Grid, V, omega, om1) -> np.ndarray:
    """Trusted part of the bracketing trajectories plus the WKB tail."""
    m = min(shot_lo.reached, shot_hi.reached)
    a, b = shot_lo.values[:m], shot_hi.values[:m]
    scale = max(abs(a[0]), 1e-300)
    apart = np.abs(a - b) > 1e-3 * np.maximum(np.abs(a), 1e-14 * scale)
    small = np.abs(a) < 1e-14 * scale
    stop = np.nonzero(apart | small | (a <= 0))[0]
    cut = int(stop[0]) if stop.size else m
    # Back off into the region where the trajectory is still decreasing.
    dec = np.nonzero(np.diff(a[:cut]) >= 0)[0]
    if dec.size:
        cut = int(dec[0])
    cut = max(min(cut, m) - 1, 1)
    values = np.zeros(grid.n)
    values[: cut + 1] = a[: cut + 1]
    floor = max(omega - om1, 1e-8)
    return wkb_tail(values, cut, grid, V, omega, floor)
