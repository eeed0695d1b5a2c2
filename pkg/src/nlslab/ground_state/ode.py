"""Scalar Dormand-Prince 5(4) integrator specialized to ``phi'' = F(r, phi)``.

The shooting bisection calls this a few dozen times per ground state, so the
loop works on Python floats rather than arrays; the generic machinery of
``scipy.integrate.solve_ivp`` costs an order of magnitude more per step.
"""

from __future__ import annotations

import math

import numpy as np

# Dormand-Prince tableau.
C2, C3, C4, C5 = 1 / 5, 3 / 10, 4 / 5, 8 / 9
A21 = 1 / 5
A31, A32 = 3 / 40, 9 / 40
A41, A42, A43 = 44 / 45, -56 / 15, 32 / 9
A51, A52, A53, A54 = 19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729
A61, A62, A63, A64, A65 = 9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656
B1, B3, B4, B5, B6 = 35 / 384, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84
E1, E3, E4, E5, E6, E7 = (
    71 / 57600,
    -71 / 16695,
    71 / 1920,
    -17253 / 339200,
    22 / 525,
    -1 / 40,
)

STOP_NONE = 0
STOP_ZERO = 1  # phi crossed zero
STOP_TURN = 2  # phi' became positive while phi > 0
STOP_NONFINITE = 3


def _hermite5(t, h, y0, d0, a0, y1, d1, a1):
    t2 = t * t
    t3 = t2 * t
    t4 = t3 * t
    t5 = t4 * t
    h0 = 1 - 10 * t3 + 15 * t4 - 6 * t5
    h1 = t - 6 * t3 + 8 * t4 - 3 * t5
    h2 = 0.5 * t2 - 1.5 * t3 + 1.5 * t4 - 0.5 * t5
    h3 = 10 * t3 - 15 * t4 + 6 * t5
    h4 = -4 * t3 + 7 * t4 - 3 * t5
    h5 = 0.5 * t3 - t4 + 0.5 * t5
    return y0 * h0 + h * d0 * h1 + h * h * a0 * h2 + y1 * h3 + h * d1 * h4 + h * h * a1 * h5


def integrate_second_order(
    accel,
    r0: float,
    phi: float,
    dphi: float,
    nodes: np.ndarray,
    rtol: float = 1e-12,
    atol: float = 1e-300,
    h0: float | None = None,
    max_steps: int = 200_000,
):
    """Integrate ``phi'' = accel(r, phi)`` from ``r0`` across ``nodes``.

    Stops at the first zero of ``phi`` or the first sign change of ``phi'``
    from negative to positive. Returns ``(values, stop_reason, r_stop)``
    where ``values`` holds the solution at every node passed before the stop.
    """
    r_end = float(nodes[-1])
    out = np.empty(nodes.size)
    k = 0
    # nodes at or before r0
    while k < nodes.size and nodes[k] <= r0:
        out[k] = phi
        k += 1
    r = r0
    h = h0 if h0 is not None else max(1e-3 * (r_end - r0), 1e-12)
    a = accel(r, phi)
    reason = STOP_NONE
    steps = 0
    while r < r_end and steps < max_steps:
        steps += 1
        if r + h > r_end:
            h = r_end - r
        # stage derivatives for y = (phi, dphi), f = (dphi, accel)
        y1, z1 = phi, dphi
        k1y, k1z = z1, a
        y2 = y1 + h * A21 * k1y
        z2 = z1 + h * A21 * k1z
        k2y, k2z = z2, accel(r + C2 * h, y2)
        y3 = y1 + h * (A31 * k1y + A32 * k2y)
        z3 = z1 + h * (A31 * k1z + A32 * k2z)
        k3y, k3z = z3, accel(r + C3 * h, y3)
        y4 = y1 + h * (A41 * k1y + A42 * k2y + A43 * k3y)
        z4 = z1 + h * (A41 * k1z + A42 * k2z + A43 * k3z)
        k4y, k4z = z4, accel(r + C4 * h, y4)
        y5 = y1 + h * (A51 * k1y + A52 * k2y + A53 * k3y + A54 * k4y)
        z5 = z1 + h * (A51 * k1z + A52 * k2z + A53 * k3z + A54 * k4z)
        k5y, k5z = z5, accel(r + C5 * h, y5)
        y6 = y1 + h * (A61 * k1y + A62 * k2y + A63 * k3y + A64 * k4y + A65 * k5y)
        z6 = z1 + h * (A61 * k1z + A62 * k2z + A63 * k3z + A64 * k4z + A65 * k5z)
        k6y, k6z = z6, accel(r + h, y6)
        yn = y1 + h * (B1 * k1y + B3 * k3y + B4 * k4y + B5 * k5y + B6 * k6y)
        zn = z1 + h * (B1 * k1z + B3 * k3z + B4 * k4z + B5 * k5z + B6 * k6z)
        an = accel(r + h, yn)
        ey = h * (E1 * k1y + E3 * k3y + E4 * k4y + E5 * k5y + E6 * k6y + E7 * zn)
        ez = h * (E1 * k1z + E3 * k3z + E4 * k4z + E5 * k5z + E6 * k6z + E7 * an)
        if not (math.isfinite(yn) and math.isfinite(zn) and math.isfinite(an)):
            if h < 1e-14:
                reason = STOP_NONFINITE
                break
            h *= 0.25
            continue
        sy = atol + rtol * max(abs(y1), abs(yn))
        sz = atol + rtol * max(abs(z1), abs(zn))
        err = math.sqrt(0.5 * ((ey / sy) ** 2 + (ez / sz) ** 2))
        if err > 1.0:
            h *= max(0.2, 0.9 * err ** -0.2)
            continue
        r_new = r + h
        # dense output at nodes inside (r, r_new]
        while k < nodes.size and nodes[k] <= r_new:
            t = (nodes[k] - r) / h
            out[k] = _hermite5(t, h, phi, dphi, a, yn, zn, an)
            k += 1
        r, phi, dphi, a = r_new, yn, zn, an
        if phi <= 0.0:
            reason = STOP_ZERO
            break
        if dphi > 0.0:
            reason = STOP_TURN
            break
        h *= min(5.0, 0.9 * err ** -0.2) if err > 0 else 5.0
    # Drop node values computed past an event: the sign change lies inside
    # the final step, so only nodes strictly before it are trusted.
    if reason in (STOP_ZERO, STOP_TURN):
        while k > 0 and nodes[k - 1] > r - h and out[k - 1] <= 0.0:
            k -= 1
    return out[:k], reason, r
