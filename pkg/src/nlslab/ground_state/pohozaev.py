"""Pohozaev structure of the radial equation and the uniqueness conditions.

For ``phi'' + (f'/f) phi' - g phi + h phi^p = 0`` the weight functions
``a, b, c, G, D, U1, U2`` are built from ``(f, g, h)``; along any positive
solution ``J(r; phi)`` satisfies ``dJ/dr = G phi^2``. The stationary NLS
corresponds to ``f = h = 1`` and ``g = V + omega``, where everything is
explicit: ``a = 1``, ``b = c = 0`` and ``G = -V'/2``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.integrate import IntegrationWarning, quad

from nlslab.domain import CheckReport, Grid, Potential, fourth_order_derivative, kinetic_apply

Fn = Callable[[float], float]


def _derivative(fn: Fn, step: float = 1e-3) -> Fn:
    """Five-point central derivative with a step relative to ``r``."""

    def d(r):
        r = np.asarray(r, dtype=float)
        h = step * np.maximum(np.abs(r), 1.0)
        h = np.minimum(h, 0.5 * np.abs(r)) if np.all(r > 0) else h
        return (-fn(r + 2 * h) + 8 * fn(r + h) - 8 * fn(r - h) + fn(r - 2 * h)) / (12 * h)

    return d


@dataclass
class PohozaevCoefficients:
    """Coefficient functions of the Pohozaev identity for given ``(f, g, h, p)``."""

    f: Fn
    g: Fn
    h: Fn
    p: float
    a: Fn
    b: Fn
    c: Fn
    G: Fn
    D: Fn
    U1: Fn
    U2: Fn
    notes: dict = field(default_factory=dict)

    @classmethod
    def from_fgh(cls, f: Fn, g: Fn, h: Fn, p: float, step: float = 1e-3) -> "PohozaevCoefficients":
        """General construction; derivatives are taken numerically.

        Nested differences lose digits (``c'`` involves a third derivative of
        ``a``), so expect roughly 1e-6 relative accuracy in ``G``.
        """
        df = _derivative(f, step)

        def a(r):
            return f(r) ** (2 * (p + 1) / (p + 3)) * h(r) ** (-2 / (p + 3))

        da = _derivative(a, step)

        def b(r):
            return -0.5 * da(r) + df(r) / f(r) * a(r)

        db = _derivative(b, step)

        def c(r):
            return -db(r) + df(r) / f(r) * b(r)

        dc = _derivative(c, step)
        dag = _derivative(lambda r: a(r) * g(r), step)

        def G(r):
            return b(r) * g(r) + 0.5 * dc(r) - 0.5 * dag(r)

        def D(r):
            return b(r) ** 2 - a(r) * (c(r) - a(r) * g(r))

        def U1(r):
            return _weighted_integral(lambda t: f(t) * (abs(g(t)) + h(t)), r) / f(r)

        def U2(r):
            return _weighted_integral(lambda t: f(t) * h(t), r) / f(r)

        return cls(f, g, h, p, a, b, c, G, D, U1, U2, {"derivatives": "numerical"})

    @classmethod
    def for_nls(cls, V: Potential, omega: float, p: float) -> "PohozaevCoefficients":
        """Exact coefficients for ``f = h = 1``, ``g = V + omega``."""

        def one(r):
            return np.ones_like(np.asarray(r, dtype=float))

        def zero(r):
            return np.zeros_like(np.asarray(r, dtype=float))

        def g(r):
            return V.value(r) + omega

        def G(r):
            return -0.5 * V.derivative(r)

        def U1(r):
            return _weighted_integral(lambda t: abs(float(V.value(t)) + omega) + 1.0, r)

        def U2(r):
            return np.asarray(r, dtype=float)

        return cls(one, g, one, p, one, zero, zero, G, g, U1, U2, {"derivatives": "exact"})

    def J(self, r, phi, dphi):
        """``a phi'^2/2 + b phi' phi + (c - a g) phi^2/2 + a h phi^(p+1)/(p+1)``."""
        a, b, c = self.a(r), self.b(r), self.c(r)
        g, h = self.g(r), self.h(r)
        return (
            0.5 * a * dphi**2
            + b * dphi * phi
            + 0.5 * (c - a * g) * phi**2
            + a * h * np.abs(phi) ** (self.p + 1) / (self.p + 1)
        )


def _weighted_integral(fn, r) -> float | np.ndarray:
    r_arr = np.asarray(r, dtype=float)
    if r_arr.ndim:
        return np.array([_weighted_integral(fn, float(x)) for x in r_arr])
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", IntegrationWarning)
        val, _ = quad(fn, 0.0, float(r), limit=200)
    return val


@dataclass
class PohozaevReport:
    passed: bool
    max_defect: float
    tolerance: float
    scale: float
    j_min: float
    j_end: float
    monotone: bool
    first_excluded: int
    checks: list = field(default_factory=list)
    r: np.ndarray | None = None
    J: np.ndarray | None = None
    defect: np.ndarray | None = None

    def to_json(self) -> dict:
        return {
            "passed": bool(self.passed),
            "max_defect": self.max_defect,
            "tolerance": self.tolerance,
            "scale": self.scale,
            "j_min": self.j_min,
            "j_end": self.j_end,
            "monotone": bool(self.monotone),
            "first_excluded": self.first_excluded,
            "checks": [c.to_json() for c in self.checks],
        }


def pohozaev_check(phi, exclude_radius: float | None = None, j_end_tol: float = 1e-10) -> PohozaevReport:
    """Check ``dJ/dr = -V' phi^2 / 2``, ``J >= 0``, ``J`` non-increasing and ``J(r_max) ~ 0``.

    Derivatives use five-point differences on the even extension; the
    tolerance is ``10 dx^2`` times the largest term of ``dJ/dr``. For a
    potential singular at the origin ``phi`` has a fractional-power cusp
    there, so nodes with ``r < exclude_radius`` (default ``20 dx``) are left
    out of the pointwise comparison.
    """
    grid: Grid = phi.grid
    V = phi.potential
    r = grid.nodes
    vals = phi.values
    coeffs = PohozaevCoefficients.for_nls(V, phi.omega, phi.p)
    dphi = fourth_order_derivative(vals, grid)
    J = coeffs.J(np.abs(r), vals, dphi)
    dJ = fourth_order_derivative(J, grid)
    rhs = np.zeros_like(r)
    pos = r > 0
    rhs[pos] = coeffs.G(r[pos]) * vals[pos] ** 2
    if exclude_radius is None:
        exclude_radius = 20 * grid.dx if V.singular else 0.0
    # the far wall is a Dirichlet ghost; keep two stencil widths away from it
    mask = (r >= exclude_radius) & pos
    mask[-3:] = False
    if not V.singular:
        mask[0] = True  # r = 0: both sides vanish by symmetry
    defect = np.zeros_like(r)
    defect[mask] = dJ[mask] - rhs[mask]
    # dJ/dr = phi' (phi'' - g phi + phi^p) - V' phi^2 / 2 is a cancellation
    # of terms each much larger than J itself when omega is large; measure
    # the defect against the largest of them.
    d2phi = -kinetic_apply(vals, grid)
    g = np.zeros_like(r)
    g[pos] = coeffs.g(r[pos])
    terms = np.stack(
        [
            np.abs(dphi * d2phi),
            np.abs(g * vals * dphi),
            np.abs(vals) ** phi.p * np.abs(dphi),
            np.abs(rhs),
        ]
    )[:, mask]
    scale = float(terms.max()) if terms.size else 0.0
    tol = 10 * grid.dx**2 * scale
    max_defect = float(np.max(np.abs(defect)))
    checks = []
    idx = int(np.argmax(np.abs(defect)))
    checks.append(
        CheckReport(
            "identity",
            max_defect <= tol,
            "" if max_defect <= tol else f"dJ/dr + V' phi^2/2 = {max_defect:.3e} > {tol:.3e}",
            None if max_defect <= tol else idx,
        )
    )
    sign_tol = tol * grid.dx
    Jm = J[mask]
    j_min = float(Jm.min()) if Jm.size else math.nan
    nonneg = bool(Jm.size == 0 or j_min >= -sign_tol)
    checks.append(
        CheckReport("J_nonnegative", nonneg, "" if nonneg else f"min J = {j_min:.3e}")
    )
    if V.is_zero():
        monotone = True
    else:
        rises = np.diff(Jm)
        monotone = bool(rises.size == 0 or rises.max() <= sign_tol)
    checks.append(
        CheckReport("J_nonincreasing", monotone, "" if monotone else "J increases somewhere")
    )
    j_end = float(J[-1])
    end_ok = abs(j_end) < j_end_tol
    checks.append(
        CheckReport("J_boundary", end_ok, "" if end_ok else f"|J(r_max)| = {abs(j_end):.3e}")
    )
    first_excluded = int(np.argmax(mask)) if mask.any() else grid.n
    return PohozaevReport(
        passed=all(c.passed for c in checks),
        max_defect=max_defect,
        tolerance=tol,
        scale=scale,
        j_min=j_min,
        j_end=j_end,
        monotone=monotone,
        first_excluded=first_excluded,
        checks=checks,
        r=r,
        J=J,
        defect=defect,
    )


@dataclass
class UniquenessReport:
    passed: bool
    checks: list

    def to_json(self) -> dict:
        return {"passed": bool(self.passed), "checks": [c.to_json() for c in self.checks]}

    def __getitem__(self, name: str) -> CheckReport:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)


def uniqueness_conditions(V: Potential, omega: float, p: float, grid: Grid) -> UniquenessReport:
    """Numerical check of conditions (I)-(IV) for ``f = h = 1``, ``g = V + omega``.

    Report-only: each condition is returned with a reason when it fails.
    """
    coeffs = PohozaevCoefficients.for_nls(V, omega, p)
    R = grid.r_max
    r = grid.nodes[grid.nodes > 0]
    checks = []

    g_vals = coeffs.g(r)
    dg = V.derivative(r)
    ok = bool(np.all(np.isfinite(g_vals)) and np.all(np.isfinite(dg)))
    checks.append(CheckReport("I", ok, "" if ok else "g or g' not finite on (0, R]"))

    def weight(t):
        return abs(float(V.value(t)) + omega) + 1.0

    with warnings.catch_warnings():
        warnings.simplefilter("error", IntegrationWarning)
        try:
            ia, ea = quad(weight, 0.0, R, limit=400)
            ok_a = math.isfinite(ia) and ea <= 1e-6 * max(abs(ia), 1.0)
        except IntegrationWarning:
            ia, ok_a = math.inf, False
        try:
            ib, eb = quad(lambda t: weight(t) * (R - t), 0.0, R, limit=400)
            ok_b = math.isfinite(ib) and eb <= 1e-6 * max(abs(ib), 1.0)
        except IntegrationWarning:
            ib, ok_b = math.inf, False
    checks.append(
        CheckReport("IIa", ok_a, "" if ok_a else "f(|g|+h) not integrable near 0", details={"integral": ia})
    )
    checks.append(
        CheckReport("IIb", ok_b, "" if ok_b else "weighted integral diverges", details={"integral": ib})
    )

    radii = np.logspace(-1, -8, 8)
    products = np.array([rr * coeffs.U1(rr) * float(coeffs.a(rr)) for rr in radii])
    b_terms = np.array([float(coeffs.b(rr)) * float(coeffs.U2(rr)) for rr in radii])
    ok3 = bool(
        np.all(np.isfinite(products))
        and abs(products[-1]) < 1e-6
        and np.all(np.diff(np.abs(products)) <= 0)
        and np.all(np.abs(b_terms) < 1e-12)
    )
    checks.append(
        CheckReport(
            "III",
            ok3,
            "" if ok3 else "a U1 U2 does not vanish as r -> 0",
            details={"radii": radii.tolist(), "a_U1_U2": products.tolist()},
        )
    )

    G = coeffs.G(r)
    scale = 1e-12 * (1.0 + np.abs(V.value(r)))
    pos = np.nonzero(G > scale)[0]
    if pos.size:
        checks.append(
            CheckReport("IV", False, "G > 0", int(pos[0]), {"r": float(r[pos[0]])})
        )
    elif not np.any(G < -scale):
        checks.append(CheckReport("IV", False, "G ≡ 0"))
    else:
        checks.append(CheckReport("IV", True))
    return UniquenessReport(all(c.passed for c in checks), checks)
