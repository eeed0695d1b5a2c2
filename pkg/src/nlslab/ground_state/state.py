"""The ground-state record and the discrete stationary equation it solves."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from nlslab.domain import (
    Grid,
    Potential,
    Profile,
    compact_mass,
    second_difference,
)
from nlslab.errors import InvariantViolation, NonConvergenceError


def _nonlinearity(phi: np.ndarray, p: float) -> np.ndarray:
    return np.abs(phi) ** (p - 1) * phi


def stationary_defect(phi: np.ndarray, grid: Grid, V: Potential, omega: float, p: float) -> np.ndarray:
    """``-phi'' + (V + omega) phi - |phi|^(p-1) phi`` with the compact Laplacian."""
    d2 = second_difference(grid)
    b = compact_mass(grid)
    return -b.solve(d2.matvec(phi)) + (V.on(grid) + omega) * phi - _nonlinearity(phi, p)


def centered_defect(phi: np.ndarray, grid: Grid, V: Potential, omega: float, p: float) -> np.ndarray:
    """Same defect with the three-point Laplacian (second-order diagnostic)."""
    d2 = second_difference(grid)
    return -d2.matvec(phi) + (V.on(grid, "centered") + omega) * phi - _nonlinearity(phi, p)


def newton_polish(
    phi: np.ndarray,
    grid: Grid,
    V: Potential,
    omega: float,
    p: float,
    max_iter: int = 60,
    tol: float = 1e-14,
) -> tuple[np.ndarray, int]:
    """Newton iteration on ``-D2 phi + B[(V + omega) phi - phi^p] = 0``.

    The Jacobian is tridiagonal, so each sweep is a banded solve.
    """
    d2 = second_difference(grid)
    b = compact_mass(grid)
    pot = V.on(grid) + omega
    phi = np.array(phi, dtype=float)
    eps = np.finfo(float).eps
    for it in range(1, max_iter + 1):
        lap = d2.matvec(phi)
        react = b.matvec(pot * phi)
        nonlin = b.matvec(_nonlinearity(phi, p))
        resid = -lap + react - nonlin
        # Rounding floor of the residual: near omega1 the Jacobian is badly
        # conditioned and the step stalls well above tol * max(phi).
        floor = 64 * eps * (
            4 * np.max(np.abs(phi)) / grid.dx**2 + np.max(np.abs(react)) + np.max(np.abs(nonlin))
        )
        if it > 1 and np.max(np.abs(resid)) <= floor:
            return phi, it - 1
        jac = d2.scaled(-1.0) + b.times_diag(pot - p * np.abs(phi) ** (p - 1))
        step = jac.solve(resid)
        if not np.all(np.isfinite(step)):
            raise NonConvergenceError("Newton step is not finite", last_iterate=phi, iterations=it)
        phi -= step
        if np.max(np.abs(step)) <= tol * np.max(np.abs(phi)):
            return phi, it
    raise NonConvergenceError(
        f"Newton polish did not converge in {max_iter} sweeps", last_iterate=phi, iterations=max_iter
    )


def extrapolate_phi0(values: np.ndarray, grid: Grid, V: Potential, omega: float, p: float) -> float:
    """Value at ``r = 0`` for grids whose first node is ``dx/2``.

    Inverts the local series ``phi(r) = phi0 (1 + int_0^r (r-t)(V + omega - phi0^(p-1)) dt)``.
    """
    if not grid.offset:
        return float(values[0])
    r = grid.x_min
    phi0 = float(values[0])
    for _ in range(8):
        corr = V.double_integral(r) + 0.5 * (omega - phi0 ** (p - 1)) * r * r
        phi0 = float(values[0]) / (1.0 + corr)
    return phi0


@dataclass
class GroundState:
    """A positive, even, decreasing solution of the stationary equation."""

    omega: float
    p: float
    potential: Potential
    profile: Profile
    phi0: float
    residual: float
    solver: str
    omega1: float = float("nan")
    iterations: int = 0
    residual_centered: float = float("nan")
    extras: dict = field(default_factory=dict)

    @property
    def grid(self) -> Grid:
        return self.profile.grid

    @property
    def values(self) -> np.ndarray:
        return self.profile.values

    def validate(self) -> "GroundState":
        """Raise ``InvariantViolation`` unless positive, decreasing and converged."""
        phi = self.profile.values
        if np.any(phi <= 0):
            i = int(np.argmax(phi <= 0))
            raise InvariantViolation(f"ground state is not positive at node {i}")
        drops = np.diff(phi)
        if np.any(drops >= 0):
            i = int(np.argmax(drops >= 0))
            raise InvariantViolation(f"ground state is not strictly decreasing at node {i}")
        if not self.residual < 1e-6 * np.max(phi):
            raise InvariantViolation(f"residual {self.residual:.3e} exceeds 1e-6 * max(phi)")
        return self

    def derivative_at_origin(self) -> float:
        """Centered estimate of ``phi'(0)`` from the even extension."""
        full = self.profile.mirrored()
        mid = full.grid.n // 2
        if full.grid.n % 2:
            return float((full.values[mid + 1] - full.values[mid - 1]) / (2 * full.grid.dx))
        return float((full.values[mid] - full.values[mid - 1]) / full.grid.dx)

    def to_json(self, include_values: bool = True) -> dict:
        out = {
            "omega": self.omega,
            "p": self.p,
            "potential": self.potential.spec,
            "phi0": self.phi0,
            "residual": self.residual,
            "residual_centered": self.residual_centered,
            "solver": self.solver,
            "omega1": self.omega1,
            "iterations": self.iterations,
            "grid": {"dx": self.grid.dx, "n": self.grid.n, "x_min": self.grid.x_min},
        }
        if include_values:
            out["values"] = [float(v) for v in self.profile.values]
        return out

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["r", "phi"])
        for r, v in zip(self.grid.nodes, self.profile.values):
            writer.writerow([repr(float(r)), repr(float(v))])
        return buf.getvalue()

    @classmethod
    def from_json(cls, data: dict) -> "GroundState":
        from nlslab.domain import parse_potential

        g = data["grid"]
        kind_offset = g.get("x_min", 0.0) > 0
        grid = Grid("half-line", g["dx"] / 2 if kind_offset else 0.0, g["dx"], g["n"])
        return cls(
            omega=data["omega"],
            p=data["p"],
            potential=parse_potential(data["potential"]),
            profile=Profile(grid, np.asarray(data["values"], dtype=float)),
            phi0=data["phi0"],
            residual=data["residual"],
            solver=data["solver"],
            omega1=data.get("omega1", math.nan),
            iterations=data.get("iterations", 0),
            residual_centered=data.get("residual_centered", math.nan),
        )


def finalize(
    values: np.ndarray,
    grid: Grid,
    V: Potential,
    omega: float,
    p: float,
    solver: str,
    omega1: float,
    iterations: int,
    phi0: float | None = None,
) -> GroundState:
    """Wrap converged samples into a validated ``GroundState``."""
    defect = stationary_defect(values, grid, V, omega, p)
    gs = GroundState(
        omega=float(omega),
        p=float(p),
        potential=V,
        profile=Profile(grid, values),
        phi0=float(phi0) if phi0 is not None else extrapolate_phi0(values, grid, V, omega, p),
        residual=float(np.max(np.abs(defect))),
        solver=solver,
        omega1=float(omega1),
        iterations=int(iterations),
        residual_centered=float(np.max(np.abs(centered_defect(values, grid, V, omega, p)))),
    )
    return gs.validate()
