"""Energy, action and Nehari-type functionals, and the Nehari projection."""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from nlslab.domain import Potential, Profile, dirichlet_form, integrate
from nlslab.errors import InconsistentStateError, InvalidInputError


@dataclass(frozen=True)
class FunctionalValues:
    E: float
    S: float
    K: float
    Q: float
    N: float

    def to_json(self) -> dict:
        return {k: float(v) for k, v in asdict(self).items()}


def _parts(u: Profile, V: Potential, omega: float, p: float, stencil: str):
    vals = u.values
    kinetic = dirichlet_form(vals, u.grid, stencil)
    mod2 = np.abs(vals) ** 2
    potential = integrate(V.on(u.grid) * mod2, u.grid)
    mass = integrate(mod2, u.grid)
    lp = integrate(np.abs(vals) ** (p + 1), u.grid)
    return kinetic, potential, mass, lp


def evaluate_functionals(
    u: Profile, V: Potential, omega: float, p: float, stencil: str = "compact"
) -> FunctionalValues:
    """All five functionals at ``(u, V, omega, p)``.

    ``Q`` and ``N`` are evaluated from their closed forms in ``||u||_X`` and
    ``||u||_{p+1}``; the differences ``S - K/(p+1)`` and ``S - K/2`` agree
    with them up to rounding.
    """
    if not p > 1:
        raise InvalidInputError("the nonlinearity exponent p must exceed 1")
    kinetic, potential, mass, lp = _parts(u, V, omega, p, stencil)
    xnorm = kinetic + potential + omega * mass
    energy = 0.5 * (kinetic + potential) - lp / (p + 1)
    factor = (p - 1) / (2 * (p + 1))
    return FunctionalValues(
        E=energy,
        S=energy + 0.5 * omega * mass,
        K=xnorm - lp,
        Q=factor * xnorm,
        N=factor * lp,
    )


def nehari_project(
    u: Profile, V: Potential, omega: float, p: float, stencil: str = "compact"
) -> tuple[float, Profile]:
    """Scale ``u`` onto the Nehari manifold ``K = 0``.

    Returns ``lambda0 = (Q(u) / N(u))^(1/(p-1))`` and ``lambda0 * u``.
    """
    fv = evaluate_functionals(u, V, omega, p, stencil)
    if not fv.N > 0:
        raise InvalidInputError("cannot project a profile with N(u) = 0 onto the Nehari manifold")
    if not fv.Q > 0:
        raise InvalidInputError("||u||_X^2 must be positive (is omega above omega1?)")
    lam = (fv.Q / fv.N) ** (1.0 / (p - 1))
    return lam, Profile(u.grid, lam * u.values)


def action_level(phi, rtol: float = 1e-8) -> float:
    """``d(omega) = S(phi)``, cross-checked against ``Q(phi)`` and ``N(phi)``."""
    fv = evaluate_functionals(phi.profile, phi.potential, phi.omega, phi.p)
    spread = max(abs(fv.S - fv.Q), abs(fv.S - fv.N))
    if spread > rtol * max(abs(fv.S), 1e-300):
        raise InconsistentStateError(
            f"S={fv.S!r}, Q={fv.Q!r}, N={fv.N!r} disagree beyond {rtol:g} (relative)"
        )
    if not fv.S > 0:
        raise InconsistentStateError(f"action level d(omega) = {fv.S!r} is not positive")
    return fv.S
