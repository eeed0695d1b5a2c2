"""Ground states of the radial stationary equation and their Pohozaev structure."""

from nlslab.ground_state.flow import find_ground_state_flow
from nlslab.ground_state.pohozaev import (
    PohozaevCoefficients,
    PohozaevReport,
    UniquenessReport,
    pohozaev_check,
    uniqueness_conditions,
)
from nlslab.ground_state.shooting import (
    BLOWS_UP,
    CROSSES_ZERO,
    DECAYS,
    find_ground_state_shooting,
    shoot,
)
from nlslab.ground_state.state import GroundState, newton_polish, stationary_defect

__all__ = [
    "BLOWS_UP",
    "CROSSES_ZERO",
    "DECAYS",
    "GroundState",
    "PohozaevCoefficients",
    "PohozaevReport",
    "UniquenessReport",
    "find_ground_state",
    "find_ground_state_flow",
    "find_ground_state_shooting",
    "newton_polish",
    "pohozaev_check",
    "shoot",
    "stationary_defect",
    "uniqueness_conditions",
]


def find_ground_state(V, omega, p, solver: str = "shooting", **kwargs) -> GroundState:
    """Dispatch to the shooting or gradient-flow solver by name."""
    if solver == "shooting":
        return find_ground_state_shooting(V, omega, p, **kwargs)
    if solver == "flow":
        return find_ground_state_flow(V, omega, p, **kwargs)
    from nlslab.errors import InvalidInputError

    raise InvalidInputError(f"unknown solver {solver!r}")
