"""The slope ``mu'(omega)`` of the normalized ground-state family and its identities.

With ``u = phi / ||phi||`` and ``mu = ||phi||^(p-1)`` the normalized state
solves ``-u'' + (V + omega) u = mu u^p``. Its frequency derivative
``v = du/domega`` satisfies ``L+ v = -u + mu' u^p`` together with
``<u, v> = 0``; the sign of ``mu'`` decides orbital stability.

Two independent routes give ``mu'``: a pair of linear solves with ``L+``
(no differencing) and central differences of ``mu`` in ``omega``. All
linear algebra uses the same compact discretization as the ground-state
solvers, so the discrete identities below hold to solver precision.
"""

from __future__ import annotations

import csv
import io
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import trapezoid
from scipy.interpolate import CubicSpline

from nlslab.domain import (
    Grid,
    Potential,
    Profile,
    check_v1,
    check_v2,
    compact_mass,
    fourth_order_derivative,
    grid_for,
    integrate,
    kinetic_apply,
    second_difference,
)
from nlslab.errors import (
    InvalidInputError,
    InvariantViolation,
    NlsLabError,
    NumericalBreakdownError,
)
from nlslab.ground_state import GroundState, find_ground_state, newton_polish
from nlslab.ground_state.state import finalize
from nlslab.spectrum import LPLUS, assemble, smallest_eigs
from nlslab.spectrum import omega1 as compute_omega1

STABLE = "stable"
UNSTABLE = "unstable"
INCONCLUSIVE = "inconclusive"


# ---------------------------------------------------------------------------
# Normalized state and its frequency derivative
# ---------------------------------------------------------------------------


def normalized_state(phi: GroundState, tol: float = 1e-6) -> tuple[Profile, float]:
    """``u = phi / ||phi||`` and ``mu = ||phi||^(p-1)``.

    Raises ``InvariantViolation`` if ``u`` misses its own equation by more
    than ``tol * max(u)`` (which only happens for an unconverged ``phi``).
    """
    grid = phi.grid
    vals = phi.values
    mass = integrate(vals * vals, grid)
    norm = math.sqrt(mass)
    u = vals / norm
    mu = norm ** (phi.p - 1)
    resid = _normalized_defect(u, mu, phi)
    if resid > tol * np.max(u):
        raise InvariantViolation(f"normalized-state residual {resid:.3e} exceeds {tol:g} * max(u)")
    return Profile(grid, u), float(mu)


def _normalized_defect(u, mu, phi) -> float:
    grid = phi.grid
    q = phi.potential.on(grid) + phi.omega
    d = kinetic_apply(u, grid) + q * u - mu * np.abs(u) ** phi.p
    return float(np.max(np.abs(d)))


def _lplus_bands(phi: GroundState):
    grid = phi.grid
    q = phi.potential.on(grid) + phi.omega - phi.p * np.abs(phi.values) ** (phi.p - 1)
    b = compact_mass(grid)
    return second_difference(grid).scaled(-1.0) + b.times_diag(q), b, q


def lplus_apply(phi: GroundState, w: np.ndarray) -> np.ndarray:
    """``L+ w`` with the compact Laplacian."""
    _, _, q = _lplus_bands(phi)
    return kinetic_apply(w, phi.grid) + q * w


def smallest_lplus_eigenvalue(phi: GroundState) -> float:
    """Eigenvalue of the even-sector ``L+`` closest to zero."""
    ev = smallest_eigs(assemble(phi.potential, phi.omega, phi.p, phi, LPLUS), 2).eigenvalues
    return float(ev[np.argmin(np.abs(ev))])


def v_omega_solve(phi: GroundState, cond_floor: float = 1e-8) -> tuple[Profile, float]:
    """``v`` and ``mu'`` from two even-sector solves with ``L+``.

    Solves ``L+ w = -u`` and ``L+ z = u^p``; ``mu' = -<u,w>/<u,z>`` makes
    ``v = w + mu' z`` orthogonal to ``u``.
    """
    lam = smallest_lplus_eigenvalue(phi)
    if abs(lam) < cond_floor * (1.0 + abs(phi.omega)):
        raise NumericalBreakdownError(
            f"L+ is nearly singular on the even sector (eigenvalue {lam:.3e})",
            smallest_eigenvalue=lam,
        )
    u, _ = normalized_state(phi)
    grid = phi.grid
    m, b, _ = _lplus_bands(phi)
    uv = u.values
    w = m.solve(b.matvec(-uv))
    z = m.solve(b.matvec(np.abs(uv) ** phi.p))
    uz = integrate(uv * z, grid)
    if uz == 0.0 or not math.isfinite(uz):
        raise NumericalBreakdownError("degenerate decomposition: <u, z> = 0", smallest_eigenvalue=lam)
    mu_prime = -integrate(uv * w, grid) / uz
    v = w + mu_prime * z
    return Profile(grid, v), float(mu_prime)


def continue_ground_state(phi: GroundState, omega: float) -> GroundState:
    """Ground state at a nearby frequency by Newton continuation on ``phi``'s grid."""
    vals, sweeps = newton_polish(phi.values, phi.grid, phi.potential, omega, phi.p)
    return finalize(
        vals, phi.grid, phi.potential, omega, phi.p, solver=phi.solver, omega1=phi.omega1, iterations=sweeps
    )


def regrid_ground_state(phi: GroundState, grid: Grid) -> GroundState:
    """Transfer ``phi`` to another grid (spline) and re-solve there."""
    spline = CubicSpline(phi.grid.nodes, phi.values, bc_type=((1, 0.0), "not-a-knot"))
    r = grid.nodes
    start = np.where(r <= phi.grid.r_max, spline(np.clip(r, phi.grid.nodes[0], None)), 0.0)
    start = np.maximum(start, 0.0)
    vals, sweeps = newton_polish(start, grid, phi.potential, phi.omega, phi.p)
    return finalize(
        vals, grid, phi.potential, phi.omega, phi.p, solver=phi.solver, omega1=phi.omega1, iterations=sweeps
    )


def _mu(phi: GroundState) -> float:
    return integrate(phi.values**2, phi.grid) ** ((phi.p - 1) / 2)


def v_omega_fd(
    V: Potential,
    omega: float,
    p: float,
    delta: float | None = None,
    phi: GroundState | None = None,
    **solver_kwargs,
) -> tuple[Profile, float]:
    """Central differences of ``u`` and ``mu`` in ``omega``.

    The shifted states are computed on the grid of ``phi`` (solved first if
    not given) by Newton continuation, so both differ from ``phi`` only by
    the frequency. The default step is ``1e-4 (omega - omega1)``.
    """
    if phi is None:
        phi = find_ground_state(V, omega, p, **solver_kwargs)
    om1 = phi.omega1
    if delta is None:
        delta = 1e-4 * (omega - om1)
    if not (delta > 0 and omega - delta > om1):
        raise InvalidInputError("finite-difference step must be positive and keep omega - delta above omega1")
    plus = continue_ground_state(phi, omega + delta)
    minus = continue_ground_state(phi, omega - delta)
    grid = phi.grid
    u_plus = plus.values / math.sqrt(integrate(plus.values**2, grid))
    u_minus = minus.values / math.sqrt(integrate(minus.values**2, grid))
    v = (u_plus - u_minus) / (2 * delta)
    mu_prime = (_mu(plus) - _mu(minus)) / (2 * delta)
    return Profile(grid, v), float(mu_prime)


# ---------------------------------------------------------------------------
# Identities
# ---------------------------------------------------------------------------


@dataclass
class FmMmpCheck:
    """The fm-mmp identity and the quadratic-form coefficients ``a, b, c``."""

    residual: float
    a: float
    a_formula: float
    b: float
    b_first: float
    b_second: float
    c: float
    c_formula: float
    abc_defect: float
    b_negative: bool

    @property
    def b_spread(self) -> float:
        return abs(self.b_first - self.b_second)

    def to_json(self) -> dict:
        return {k: (bool(v) if isinstance(v, (bool, np.bool_)) else float(v)) for k, v in self.__dict__.items()}


def verify_fm_mmp(phi: GroundState, u: Profile, v: Profile, mu: float, mu_prime: float) -> FmMmpCheck:
    """Residual of ``mu int u^p v = (1 - mu' ||u||_{p+1}^{p+1}) / (p - 1)``.

    ``a``, ``b``, ``c`` are evaluated both as quadratic forms of ``L+`` and
    from their closed forms; ``ac - b(b+1)`` uses the quadratic forms.
    """
    p = phi.p
    grid = phi.grid
    uv, vv = u.values, v.values
    up = np.abs(uv) ** p
    lp1 = integrate(np.abs(uv) ** (p + 1), grid)
    upv = integrate(up * vv, grid)
    residual = mu * upv - (1.0 - mu_prime * lp1) / (p - 1)
    lu = lplus_apply(phi, uv)
    lv = lplus_apply(phi, vv)
    a = integrate(lu * uv, grid)
    b = integrate(lu * vv, grid)
    c = integrate(lv * vv, grid)
    a_formula = -(p - 1) * mu * lp1
    b_first = -(p - 1) * mu * upv
    b_second = mu_prime * lp1 - 1.0
    c_formula = mu_prime * upv
    # Near the critical exponent c and b + 1 both vanish with mu', so the
    # defect is measured against the size of the factors, not the products.
    denom = max(abs(a), 1.0) * max(abs(b), abs(c), 1.0)
    return FmMmpCheck(
        residual=float(residual),
        a=float(a),
        a_formula=float(a_formula),
        b=float(b),
        b_first=float(b_first),
        b_second=float(b_second),
        c=float(c),
        c_formula=float(c_formula),
        abc_defect=float(abs(a * c - b * (b + 1)) / denom),
        b_negative=bool(b < 0),
    )


@dataclass
class Key1Check:
    residual: float
    lhs: float
    rhs: float
    C1: float
    C2: float
    virial_integral: float

    def to_json(self) -> dict:
        return {k: float(v) for k, v in self.__dict__.items()}


def key1_constants(p: float, d: int = 1) -> tuple[float, float]:
    """``C1 = (d + 2 - (d - 2) p) / ((p - 1)(p + 1))`` and ``C2 = d / (2 (p - 1))``."""
    return (d + 2 - (d - 2) * p) / ((p - 1) * (p + 1)), d / (2 * (p - 1))


def verify_key1(phi: GroundState, u: Profile, v: Profile, mu_prime: float) -> Key1Check:
    """Residual of ``C1 mu' ||u||^{p+1} = C2 (5 - p) - int (2V + xV') u v``."""
    p = phi.p
    grid = phi.grid
    c1, c2 = key1_constants(p)
    lp1 = integrate(np.abs(u.values) ** (p + 1), grid)
    virial = integrate(phi.potential.virial_on(grid) * u.values * v.values, grid)
    lhs = c1 * mu_prime * lp1
    rhs = c2 * (1 + 4 - p) - virial
    return Key1Check(float(lhs - rhs), float(lhs), float(rhs), c1, c2, float(virial))


@dataclass
class SignStructure:
    v_at_0: float
    sign_changes: int
    zeros: list
    positivity_set: list
    positive_interval_at_0: bool

    def to_json(self) -> dict:
        return {
            "v_at_0": float(self.v_at_0),
            "sign_changes": int(self.sign_changes),
            "zeros": [float(z) for z in self.zeros],
            "positivity_set": [[float(a), float(b)] for a, b in self.positivity_set],
            "positive_interval_at_0": bool(self.positive_interval_at_0),
        }


def sign_structure(v: Profile, u: Profile | None = None, rel_floor: float = 1e-10) -> SignStructure:
    """Zeros of ``v`` on ``(0, r_max)`` and its positivity set.

    Samples below ``rel_floor * max|v|`` are treated as unresolved and do
    not create sign changes (the far tail is at rounding level).
    """
    grid = v.grid
    r = grid.nodes
    vals = v.values
    floor = rel_floor * np.max(np.abs(vals)) if vals.size else 0.0
    signs = np.where(vals > floor, 1, np.where(vals < -floor, -1, 0))
    idx = np.nonzero(signs)[0]
    zeros = []
    for i, j in zip(idx[:-1], idx[1:]):
        if signs[i] != signs[j]:
            # linear interpolation across the sign change
            zeros.append(float(r[i] + (r[j] - r[i]) * vals[i] / (vals[i] - vals[j])))
    v0 = _value_at_origin(vals, grid)
    pos_set = []
    start = 0.0 if idx.size and signs[idx[0]] > 0 else None
    for z in zeros:
        if start is None:
            start = z
        else:
            pos_set.append((start, z))
            start = None
    if start is not None:
        pos_set.append((start, float(r[idx[-1]])))
    interval0 = len(pos_set) == 1 and pos_set[0][0] == 0.0
    return SignStructure(v0, len(zeros), zeros, pos_set, interval0)


def _value_at_origin(vals, grid: Grid) -> float:
    if not grid.offset:
        return float(vals[0])
    # even extension: quadratic through r = dx/2, 3dx/2 symmetric about 0
    return float((9 * vals[0] - vals[1]) / 8)


def balance_intervals(signs: SignStructure, phi: GroundState) -> list[tuple[float, float]]:
    """Intervals between consecutive sign changes of ``v``, plus the end pieces.

    The piece starting at the origin is skipped for singular potentials,
    where ``V' u v`` is not integrable at 0.
    """
    grid = phi.grid
    edges = list(signs.zeros)
    if not edges:
        return []
    start = [] if phi.potential.singular else [float(grid.nodes[0])]
    stop = [float(grid.nodes[-8])]
    points = start + edges + stop
    return [(a, b) for a, b in zip(points[:-1], points[1:]) if b > a]


@dataclass
class IntervalBalance:
    r1: float
    r2: float
    lhs: float
    rhs: float

    @property
    def defect(self) -> float:
        return self.lhs - self.rhs

    def to_json(self) -> dict:
        return {"r1": self.r1, "r2": self.r2, "lhs": self.lhs, "rhs": self.rhs, "defect": self.defect}


def interval_balance(
    phi: GroundState, u: Profile, v: Profile, mu_prime: float, r1: float, r2: float
) -> IntervalBalance:
    """Both sides of the one-dimensional balance on ``[r1, r2]``.

    ``[u'' v - u' v']_{r1}^{r2} = int_{r1}^{r2} (V' u v - u u' + mu' u^p u') dr``.
    At zeros of ``v`` the ``u'' v`` terms drop and the left side reduces to
    ``u'(r1) v'(r1) - u'(r2) v'(r2)``; they are kept so any interval works.
    """
    grid = phi.grid
    r = grid.nodes
    uv, vv = u.values, v.values
    du = fourth_order_derivative(uv, grid)
    dv = fourth_order_derivative(vv, grid)
    d2u = -kinetic_apply(uv, grid)
    boundary = d2u * vv - du * dv

    fine = np.linspace(r1, r2, max(int(math.ceil((r2 - r1) / grid.dx)) * 4 + 1, 9))
    spl = {name: CubicSpline(r, arr) for name, arr in (("u", uv), ("v", vv), ("du", du))}
    uf, vf, duf = spl["u"](fine), spl["v"](fine), spl["du"](fine)
    integrand = phi.potential.derivative(fine) * uf * vf - uf * duf + mu_prime * np.abs(uf) ** phi.p * duf
    rhs = float(trapezoid(integrand, fine))
    edge = CubicSpline(r, boundary)
    lhs = float(edge(r2) - edge(r1))
    return IntervalBalance(float(r1), float(r2), lhs, rhs)


# ---------------------------------------------------------------------------
# Reports, single points and scans
# ---------------------------------------------------------------------------


@dataclass
class SlopeReport:
    omega: float
    p: float
    potential: str
    mu: float = math.nan
    mu_prime_solve: float = math.nan
    mu_prime_fd: float = math.nan
    sigma: float = math.nan
    v_profile: Profile | None = field(default=None, repr=False)
    residual_iden: float = math.nan
    residual_iden_fd: float = math.nan
    residual_fm_mmp: float = math.nan
    residual_key1: float = math.nan
    residual_abc: float = math.nan
    b_spread: float = math.nan
    b_negative: bool = False
    upv_integral: float = math.nan
    v_at_0: float = math.nan
    sign_changes: int = -1
    posipotential: float = math.nan
    mass_slope_fd: float = math.nan
    mu_prime_coarse: float = math.nan
    verdict: str = INCONCLUSIVE
    error: str = ""
    seconds: float = 0.0
    details: dict = field(default_factory=dict, repr=False)

    CSV_FIELDS = (
        "omega",
        "mu",
        "mu_prime_solve",
        "mu_prime_fd",
        "sigma",
        "residual_iden",
        "residual_fm_mmp",
        "residual_key1",
        "residual_abc",
        "upv_integral",
        "v_at_0",
        "sign_changes",
        "verdict",
        "error",
    )

    def to_json(self, include_profile: bool = False) -> dict:
        out = {}
        for key, value in self.__dict__.items():
            if key in ("v_profile", "details"):
                continue
            if isinstance(value, (np.floating, float)):
                value = float(value)
            elif isinstance(value, (np.bool_, bool)):
                value = bool(value)
            out[key] = value
        out["details"] = self.details
        if include_profile and self.v_profile is not None:
            out["v_profile"] = {
                "r": [float(x) for x in self.v_profile.grid.nodes],
                "v": [float(x) for x in self.v_profile.values],
            }
        return out

    def csv_row(self) -> list:
        row = []
        for name in self.CSV_FIELDS:
            value = getattr(self, name)
            row.append(repr(float(value)) if isinstance(value, (float, np.floating)) else value)
        return row


def verdict_for(mu_prime: float, sigma: float) -> str:
    if not (math.isfinite(mu_prime) and math.isfinite(sigma)):
        return INCONCLUSIVE
    if mu_prime > 3 * sigma:
        return STABLE
    if mu_prime < -3 * sigma:
        return UNSTABLE
    return INCONCLUSIVE


def slope_point(
    V: Potential,
    omega: float,
    p: float,
    dx: float = 5e-3,
    half_width: float | None = None,
    solver: str = "shooting",
    oracle: bool = False,
    delta: float | None = None,
    coarse: bool = True,
    phi: GroundState | None = None,
) -> SlopeReport:
    """Every slope quantity at one frequency.

    The uncertainty ``sigma`` of ``mu'`` is the spread between the two
    methods plus the change of ``mu'`` when the grid spacing is doubled
    (a conservative discretization estimate), floored at rounding level.
    """
    t0 = time.perf_counter()
    if phi is None:
        phi = find_ground_state(V, omega, p, solver=solver, dx=dx, half_width=half_width, oracle=oracle)
    rep = SlopeReport(omega=float(omega), p=float(p), potential=V.spec)
    u, mu = normalized_state(phi)
    v, mu_prime = v_omega_solve(phi)
    grid = phi.grid
    rep.mu, rep.mu_prime_solve, rep.v_profile = mu, mu_prime, v
    rep.residual_iden = abs(integrate(u.values * v.values, grid)) + abs(
        integrate(u.values**2, grid) - 1.0
    )

    v_fd, mu_prime_fd = v_omega_fd(V, omega, p, delta=delta, phi=phi)
    rep.mu_prime_fd = mu_prime_fd
    rep.residual_iden_fd = abs(integrate(u.values * v_fd.values, grid))
    rep.details["v_max_diff"] = float(np.max(np.abs(v_fd.values - v.values)))
    # d||phi||^2/domega from the same pair of states, via mu = M^((p-1)/2)
    rep.mass_slope_fd = 2.0 / (p - 1) * mu ** ((3 - p) / (p - 1)) * mu_prime_fd

    fm = verify_fm_mmp(phi, u, v, mu, mu_prime)
    rep.residual_fm_mmp = abs(fm.residual)
    rep.residual_abc = fm.abc_defect
    rep.b_spread = fm.b_spread
    rep.b_negative = fm.b_negative
    rep.details["abc"] = fm.to_json()
    key = verify_key1(phi, u, v, mu_prime)
    rep.residual_key1 = abs(key.residual)
    rep.posipotential = key.virial_integral
    rep.details["key1"] = key.to_json()
    rep.upv_integral = float(integrate(np.abs(u.values) ** p * v.values, grid))

    signs = sign_structure(v, u)
    rep.v_at_0 = signs.v_at_0
    rep.sign_changes = signs.sign_changes
    rep.details["sign_structure"] = signs.to_json()
    rep.details["interval_balance"] = [
        interval_balance(phi, u, v, mu_prime, a, b).to_json()
        for a, b in balance_intervals(signs, phi)
    ]

    disc = 0.0
    if coarse:
        coarse_grid = grid_for(V, 2 * grid.dx, grid.r_max)
        try:
            phi2 = regrid_ground_state(phi, coarse_grid)
            _, mu_prime2 = v_omega_solve(phi2)
            rep.mu_prime_coarse = mu_prime2
            disc = abs(mu_prime2 - mu_prime)
        except NlsLabError as exc:
            rep.details["coarse_error"] = str(exc)
            disc = math.inf
    floor = 1e-9 * (abs(mu_prime) + mu / max(omega - phi.omega1, 1e-300) * 1e-3)
    rep.sigma = abs(mu_prime - mu_prime_fd) + disc + floor
    rep.verdict = verdict_for(mu_prime, rep.sigma)
    rep.seconds = time.perf_counter() - t0
    return rep


def default_omegas(omega1: float, n: int = 12, lo: float = 1e-2, hi: float = 1e2) -> np.ndarray:
    """``n`` log-spaced frequencies ``omega1 + [lo, hi]``."""
    return omega1 + np.geomspace(lo, hi, n)


def _point_job(args):
    spec, omega, p, kwargs = args
    from nlslab.domain import parse_potential

    V = parse_potential(spec)
    try:
        return slope_point(V, omega, p, **kwargs)
    except NlsLabError as exc:
        return SlopeReport(omega=float(omega), p=float(p), potential=spec, error=f"{type(exc).__name__}: {exc}")


def slope_scan(
    V: Potential,
    p: float,
    omegas=None,
    jobs: int = 1,
    oracle: bool = False,
    **kwargs,
) -> list[SlopeReport]:
    """Slope reports over a list of frequencies; failures are recorded per point."""
    if not 1 < p <= 5:
        raise InvalidInputError("slope scans need 1 < p <= 5")
    om1 = compute_omega1(V)
    if omegas is None:
        omegas = default_omegas(om1)
    omegas = [float(w) for w in omegas]
    if any(not w > om1 for w in omegas):
        raise InvalidInputError(f"omega below omega1 = {om1:.6g} in the scan list")
    probe = grid_for(V, kwargs.get("dx", 5e-3), 20.0)
    if V.is_zero():
        if not oracle:
            raise InvalidInputError("(V1) violated: V ≡ 0 needs oracle mode")
    else:
        for check in (check_v1(V, probe), check_v2(V, probe, p)):
            if not check.passed:
                raise InvalidInputError(f"({check.name}) violated: {check.reason}")
    kwargs["oracle"] = oracle
    tasks = [(V.spec, w, p, kwargs) for w in omegas]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(_point_job, tasks))
    return [_point_job(t) for t in tasks]


def scan_to_csv(reports: list[SlopeReport]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(SlopeReport.CSV_FIELDS)
    for rep in reports:
        writer.writerow(rep.csv_row())
    return buf.getvalue()
