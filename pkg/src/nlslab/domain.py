"""Grids, potentials, quadrature and the norms of the energy space.

Half-line grids carry even (radial) profiles. A half-line grid either has a
node at ``r = 0`` or, for potentials that are singular at the origin, starts
at ``dx/2`` so that its mirror image is a uniform full-line grid that skips
the origin. Both variants are treated as the even restriction of a
full-line Dirichlet box whose ghost node sits one spacing past the last node.

Two second-derivative discretizations are provided:

* the three-point centered difference ``D2`` (used for spectra), and
* the compact fourth-order form ``B^{-1} D2`` with ``B = tridiag(1, 10, 1)/12``
  (Numerov), used for ground states, norms and the linear solves of the
  slope machinery. Both ``D2`` and ``B`` are symmetric Toeplitz on the
  mirrored box, so they commute and ``B^{-1} D2`` is self-adjoint for the
  trapezoid weights.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import NamedTuple, Sequence

import numpy as np
from scipy.linalg import solve_banded

from nlslab.errors import GridMismatchError, InvalidInputError

HALF_LINE = "half-line"
FULL_LINE = "full-line"

# ln(1e12): the tail of a ground state must drop below 1e-12 inside the box.
_TAIL_DECADES = math.log(1e12)
_UNDERFLOW_GUARD = 600.0


# ---------------------------------------------------------------------------
# Grids and profiles
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Grid:
    """Uniform grid on the half-line ``[0, inf)`` or on a symmetric interval."""

    kind: str
    x_min: float
    dx: float
    n: int

    def __post_init__(self):
        if self.kind not in (HALF_LINE, FULL_LINE):
            raise InvalidInputError(f"unknown grid kind {self.kind!r}")
        if not self.dx > 0:
            raise InvalidInputError("grid spacing dx must be positive")
        if self.n < 16:
            raise InvalidInputError("grids need at least 16 points")
        if self.kind == HALF_LINE:
            if not (self.x_min == 0.0 or math.isclose(self.x_min, self.dx / 2)):
                raise InvalidInputError("half-line grids start at 0 or dx/2")
        elif not math.isclose(self.x_min, -(self.n - 1) * self.dx / 2, rel_tol=1e-12):
            raise InvalidInputError("full-line grids are symmetric about 0")

    @classmethod
    def half_line(cls, half_width: float, dx: float, offset: bool = False) -> "Grid":
        if offset:
            return cls(HALF_LINE, dx / 2, dx, int(round(half_width / dx)))
        return cls(HALF_LINE, 0.0, dx, int(round(half_width / dx)) + 1)

    @classmethod
    def full_line(cls, half_width: float, dx: float, avoid_origin: bool = False) -> "Grid":
        m = int(round(half_width / dx))
        n = 2 * m if avoid_origin else 2 * m + 1
        return cls(FULL_LINE, -(n - 1) * dx / 2, dx, n)

    @property
    def offset(self) -> bool:
        """True for half-line grids whose first node is ``dx/2``."""
        return self.kind == HALF_LINE and self.x_min > 0

    @cached_property
    def nodes(self) -> np.ndarray:
        return self.x_min + self.dx * np.arange(self.n)

    @property
    def r_max(self) -> float:
        return self.x_min + (self.n - 1) * self.dx

    @cached_property
    def weights(self) -> np.ndarray:
        """Composite trapezoid weights on the grid's own domain."""
        w = np.full(self.n, self.dx)
        w[-1] = self.dx / 2
        if self.kind == FULL_LINE or not self.offset:
            w[0] = self.dx / 2
        return w

    def mirrored(self) -> "Grid":
        """Full-line grid obtained by reflecting a half-line grid through 0."""
        if self.kind == FULL_LINE:
            return self
        n = 2 * self.n if self.offset else 2 * self.n - 1
        return Grid(FULL_LINE, -(n - 1) * self.dx / 2, self.dx, n)

    def to_json(self) -> dict:
        return {"kind": self.kind, "x_min": self.x_min, "dx": self.dx, "n": self.n}


@dataclass(frozen=True, eq=False)
class Profile:
    """Samples of a real or complex function on a grid."""

    grid: Grid
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        vals = np.asarray(self.values)
        if vals.dtype.kind not in "fc":
            vals = vals.astype(float)
        if vals.shape != (self.grid.n,):
            raise InvalidInputError(
                f"profile has {vals.shape} samples, grid has {self.grid.n} points"
            )
        if not np.all(np.isfinite(vals)):
            raise InvalidInputError("profile contains NaN or Inf samples")
        vals = vals.copy()
        vals.flags.writeable = False
        object.__setattr__(self, "values", vals)

    def mirrored(self) -> "Profile":
        """Even extension of a half-line profile to the full line."""
        if self.grid.kind == FULL_LINE:
            return self
        v = self.values
        tail = v if self.grid.offset else v[1:]
        return Profile(self.grid.mirrored(), np.concatenate([tail[::-1], v]))

    def max_norm(self) -> float:
        return float(np.max(np.abs(self.values)))


def require_same_grid(a: Grid, b: Grid) -> None:
    if a != b:
        raise GridMismatchError(f"grid mismatch: {a} vs {b}")


# ---------------------------------------------------------------------------
# Quadrature and inner products
# ---------------------------------------------------------------------------


def integrate(values: np.ndarray, grid: Grid, full_line: bool = True) -> float:
    """Trapezoid integral of sampled values.

    For a half-line grid and ``full_line=True`` the integrand is taken to be
    even and the half-line value is doubled.
    """
    total = float(np.dot(grid.weights, values))
    if full_line and grid.kind == HALF_LINE:
        total *= 2.0
    return total


def quadrature(f: Profile, full_line: bool = False) -> float:
    """Composite trapezoid value of a profile.

    By default the integral runs over the grid's own domain; pass
    ``full_line=True`` to get the integral over the real line of the even
    extension of a half-line profile.
    """
    if np.iscomplexobj(f.values):
        re = integrate(f.values.real, f.grid, full_line)
        im = integrate(f.values.imag, f.grid, full_line)
        if im != 0.0:
            return complex(re, im)
        return re
    return integrate(f.values, f.grid, full_line)


def inner(u: np.ndarray, v: np.ndarray, grid: Grid) -> float:
    """Real L2 pairing ``Re int u conj(v)`` over the real line."""
    return integrate(np.real(u * np.conj(v)), grid)


def l2_norm_sq(u: np.ndarray, grid: Grid) -> float:
    return integrate(np.abs(u) ** 2, grid)


def lp_norm_pow(u: np.ndarray, grid: Grid, q: float) -> float:
    """``int |u|^q dx`` over the real line."""
    return integrate(np.abs(u) ** q, grid)


# ---------------------------------------------------------------------------
# Tridiagonal building blocks
# ---------------------------------------------------------------------------


class Bands(NamedTuple):
    """Tridiagonal matrix stored by diagonals (lower and upper have n-1 entries)."""

    lower: np.ndarray
    diag: np.ndarray
    upper: np.ndarray

    def matvec(self, x: np.ndarray) -> np.ndarray:
        y = self.diag * x
        y[:-1] += self.upper * x[1:]
        y[1:] += self.lower * x[:-1]
        return y

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        n = self.diag.size
        ab = np.zeros((3, n), dtype=np.result_type(self.diag, rhs))
        ab[0, 1:] = self.upper
        ab[1] = self.diag
        ab[2, :-1] = self.lower
        return solve_banded((1, 1), ab, rhs, check_finite=False)

    def scaled(self, a: float) -> "Bands":
        return Bands(a * self.lower, a * self.diag, a * self.upper)

    def plus_diag(self, d: np.ndarray) -> "Bands":
        return Bands(self.lower, self.diag + d, self.upper)

    def times_diag(self, d: np.ndarray) -> "Bands":
        """Return ``self @ diag(d)``."""
        return Bands(self.lower * d[:-1], self.diag * d, self.upper * d[1:])

    def __add__(self, other: "Bands") -> "Bands":
        return Bands(self.lower + other.lower, self.diag + other.diag, self.upper + other.upper)


def _stencil(grid: Grid, centre: float, side: float, parity: str) -> Bands:
    """Three-point stencil ``side*u[i-1] + centre*u[i] + side*u[i+1]``.

    Ghost values: zero past the far end; mirror (even) or antimirror (odd)
    at the origin of half-line grids; zero at both ends of full-line grids.
    Odd parity on a grid with a node at 0 pins ``u[0] = 0`` (identity row).
    """
    n = grid.n
    lower = np.full(n - 1, side)
    upper = np.full(n - 1, side)
    diag = np.full(n, centre)
    if grid.kind == HALF_LINE:
        if parity == "even":
            if grid.offset:
                diag[0] += side
            else:
                upper[0] = 2 * side
        elif parity == "odd":
            if grid.offset:
                diag[0] -= side
            else:
                diag[0], upper[0], lower[0] = 1.0, 0.0, 0.0
        else:
            raise InvalidInputError(f"unknown parity {parity!r}")
    return Bands(lower, diag, upper)


def second_difference(grid: Grid, parity: str = "even") -> Bands:
    """Centered three-point second difference ``D2``."""
    h2 = grid.dx**2
    return _stencil(grid, -2.0 / h2, 1.0 / h2, parity)


def compact_mass(grid: Grid, parity: str = "even") -> Bands:
    """Numerov averaging operator ``B = tridiag(1, 10, 1) / 12``."""
    return _stencil(grid, 10.0 / 12.0, 1.0 / 12.0, parity)


def kinetic_apply(u: np.ndarray, grid: Grid, stencil: str = "compact") -> np.ndarray:
    """Apply ``-d^2/dx^2`` to even samples (Dirichlet at the box edge)."""
    d2 = second_difference(grid)
    if stencil == "compact":
        return -compact_mass(grid).solve(d2.matvec(u))
    if stencil == "centered":
        return -d2.matvec(u)
    raise InvalidInputError(f"unknown stencil {stencil!r}")


def centered_derivative(u: np.ndarray, grid: Grid, parity: str = "even") -> np.ndarray:
    """First derivative by centered differences with the grid's ghost values."""
    padded = np.concatenate([[0.0], u, [0.0]]).astype(u.dtype)
    if grid.kind == HALF_LINE:
        sign = 1.0 if parity == "even" else -1.0
        padded[0] = sign * (u[0] if grid.offset else u[1])
    return (padded[2:] - padded[:-2]) / (2 * grid.dx)


def fourth_order_derivative(u: np.ndarray, grid: Grid, parity: str = "even") -> np.ndarray:
    """Five-point first derivative (used by diagnostics that need ``u'``)."""
    m = 2
    padded = np.zeros(u.size + 2 * m, dtype=u.dtype)
    padded[m:-m] = u
    if grid.kind == HALF_LINE:
        sign = 1.0 if parity == "even" else -1.0
        if grid.offset:
            padded[1], padded[0] = sign * u[0], sign * u[1]
        else:
            padded[1], padded[0] = sign * u[1], sign * u[2]
    return (
        -padded[4:] + 8 * padded[3:-1] - 8 * padded[1:-3] + padded[:-4]
    ) / (12 * grid.dx)


def dirichlet_form(u: np.ndarray, grid: Grid, stencil: str = "compact") -> float:
    """``int |u_x|^2 dx`` over the real line for complex or real samples."""
    if stencil == "centered":
        return integrate(np.abs(centered_derivative(u, grid)) ** 2, grid)
    if np.iscomplexobj(u):
        return dirichlet_form(u.real, grid, stencil) + dirichlet_form(u.imag, grid, stencil)
    return integrate(u * kinetic_apply(u, grid, stencil), grid)


# ---------------------------------------------------------------------------
# Potentials
# ---------------------------------------------------------------------------


class Potential:
    """Even potential ``V(|x|)`` with its radial derivative and virial term."""

    kind = "abstract"
    singular = False
    confining = False

    def value(self, r):
        raise NotImplementedError

    def derivative(self, r):
        raise NotImplementedError

    def scalar(self):
        """A plain-float ``r -> V(r)`` for tight integration loops."""
        return lambda r: float(self.value(r))

    def integral(self, r):
        """``int_0^r V(t) dt`` (finite for every catalog entry)."""
        raise NotImplementedError

    def double_integral(self, r):
        """``int_0^r (r - t) V(t) dt`` (Simpson on the antiderivative)."""
        r = np.asarray(r, dtype=float)
        return r / 6.0 * (4.0 * self.integral(r / 2.0) + self.integral(r))

    def virial(self, r):
        """``2V + r V'``."""
        r = np.asarray(r, dtype=float)
        return 2.0 * self.value(r) + r * self.derivative(r)

    def hat_average(self, x, dx: float):
        """Hat-weighted mean of ``V`` over ``[x - dx, x + dx]``.

        Exact through the even second antiderivative, so it stays finite and
        accurate next to an integrable singularity at the origin.
        """
        x = np.asarray(x, dtype=float)
        w = self.double_integral
        return (w(np.abs(x + dx)) - 2.0 * w(np.abs(x)) + w(np.abs(x - dx))) / dx**2

    def virial_on(self, grid: Grid) -> np.ndarray:
        """Grid samples of ``2V + rV'`` for quadrature.

        The second antiderivative of ``2V + rV'`` is ``r * int_0^r V``, so
        singular potentials get exact hat-weighted cell means as in ``on``.
        """
        x = grid.nodes
        if not self.singular:
            return self.virial(np.abs(x))
        dx = grid.dx

        def w(r):
            return r * self.integral(r)

        return (w(np.abs(x + dx)) - 2.0 * w(np.abs(x)) + w(np.abs(x - dx))) / dx**2

    def on(self, grid: Grid, scheme: str = "compact") -> np.ndarray:
        """Grid samples of ``V`` for the given discretization.

        Smooth potentials are sampled pointwise. Singular ones are replaced
        by effective values whose stencil average reproduces the exact
        hat-weighted cell mean: the mean itself for the three-point scheme,
        and ``B^-1`` of it (with exact ghost values) for the compact scheme.
        Point sampling would integrate the singular cell with an error of
        order ``sqrt(dx)``.
        """
        x = grid.nodes
        point = self.value(np.abs(x))
        if not self.singular:
            return point
        hat = self.hat_average(x, grid.dx)
        if scheme == "centered":
            return hat
        if scheme != "compact":
            raise InvalidInputError(f"unknown scheme {scheme!r}")
        left = self.value(np.abs(x[0] - grid.dx))
        right = self.value(np.abs(x[-1] + grid.dx))
        avg = 10.0 * point
        avg[1:] += point[:-1]
        avg[:-1] += point[1:]
        avg[0] += left
        avg[-1] += right
        avg /= 12.0
        return point + compact_mass(grid).solve(hat - avg)

    def is_zero(self) -> bool:
        return False

    @property
    def spec(self) -> str:
        raise NotImplementedError

    def to_json(self) -> dict:
        return {"spec": self.spec}

    def __repr__(self):
        return f"Potential({self.spec})"

    def __eq__(self, other):
        return isinstance(other, Potential) and self.spec == other.spec

    def __hash__(self):
        return hash(self.spec)


class Zero(Potential):
    kind = "zero"

    def value(self, r):
        return np.zeros_like(np.asarray(r, dtype=float))

    derivative = value

    def scalar(self):
        return lambda r: 0.0

    def integral(self, r):
        return np.zeros_like(np.asarray(r, dtype=float))

    def is_zero(self) -> bool:
        return True

    @property
    def spec(self) -> str:
        return "zero"


class Harmonic(Potential):
    """``V = a r^2``."""

    kind = "harmonic"
    confining = True

    def __init__(self, a: float = 1.0):
        if not a > 0:
            raise InvalidInputError("harmonic curvature a must be positive")
        self.a = float(a)

    def value(self, r):
        r = np.asarray(r, dtype=float)
        return self.a * r * r

    def derivative(self, r):
        return 2.0 * self.a * np.asarray(r, dtype=float)

    def scalar(self):
        a = self.a
        return lambda r: a * r * r

    def integral(self, r):
        return self.a * np.asarray(r, dtype=float) ** 3 / 3.0

    def double_integral(self, r):
        return self.a * np.asarray(r, dtype=float) ** 4 / 12.0

    @property
    def spec(self) -> str:
        return f"harmonic:{self.a:g}"


class InversePower(Potential):
    """Attractive ``V = -c r^(-theta)`` with ``0 < theta < 1``."""

    kind = "inverse"
    singular = True

    def __init__(self, c: float = 1.0, theta: float = 0.5):
        if not c > 0:
            raise InvalidInputError("inverse-power strength c must be positive")
        if not 0 < theta < 1:
            raise InvalidInputError("inverse-power exponent theta must lie in (0, 1)")
        self.c = float(c)
        self.theta = float(theta)

    def value(self, r):
        r = np.asarray(r, dtype=float)
        with np.errstate(divide="ignore"):
            return -self.c * r ** (-self.theta)

    def derivative(self, r):
        r = np.asarray(r, dtype=float)
        with np.errstate(divide="ignore"):
            return self.c * self.theta * r ** (-self.theta - 1.0)

    def scalar(self):
        c, th = self.c, self.theta
        return lambda r: -c * r ** -th

    def integral(self, r):
        r = np.asarray(r, dtype=float)
        return -self.c * r ** (1.0 - self.theta) / (1.0 - self.theta)

    def double_integral(self, r):
        """``int_0^r (r - t) V(t) dt``, the series start near the singularity."""
        r = np.asarray(r, dtype=float)
        th = self.theta
        return -self.c * r ** (2.0 - th) / ((1.0 - th) * (2.0 - th))

    @property
    def spec(self) -> str:
        return f"inverse:{self.c:g}:{self.theta:g}"


class BoundedStep(Potential):
    """Smooth bounded step ``V = height * tanh(r / width)^2`` rising from 0."""

    kind = "step"

    def __init__(self, height: float = 1.0, width: float = 1.0):
        if not (height > 0 and width > 0):
            raise InvalidInputError("step height and width must be positive")
        self.height = float(height)
        self.width = float(width)

    def value(self, r):
        t = np.tanh(np.asarray(r, dtype=float) / self.width)
        return self.height * t * t

    def derivative(self, r):
        s = np.asarray(r, dtype=float) / self.width
        t = np.tanh(s)
        return 2.0 * self.height / self.width * t * (1.0 - t * t)

    def scalar(self):
        h, w = self.height, self.width
        tanh = math.tanh
        return lambda r: h * tanh(r / w) ** 2

    def integral(self, r):
        r = np.asarray(r, dtype=float)
        return self.height * (r - self.width * np.tanh(r / self.width))

    @property
    def spec(self) -> str:
        return f"step:{self.height:g}:{self.width:g}"


class Sum(Potential):
    kind = "sum"

    def __init__(self, terms: Sequence[Potential]):
        if not terms:
            raise InvalidInputError("a sum potential needs at least one term")
        self.terms = tuple(terms)
        self.singular = any(t.singular for t in self.terms)
        self.confining = any(t.confining for t in self.terms)

    def value(self, r):
        return sum(t.value(r) for t in self.terms)

    def derivative(self, r):
        return sum(t.derivative(r) for t in self.terms)

    def scalar(self):
        fns = [t.scalar() for t in self.terms]
        return lambda r: sum(f(r) for f in fns)

    def integral(self, r):
        return sum(t.integral(r) for t in self.terms)

    def double_integral(self, r):
        return sum(t.double_integral(r) for t in self.terms)

    def is_zero(self) -> bool:
        return all(t.is_zero() for t in self.terms)

    @property
    def spec(self) -> str:
        return "+".join(t.spec for t in self.terms)


_KINDS = {
    "zero": (Zero, 0),
    "harmonic": (Harmonic, 1),
    "inverse": (InversePower, 2),
    "step": (BoundedStep, 2),
}


def parse_potential(text: str) -> Potential:
    """Parse ``kind:param:...`` strings, joined by ``+`` for sums.

    >>> parse_potential("harmonic:1").spec
    'harmonic:1'
    >>> parse_potential("harmonic:1+inverse:1:0.5").spec
    'harmonic:1+inverse:1:0.5'
    """
    parts = [p.strip() for p in text.split("+") if p.strip()]
    if not parts:
        raise InvalidInputError("empty potential specification")
    terms = []
    for part in parts:
        kind, *params = part.split(":")
        kind = kind.strip().lower()
        if kind not in _KINDS:
            raise InvalidInputError(f"unknown potential kind {kind!r}")
        cls, max_params = _KINDS[kind]
        if len(params) > max_params:
            raise InvalidInputError(f"too many parameters for {kind!r}")
        try:
            values = [float(p) for p in params]
        except ValueError as exc:
            raise InvalidInputError(f"bad parameter in {part!r}") from exc
        terms.append(cls(*values))
    return terms[0] if len(terms) == 1 else Sum(terms)


def grid_for(V: Potential, dx: float, half_width: float) -> Grid:
    """Half-line grid, offset by ``dx/2`` when ``V`` is singular at 0."""
    return Grid.half_line(half_width, dx, offset=V.singular)


def default_half_width(V: Potential, omega: float, omega1: float) -> float:
    """Box half-width that holds the ground-state tail below 1e-12.

    The WKB decay exponent ``int_0^L sqrt(max(V + omega, omega - omega1))``
    must reach ``ln 1e12``; the result is clamped to [20, 200] and, for
    strongly confining potentials, capped before the tail underflows.
    """
    r = np.linspace(0.0, 200.0, 20001)[1:]
    rate = np.sqrt(np.maximum(V.value(r) + omega, omega - omega1))
    exponent = np.concatenate([[0.0], np.cumsum(0.5 * (rate[1:] + rate[:-1]) * np.diff(r))])
    r = r[: exponent.size]

    def reach(level):
        idx = np.searchsorted(exponent, level)
        return float(r[min(idx, r.size - 1)])

    width = min(max(reach(_TAIL_DECADES), 20.0), 200.0)
    return min(width, max(reach(_UNDERFLOW_GUARD), reach(_TAIL_DECADES)))


# ---------------------------------------------------------------------------
# Norms of the energy space
# ---------------------------------------------------------------------------


def x_norm_sq(
    u: Profile, V: Potential, omega: float, stencil: str = "compact"
) -> float:
    """``int (|u_x|^2 + V|u|^2 + omega |u|^2) dx`` over the real line.

    ``stencil="centered"`` uses centered first differences (second order);
    the default compact form is consistent with the ground-state
    discretization to fourth order.
    """
    vals = u.values
    pot = V.on(u.grid)
    return dirichlet_form(vals, u.grid, stencil) + integrate(
        (pot + omega) * np.abs(vals) ** 2, u.grid
    )


def h1_norm_sq(u: Profile, stencil: str = "compact") -> float:
    return dirichlet_form(u.values, u.grid, stencil) + l2_norm_sq(u.values, u.grid)


# ---------------------------------------------------------------------------
# Admissibility of potentials
# ---------------------------------------------------------------------------


@dataclass
class CheckReport:
    name: str
    passed: bool
    reason: str = ""
    index: int | None = None
    details: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "passed": bool(self.passed),
            "reason": self.reason,
            "index": self.index,
            "details": self.details,
        }


def _first_decrease(values: np.ndarray) -> int | None:
    tol = 1e-12 * (1.0 + np.abs(values[:-1]))
    bad = np.nonzero(values[1:] < values[:-1] - tol)[0]
    return int(bad[0]) if bad.size else None


def check_v1(V: Potential, grid: Grid) -> CheckReport:
    """Even, non-decreasing in ``r`` and ``V'`` not identically zero."""
    if grid.kind != HALF_LINE:
        raise InvalidInputError("check_v1 samples a half-line grid")
    r = grid.nodes[grid.nodes > 0]
    v = V.value(r)
    dv = V.derivative(r)
    idx = _first_decrease(v)
    if idx is not None:
        return CheckReport("V1", False, "V decreases in r", idx, {"r": float(r[idx])})
    neg = np.nonzero(dv < -1e-12 * (1.0 + np.abs(v)))[0]
    if neg.size:
        return CheckReport("V1", False, "V' < 0", int(neg[0]), {"r": float(r[neg[0]])})
    if not np.any(dv > 1e-12 * (1.0 + np.abs(v))):
        return CheckReport("V1", False, "V′ ≡ 0")
    return CheckReport("V1", True)


def check_v2(V: Potential, grid: Grid, p: float) -> CheckReport:
    """``2V + rV'`` non-decreasing in ``r``; non-constant when ``p = 5``."""
    if grid.kind != HALF_LINE:
        raise InvalidInputError("check_v2 samples a half-line grid")
    r = grid.nodes[grid.nodes > 0]
    w = V.virial(r)
    idx = _first_decrease(w)
    if idx is not None:
        return CheckReport("V2", False, "2V + rV' decreases in r", idx, {"r": float(r[idx])})
    if p == 5:
        spread = float(np.max(w) - np.min(w))
        if spread <= 1e-12 * (1.0 + float(np.max(np.abs(w)))):
            return CheckReport("V2", False, "2V + rV' is constant at the critical exponent p = 5")
    return CheckReport("V2", True)
