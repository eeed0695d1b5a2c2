"""Command-line front end: ``nlslab {groundstate,spectrum,slope,scan,evolve,verify}``.

Exit codes: 0 ok, 1 invalid configuration, 2 solver failure or failed check,
3 scan with unsolved points, 4 conservation breach during evolution.

Every output file carries the canonical configuration and the tool version;
identical configurations give byte-identical files.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, fields, replace

import numpy as np

from nlslab import __version__
from nlslab.domain import check_v1, check_v2, grid_for, parse_potential
from nlslab.errors import ConservationBreach, InvalidInputError, NlsLabError
from nlslab.ground_state import find_ground_state, pohozaev_check, uniqueness_conditions
from nlslab.spectrum import nondegeneracy_check, omega1 as compute_omega1

EXIT_OK, EXIT_CONFIG, EXIT_SOLVER, EXIT_PARTIAL, EXIT_CONSERVATION = 0, 1, 2, 3, 4
COMMANDS = ("groundstate", "spectrum", "slope", "scan", "evolve", "verify")
IDENTITY_TOL = 1e-4


class ConfigError(InvalidInputError):
    def __init__(self, key: str, message: str):
        super().__init__(f"{key}: {message}")
        self.key = key


# ---------------------------------------------------------------------------
# Configuration
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RunConfig:
    command: str = "groundstate"
    potential: str = "harmonic:1"
    p: float = 3.0
    omega: float | None = None
    omega_range: str | None = None
    dx: float = 5e-3
    half_width: float | None = None
    solver: str = "shooting"
    eps: float = 1e-2
    T: float = 50.0
    dt: float = 1e-3
    seed: str = "0"
    jobs: int = 1
    out: str = "nlslab_out"
    oracle_mode: bool = False

    # keys that do not change results and stay out of the canonical text
    _VOLATILE = ("out", "jobs")

    def to_text(self) -> str:
        """Canonical ``key = value`` text; parsing it back gives an equal config."""
        lines = []
        for f in fields(self):
            if f.name in self._VOLATILE:
                continue
            lines.append(f"{f.name} = {_format_value(getattr(self, f.name))}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "RunConfig":
        return cls().updated(parse_config_text(text))

    def updated(self, values: dict) -> "RunConfig":
        known = {f.name: f for f in fields(self)}
        kwargs = {}
        for key, raw in values.items():
            key = key.replace("-", "_")
            if key not in known:
                raise ConfigError(key, "unknown configuration key")
            kwargs[key] = _coerce(key, raw, getattr(RunConfig(), key))
        return replace(self, **kwargs)

    @property
    def seeds(self) -> list[int]:
        return [int(s) for s in str(self.seed).split(",")]

    def omegas(self, om1: float) -> list[float]:
        """Frequencies of ``--omega-range lo:hi:n``, log-spaced in ``omega - omega1``."""
        lo, hi, n = self.omega_range.split(":")
        lo, hi, n = float(lo), float(hi), int(n)
        if not lo > om1:
            raise ConfigError("omega_range", f"omega below omega1 = {om1:.6g}")
        return [float(w) for w in om1 + np.geomspace(lo - om1, hi - om1, n)]

    def validate(self) -> None:
        """Check every numeric field against the solvers' preconditions."""
        if self.command not in COMMANDS:
            raise ConfigError("command", f"unknown command {self.command!r}")
        try:
            V = parse_potential(self.potential)
        except (InvalidInputError, ValueError) as exc:
            raise ConfigError("potential", str(exc)) from None
        if not (math.isfinite(self.p) and self.p > 1):
            raise ConfigError("p", "p > 1 required")
        if self.command == "scan" and self.p > 5:
            raise ConfigError("p", "slope scans need p <= 5")
        if not self.dx > 0:
            raise ConfigError("dx", "dx must be positive")
        if self.half_width is not None and not self.half_width > 20 * self.dx:
            raise ConfigError("half_width", "half_width must exceed 20 dx")
        if self.solver not in ("shooting", "flow"):
            raise ConfigError("solver", f"unknown solver {self.solver!r}")
        if self.jobs < 1:
            raise ConfigError("jobs", "jobs must be >= 1")
        if V.is_zero() and not self.oracle_mode:
            raise ConfigError("potential", "(V1) violated: V ≡ 0 needs --oracle-mode")
        if self.command == "scan" and not V.is_zero():
            probe = grid_for(V, self.dx, 20.0)
            for check in (check_v1(V, probe), check_v2(V, probe, self.p)):
                if not check.passed:
                    raise ConfigError("potential", f"({check.name}) violated: {check.reason}")
        om1 = compute_omega1(V)
        if self.command == "scan":
            if self.omega_range is not None:
                try:
                    self.omegas(om1)
                except ValueError:
                    raise ConfigError("omega_range", "expected lo:hi:n") from None
        else:
            if self.omega is None:
                raise ConfigError("omega", "omega is required")
            if not self.omega > om1:
                raise ConfigError("omega", f"omega below omega1 = {om1:.6g}")
        if self.command == "evolve":
            if not (self.eps >= 0 and math.isfinite(self.eps)):
                raise ConfigError("eps", "eps must be a non-negative number")
            if not self.T >= 0:
                raise ConfigError("T", "T must be non-negative")
            if not self.dt > 0:
                raise ConfigError("dt", "dt must be positive")
            try:
                self.seeds
            except ValueError:
                raise ConfigError("seed", "seed must be an integer or a comma list") from None


def _format_value(value) -> str:
    if value is None:
        return "none"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _coerce(key: str, raw, default):
    if raw is None or (isinstance(raw, str) and raw.strip().lower() == "none"):
        return None
    if isinstance(default, bool) or key == "oracle_mode":
        if isinstance(raw, bool):
            return raw
        text = str(raw).strip().lower()
        if text in ("true", "1", "yes"):
            return True
        if text in ("false", "0", "no"):
            return False
        raise ConfigError(key, f"expected true/false, got {raw!r}")
    numeric = {"p": float, "omega": float, "dx": float, "half_width": float, "eps": float,
               "T": float, "dt": float, "jobs": int}
    if key in numeric:
        try:
            return numeric[key](raw)
        except (TypeError, ValueError):
            raise ConfigError(key, f"not a number: {raw!r}") from None
    return str(raw).strip()


def parse_config_text(text: str) -> dict:
    """Plain ``key = value`` lines; ``#`` starts a comment."""
    out = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}", "expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        out[key] = value
    return out


# ---------------------------------------------------------------------------
# Output helpers
# ---------------------------------------------------------------------------


def _clean(obj):
    """JSON-safe copy: numpy scalars to Python, non-finite floats to null."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_clean(v) for v in obj.tolist()]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        return float(obj) if math.isfinite(obj) else None
    return obj


def _header(config: RunConfig) -> dict:
    return {"tool": "nlslab", "version": __version__, "config": config.to_text()}


def write_json(path: str, config: RunConfig, payload: dict) -> None:
    doc = dict(_header(config))
    doc.update(payload)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(_clean(doc), fh, indent=2, sort_keys=True, ensure_ascii=False)
        fh.write("\n")


def write_csv(path: str, config: RunConfig, body: str) -> None:
    """CSV with the version and config as leading ``#`` comment lines."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"# nlslab {__version__}\n")
        for line in config.to_text().splitlines():
            fh.write(f"# {line}\n")
        fh.write(body)


def _strip_timing(data: dict) -> dict:
    data = dict(data)
    data.pop("seconds", None)
    return data


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------


def _ground_state(config: RunConfig):
    V = parse_potential(config.potential)
    return find_ground_state(
        V,
        config.omega,
        config.p,
        solver=config.solver,
        dx=config.dx,
        half_width=config.half_width,
        oracle=config.oracle_mode,
    )


def cmd_groundstate(config: RunConfig) -> int:
    phi = _ground_state(config)
    write_csv(os.path.join(config.out, "groundstate.csv"), config, phi.to_csv())
    write_json(os.path.join(config.out, "groundstate.json"), config, {"ground_state": phi.to_json(include_values=False)})
    print(f"ground state: phi0 = {phi.phi0:.12g}, residual = {phi.residual:.3e}")
    return EXIT_OK


def cmd_spectrum(config: RunConfig) -> int:
    phi = _ground_state(config)
    rep = nondegeneracy_check(phi)
    rows = ["index,lplus_even,lminus_even,lplus_odd"]
    lp, lm, lo = rep.eigenvalues, rep.lminus_eigenvalues, rep.lplus_odd_eigenvalues
    for i in range(max(len(lp), len(lm), len(lo))):
        cells = [repr(float(a[i])) if i < len(a) else "" for a in (lp, lm, lo)]
        rows.append(",".join([str(i)] + cells))
    write_csv(os.path.join(config.out, "spectrum.csv"), config, "\n".join(rows) + "\n")
    write_json(os.path.join(config.out, "spectrum.json"), config, {"spectrum": rep.to_json()})
    print(f"Morse index {rep.morse_index}, L+ eigenvalues {np.array2string(rep.eigenvalues[:3], precision=6)}")
    return EXIT_OK if rep.passed else EXIT_SOLVER


def cmd_slope(config: RunConfig) -> int:
    from nlslab.slope import slope_point

    phi = _ground_state(config)
    rep = slope_point(phi.potential, config.omega, config.p, dx=config.dx, phi=phi)
    v = rep.v_profile
    body = "r,v\n" + "".join(f"{float(r)!r},{float(x)!r}\n" for r, x in zip(v.grid.nodes, v.values))
    write_csv(os.path.join(config.out, "slope_v.csv"), config, body)
    write_json(os.path.join(config.out, "slope.json"), config, {"slope": _strip_timing(rep.to_json())})
    print(f"mu' = {rep.mu_prime_solve:.10g} (fd {rep.mu_prime_fd:.10g}), sigma = {rep.sigma:.2e}: {rep.verdict}")
    return EXIT_OK


def cmd_scan(config: RunConfig) -> int:
    from nlslab.slope import STABLE, default_omegas, scan_to_csv, slope_scan

    V = parse_potential(config.potential)
    om1 = compute_omega1(V)
    omegas = config.omegas(om1) if config.omega_range else list(default_omegas(om1))
    reports = slope_scan(
        V, config.p, omegas, jobs=config.jobs, oracle=config.oracle_mode, dx=config.dx,
        half_width=config.half_width, solver=config.solver,
    )
    reports.sort(key=lambda r: r.omega)

    write_csv(os.path.join(config.out, "scan.csv"), config, scan_to_csv(reports))
    write_json(
        os.path.join(config.out, "scan.json"),
        config,
        {"omega1": om1, "points": [_strip_timing(r.to_json()) for r in reports]},
    )
    failed = [r for r in reports if r.error]
    unstable = [r for r in reports if not r.error and r.verdict != STABLE]
    for r in reports:
        print(f"omega = {r.omega:12.6g}  mu' = {r.mu_prime_solve: .6e}  {r.verdict}{'  ' + r.error if r.error else ''}")
    if failed:
        return EXIT_PARTIAL
    gated = not V.is_zero() and config.p <= 5
    if gated and unstable:
        return EXIT_SOLVER
    return EXIT_OK


def _evolve_job(args):
    from nlslab.evolve import stability_experiment

    phi, eps, T, seed, dt = args
    try:
        return seed, stability_experiment(phi, eps, T, seed=seed, dt=dt), None
    except ConservationBreach as exc:
        return seed, exc.partial_trace, str(exc)


def cmd_evolve(config: RunConfig) -> int:
    phi = _ground_state(config)
    tasks = [(phi, config.eps, config.T, s, config.dt) for s in config.seeds]
    if config.jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=config.jobs) as pool:
            results = list(pool.map(_evolve_job, tasks))
    else:
        results = [_evolve_job(t) for t in tasks]
    results.sort(key=lambda r: r[0])
    summaries, breach = [], False
    for seed, trace, err in results:
        write_csv(os.path.join(config.out, f"evolve_seed{seed}.csv"), config, trace.to_csv())
        s = trace.summary()
        s["breach"] = err
        summaries.append(s)
        breach = breach or err is not None
        print(f"seed {seed}: max distance {s['max_distance']:.4e} (5 eps = {5 * config.eps:.3g})" + (f"  {err}" if err else ""))
    write_json(os.path.join(config.out, "evolve.json"), config, {"runs": summaries})
    if breach:
        return EXIT_CONSERVATION
    bound = 5 * config.eps if config.eps > 0 else 1e-6
    return EXIT_OK if all(s["max_distance"] <= bound for s in summaries) else EXIT_SOLVER


def _run_check(bundle: dict, name: str, fn) -> None:
    try:
        passed, data = fn()
        bundle[name] = {"passed": bool(passed), **data}
    except NlsLabError as exc:
        bundle[name] = {"passed": False, "error": f"{type(exc).__name__}: {exc}"}


def cmd_verify(config: RunConfig) -> int:
    from nlslab.slope import normalized_state, v_omega_solve, verify_fm_mmp, verify_key1

    V = parse_potential(config.potential)
    bundle: dict = {}
    phi = None
    try:
        phi = _ground_state(config)
        bundle["ground_state"] = {"passed": True, **phi.to_json(include_values=False)}
    except NlsLabError as exc:
        bundle["ground_state"] = {"passed": False, "error": f"{type(exc).__name__}: {exc}"}

    def uniqueness():
        grid = phi.grid if phi is not None else grid_for(V, config.dx, config.half_width or 20.0)
        rep = uniqueness_conditions(V, config.omega, config.p, grid)
        return rep.passed, rep.to_json()

    _run_check(bundle, "uniqueness", uniqueness)
    if phi is not None:
        def pohozaev():
            rep = pohozaev_check(phi)
            return rep.passed, rep.to_json()

        def nondegeneracy():
            rep = nondegeneracy_check(phi)
            return rep.passed, rep.to_json()

        state = {}

        def slope_parts():
            if not state:
                u, mu = normalized_state(phi)
                v, mu_prime = v_omega_solve(phi)
                state.update(u=u, mu=mu, v=v, mu_prime=mu_prime)
            return state

        def fm_mmp():
            s = slope_parts()
            rep = verify_fm_mmp(phi, s["u"], s["v"], s["mu"], s["mu_prime"])
            ok = abs(rep.residual) < IDENTITY_TOL and rep.abc_defect < IDENTITY_TOL and rep.b_negative
            return ok, rep.to_json()

        def key1():
            s = slope_parts()
            rep = verify_key1(phi, s["u"], s["v"], s["mu_prime"])
            return abs(rep.residual) < IDENTITY_TOL, rep.to_json()

        for name, fn in (("pohozaev", pohozaev), ("nondegeneracy", nondegeneracy),
                         ("fm_mmp", fm_mmp), ("key1", key1)):
            _run_check(bundle, name, fn)
    passed = all(entry["passed"] for entry in bundle.values())
    write_json(os.path.join(config.out, "verify.json"), config, {"checks": bundle, "passed": passed})
    for name, entry in bundle.items():
        print(f"{name:14s} {'pass' if entry['passed'] else 'FAIL'}")
    return EXIT_OK if passed else EXIT_SOLVER


HANDLERS = {
    "groundstate": cmd_groundstate,
    "spectrum": cmd_spectrum,
    "slope": cmd_slope,
    "scan": cmd_scan,
    "evolve": cmd_evolve,
    "verify": cmd_verify,
}


# ---------------------------------------------------------------------------
# Entry point
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="nlslab", description="Ground states and stability of 1D NLS with a potential.")
    parser.add_argument("--version", action="version", version=f"nlslab {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", help="plain-text key = value file; flags override it")
        sp.add_argument("--potential", help="kind:params, e.g. harmonic:1 or inverse:1:0.5")
        sp.add_argument("--p", type=float, help="nonlinearity exponent")
        sp.add_argument("--omega", type=float, help="frequency")
        sp.add_argument("--omega-range", help="lo:hi:n, log-spaced in omega - omega1")
        sp.add_argument("--dx", type=float, help="grid spacing")
        sp.add_argument("--half-width", type=float, help="domain half-width L")
        sp.add_argument("--solver", choices=("shooting", "flow"))
        sp.add_argument("--eps", type=float, help="perturbation size")
        sp.add_argument("--T", type=float, help="evolution horizon")
        sp.add_argument("--dt", type=float, help="time step")
        sp.add_argument("--seed", help="seed or comma-separated seeds")
        sp.add_argument("--jobs", type=int, help="worker processes")
        sp.add_argument("--out", help="output directory")
        sp.add_argument("--oracle-mode", action="store_true", default=None, help="permit V ≡ 0")
    return parser


def config_from_args(args: argparse.Namespace) -> RunConfig:
    values = {}
    if args.config:
        try:
            with open(args.config, encoding="utf-8") as fh:
                values.update(parse_config_text(fh.read()))
        except OSError as exc:
            raise ConfigError("config", str(exc)) from None
    for f in fields(RunConfig):
        if f.name == "command":
            continue
        value = getattr(args, f.name, None)
        if value is not None:
            values[f.name] = value
    values["command"] = args.command
    return RunConfig().updated(values)


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = config_from_args(args)
        config.validate()
    except InvalidInputError as exc:
        print(f"nlslab: invalid configuration: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    os.makedirs(config.out, exist_ok=True)
    try:
        return HANDLERS[config.command](config)
    except InvalidInputError as exc:
        print(f"nlslab: invalid configuration: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ConservationBreach as exc:
        print(f"nlslab: {exc}", file=sys.stderr)
        return EXIT_CONSERVATION
    except NlsLabError as exc:
        print(f"nlslab: solver failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
