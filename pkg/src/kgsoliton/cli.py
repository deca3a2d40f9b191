"""Command line driver: TOML experiment files in, CSV/JSON/snapshots out.

Usage::

    kgsoliton --config run.toml --out results/ [--seed N] [--threads N]
    kgsoliton --preset simulate_soliton --out results/

Exit codes: 0 success, 1 invalid input, 2 numerical failure.
"""
from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import platform
import sys
import time
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np
import scipy
import tomli_w

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

from . import __version__
from .charge import KINDS, ChargeProfile, wiener_check
from .evolve import (BlowUpError, PerturbationSpec, RunConfig, WraparoundError, compact_random_fields,
                     local_decay_probe, run, smooth_bump)
from .fields import FieldPair, FullState, Grid, set_threads, write_snapshot
from .kspace import QuadratureError
from .linop import frozen_evolve
from .model import Model
from .scatter import Decomposer, fit_decay, scattering_record
from .soliton import SolitonParams, soliton_residual, soliton_state, tangent_spectral
from .spectral import (f_inequality_check, f_inequality_samples, invertibility_scan, puiseux_fit,
                       tail_check)
from .symplectic import ProjectionError, complement_projector, gram_matrix, omega_matrix

__all__ = ["COMMANDS", "ConfigError", "ExperimentSpec", "parse_config", "dump_config",
           "run_experiment", "main"]

COMMANDS = ("simulate", "soliton", "spectral", "wiener-check", "frozen", "scatter", "decay-probe")

EXIT_OK, EXIT_INVALID, EXIT_NUMERICAL = 0, 1, 2


class ConfigError(ValueError):
    """Invalid experiment description; the message names the offending field."""


# ---------------------------------------------------------------- spec

@dataclass
class GridSpec:
    N: int = 64
    L: float = 16.0


@dataclass
class ProfileSpec:
    kind: str = "wendland"
    amplitude: float = 1.0
    radius: float = 3.0
    r: list = field(default_factory=list)
    rho: list = field(default_factory=list)


@dataclass
class SolitonSpec:
    b: list = field(default_factory=lambda: [0.0, 0.0, 0.0])
    v: list = field(default_factory=lambda: [0.0, 0.0, 0.0])


@dataclass
class RunSpec:
    """``dt = 0`` selects ``h / 4``."""

    dt: float = 0.0
    T: float = 5.0
    order: int = 4
    sample_every: int = 1
    snapshots: list = field(default_factory=list)
    check_wraparound: bool = True


@dataclass
class PerturbSpec:
    kind: str = "none"
    relative_size: float = 0.0
    radius: float = 4.0
    k_cut: float = 1.0
    dq: list = field(default_factory=lambda: [0.0, 0.0, 0.0])
    dp: list = field(default_factory=lambda: [0.0, 0.0, 0.0])


@dataclass
class SpectralSpec:
    """Frequency samples: ``n_below`` in ``(0, mu)`` and ``n_above`` in ``(mu, omega_max)``.

    ``puiseux`` adds threshold fits at ``+-mu`` (about half a minute).
    """

    speed: float = 0.5
    n_below: int = 20
    n_above: int = 20
    omega_max: float = 6.0
    tail_max: float = 40.0
    inequality_samples: int = 10000
    puiseux: bool = True


@dataclass
class FrozenSpec:
    secular: bool = False


@dataclass
class DecaySpec:
    speeds: list = field(default_factory=lambda: [0.0, 0.5])
    radius: float = 3.0
    n_times: int = 25
    t_max: float = 0.0


@dataclass
class ExperimentSpec:
    """Validated experiment description (see ``parse_config``)."""

    command: str
    seed: int = 0
    m: float = 1.0
    beta: float = 2.0
    grid: GridSpec = field(default_factory=GridSpec)
    profile: ProfileSpec = field(default_factory=ProfileSpec)
    soliton: SolitonSpec = field(default_factory=SolitonSpec)
    run: RunSpec = field(default_factory=RunSpec)
    perturbation: PerturbSpec = field(default_factory=PerturbSpec)
    spectral: SpectralSpec = field(default_factory=SpectralSpec)
    frozen: FrozenSpec = field(default_factory=FrozenSpec)
    decay: DecaySpec = field(default_factory=DecaySpec)

    def to_dict(self):
        return dataclasses.asdict(self)

    # -- derived objects
    def charge_profile(self) -> ChargeProfile:
        p = self.profile
        samples = (tuple(p.r), tuple(p.rho)) if p.kind == "tabulated" else None
        return ChargeProfile(p.kind, p.amplitude, p.radius, samples)

    def model(self) -> Model:
        return Model(Grid(self.grid.N, self.grid.L), self.charge_profile(), self.m)

    def sigma0(self) -> SolitonParams:
        return SolitonParams(np.array(self.soliton.b, float), np.array(self.soliton.v, float))

    def perturbation_spec(self) -> PerturbationSpec:
        p = self.perturbation
        return PerturbationSpec(p.kind, p.relative_size, p.radius, p.k_cut, self.seed,
                                tuple(p.dq), tuple(p.dp))

    def run_config(self, model: Model, snapshots=None) -> RunConfig:
        r = self.run
        dt = r.dt if r.dt > 0 else model.grid.h / 4
        snaps = tuple(r.snapshots) if snapshots is None else tuple(snapshots)
        return RunConfig(model=model, dt=dt, T=r.T, sigma0=self.sigma0(),
                         perturbation=self.perturbation_spec(), sample_every=r.sample_every,
                         beta=self.beta, order=r.order, snapshot_times=snaps,
                         check_wraparound=r.check_wraparound)


_SECTIONS = {"grid": GridSpec, "profile": ProfileSpec, "soliton": SolitonSpec, "run": RunSpec,
             "perturbation": PerturbSpec, "spectral": SpectralSpec, "frozen": FrozenSpec,
             "decay": DecaySpec}


def _coerce(name, value, default):
    """Coerce ``value`` to the type of ``default``; raise ``ConfigError`` naming ``name``."""
    try:
        if isinstance(default, bool):
            if not isinstance(value, bool):
                raise TypeError
            return value
        if isinstance(default, int):
            if isinstance(value, bool) or int(value) != value:
                raise TypeError
            return int(value)
        if isinstance(default, float):
            if isinstance(value, bool):
                raise TypeError
            return float(value)
        if isinstance(default, str):
            if not isinstance(value, str):
                raise TypeError
            return value
        if isinstance(default, list):
            return [float(x) for x in value]
    except (TypeError, ValueError):
        pass
    raise ConfigError(f"invalid value for {name}: {value!r}")


def _build(cls, table, prefix):
    if not isinstance(table, dict):
        raise ConfigError(f"{prefix} must be a table")
    defaults = cls()
    known = {f.name for f in dataclasses.fields(cls)}
    for key in table:
        if key not in known:
            raise ConfigError(f"unknown field {prefix}.{key}")
    kwargs = {k: _coerce(f"{prefix}.{k}", v, getattr(defaults, k)) for k, v in table.items()}
    return cls(**kwargs)


def spec_from_dict(data: dict) -> ExperimentSpec:
    """Build and validate an ``ExperimentSpec`` from a parsed table."""
    if "command" not in data:
        raise ConfigError("missing field command")
    command = data["command"]
    if command not in COMMANDS:
        raise ConfigError(f"invalid value for command: {command!r} (expected one of {', '.join(COMMANDS)})")
    top = {"seed": 0, "m": 1.0, "beta": 2.0}
    kwargs = {"command": command}
    for key, value in data.items():
        if key == "command":
            continue
        if key in top:
            kwargs[key] = _coerce(key, value, top[key])
        elif key in _SECTIONS:
            kwargs[key] = _build(_SECTIONS[key], value, key)
        else:
            raise ConfigError(f"unknown field {key}")
    spec = ExperimentSpec(**kwargs)
    validate(spec)
    return spec


def validate(spec: ExperimentSpec):
    """Check module preconditions; raises ``ConfigError``."""
    if not spec.m > 0:
        raise ConfigError("invalid value for m: mass must be positive")
    if spec.seed < 0:
        raise ConfigError("invalid value for seed: must be non-negative")
    g = spec.grid
    if g.N < 8 or g.N % 2:
        raise ConfigError("invalid value for grid.N: need an even number >= 8")
    if not g.L > 0:
        raise ConfigError("invalid value for grid.L: must be positive")
    if spec.profile.kind not in KINDS:
        raise ConfigError(f"invalid value for profile.kind: {spec.profile.kind!r}")
    try:
        spec.charge_profile()
    except ValueError as exc:
        raise ConfigError(f"invalid value for profile: {exc}") from None
    if spec.profile.radius >= g.L:
        raise ConfigError("invalid value for profile.radius: support clipped by the box")
    for name in ("b", "v"):
        vec = getattr(spec.soliton, name)
        if len(vec) != 3:
            raise ConfigError(f"invalid value for soliton.{name}: need 3 components")
    if np.linalg.norm(spec.soliton.v) >= 1.0:
        raise ConfigError("invalid value for soliton.v: superluminal velocity |v| >= 1")
    r = spec.run
    if r.order not in (2, 4):
        raise ConfigError("invalid value for run.order: must be 2 or 4")
    if not r.T > 0:
        raise ConfigError("invalid value for run.T: must be positive")
    if r.dt < 0 or r.dt > g.L / g.N / np.pi:
        raise ConfigError("invalid value for run.dt: need 0 < dt <= h/pi (0 selects h/4)")
    if r.sample_every < 1:
        raise ConfigError("invalid value for run.sample_every: must be >= 1")
    p = spec.perturbation
    if p.kind not in ("none", "compact_random"):
        raise ConfigError(f"invalid value for perturbation.kind: {p.kind!r}")
    if len(p.dq) != 3 or len(p.dp) != 3:
        raise ConfigError("invalid value for perturbation.dq/dp: need 3 components")
    if not 0 <= spec.spectral.speed < 1:
        raise ConfigError("invalid value for spectral.speed: superluminal or negative")
    if any(not 0 <= s < 1 for s in spec.decay.speeds):
        raise ConfigError("invalid value for decay.speeds: superluminal or negative")


def parse_config(path) -> ExperimentSpec:
    """Read a TOML experiment file; defaults ``m = 1``, ``beta = 2``, ``N = 64``, ``L = 16``."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    return parse_config_text(text)


def parse_config_text(text: str) -> ExperimentSpec:
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"parse error: {exc}") from None
    return spec_from_dict(data)


def dump_config(spec: ExperimentSpec) -> str:
    """TOML text that ``parse_config_text`` maps back to ``spec``."""
    return tomli_w.dumps(spec.to_dict())


def load_preset(name: str) -> ExperimentSpec:
    ref = resources.files("kgsoliton") / "presets" / f"{name}.toml"
    if not ref.is_file():
        raise ConfigError(f"unknown preset {name!r}")
    return parse_config_text(ref.read_text())


def list_presets():
    folder = resources.files("kgsoliton") / "presets"
    return sorted(p.name[:-5] for p in folder.iterdir() if p.name.endswith(".toml"))


# ---------------------------------------------------------------- outputs

class _Outputs:
    def __init__(self, out: Path):
        self.out = out
        self.files = []
        out.mkdir(parents=True, exist_ok=True)

    def path(self, name):
        self.files.append(name)
        return self.out / name

    def json(self, name, obj):
        with open(self.path(name), "w") as fh:
            json.dump(_jsonable(obj), fh, indent=2, sort_keys=True)
            fh.write("\n")

    def csv(self, name, header, rows):
        with open(self.path(name), "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(header)
            for row in rows:
                w.writerow([repr(float(x)) for x in row])


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return x if np.isfinite(x) else repr(x)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    return obj


# ---------------------------------------------------------------- commands

def _cmd_wiener(spec, out):
    rep = wiener_check(spec.charge_profile())
    out.json("wiener.json", rep.as_dict())
    return {"passed": rep.passed}


def _cmd_soliton(spec, out):
    model = spec.model()
    sigma = spec.sigma0()
    res = soliton_residual(sigma.v, model)
    rho_norm = model.rho_norm
    G = gram_matrix(sigma.v, model)
    W = omega_matrix(sigma.v, model.profile, model.m)
    rel = np.max(np.abs(G - W.full)) / np.max(np.abs(W.full))
    write_snapshot(out.path("soliton.kgs"), soliton_state(sigma, model), 0.0)
    summary = {"relative_residual": res / rho_norm, "gram": G, "omega_closed_form": W.full,
               "gram_mismatch": rel, "omega_plus_spd": W.is_spd}
    out.json("soliton.json", summary)
    return {"relative_residual": res / rho_norm, "gram_mismatch": rel}


def _cmd_simulate(spec, out):
    model = spec.model()
    cfg = spec.run_config(model)
    rec = run(cfg)
    drift = np.abs(rec.H - rec.H[0]) / abs(rec.H[0])
    rec.write_csv(out.path("trajectory.csv"), {"rel_energy_drift": drift})
    for i, (t, Y) in enumerate(sorted(rec.snapshots.items())):
        write_snapshot(out.path(f"snapshot_{i:03d}.kgs"), Y, t)
    summary = {"energy_drift": rec.energy_drift(), "max_speed": float(rec.speed.max()),
               "final_q": rec.q[-1], "final_p": rec.p[-1]}
    out.json("summary.json", summary)
    return {"wraparound_bound": rec.wraparound_limit, **summary}


def _cmd_scatter(spec, out):
    model = spec.model()
    T = spec.run.T
    snaps = spec.run.snapshots or [T / 8, T / 4, T / 2, 3 * T / 4, T]
    cfg = spec.run_config(model, snaps)
    dec = Decomposer(model, spec.beta, remainder=True)
    rec = run(cfg, callback=dec)
    d = dec.result()
    srec = scattering_record(rec, d, dataclasses.asdict(spec.perturbation), model)
    rows = [(t, *s, z, *sd, o, n) for t, s, z, sd, o, n in
            zip(d.times, d.sigma, d.Z_norm, d.sigma_dot, d.orthogonality, d.N_norm)]
    out.csv("decomposition.csv", ["t", "b1", "b2", "b3", "v1", "v2", "v3", "Z_norm",
                                  "bdot1", "bdot2", "bdot3", "vdot1", "vdot2", "vdot3",
                                  "orthogonality", "N_norm"], rows)
    write_snapshot(out.path("psi_plus.kgs"), srec.psi_plus, T)
    out.json("scattering.json", srec.as_dict())
    return {"wraparound_bound": rec.wraparound_limit, "decay_exponent": srec.residuals["decay_exponent"]}


def _cmd_frozen(spec, out):
    model = spec.model()
    v = np.array(spec.soliton.v, float)
    rng = np.random.default_rng(spec.seed)
    p = spec.perturbation
    F = compact_random_fields(model.grid, rng, p.radius, (0.0, 0.0, 0.0), p.k_cut)
    X0 = complement_projector(v, FullState.from_fields(F, np.zeros(3), np.zeros(3)), model)
    X0 = model.to_spectral(X0)
    if spec.frozen.secular:
        X0 = X0 + tangent_spectral(v, model)[3]
    limit = (model.grid.L - p.radius) / (1.0 + np.linalg.norm(v))
    T = spec.run.T
    if spec.run.check_wraparound and T > limit:
        raise WraparoundError(f"wraparound violation: T = {T} exceeds bound {limit:.3g}")
    dt = spec.run.dt if spec.run.dt > 0 else model.grid.h / 4
    ser = frozen_evolve(v, X0, dt, T, model, beta=spec.beta, sample_every=spec.run.sample_every,
                        order=spec.run.order)
    Qn = np.linalg.norm(ser.Q, axis=1)
    out.csv("frozen.csv", ["t", "H", "norm_minus_beta", "Q_norm"],
            zip(ser.times, ser.H, ser.norm_minus_beta, Qn))
    fit = fit_decay(ser.times, ser.norm_minus_beta, (T / 4, T))
    summary = {"H_drift": float(np.max(np.abs(ser.H - ser.H[0])) / abs(ser.H[0])),
               "decay_fit": dataclasses.asdict(fit), "wraparound_bound": limit}
    if spec.frozen.secular:
        summary["Q_growth_fit"] = dataclasses.asdict(fit_decay(ser.times[1:], Qn[1:], (T / 4, T)))
    out.json("frozen.json", summary)
    return {"wraparound_bound": limit}


def _cmd_spectral(spec, out):
    s = spec.spectral
    profile = spec.charge_profile()
    m = spec.m
    mu = m * np.sqrt(1.0 - s.speed**2)
    omegas = np.concatenate([mu * (np.arange(1, s.n_below + 1) / (s.n_below + 1)),
                             np.linspace(mu, s.omega_max, s.n_above + 1)[1:]])
    samples, summary = invertibility_scan(s.speed, profile, m, omegas)
    rows = []
    for w, smp in zip(omegas, samples):
        H = np.diag(smp.H)
        rows.append((w, H[0].real, H[0].imag, H[1].real, H[1].imag, smp.detM.real, smp.detM.imag,
                     smp.F[0].real, smp.F[1].real))
    out.csv("resolvent.csv", ["omega", "ReH11", "ImH11", "ReH22", "ImH22", "ReDetM", "ImDetM",
                              "F_par", "F_perp"], rows)
    tail = tail_check(s.speed, profile, m, np.geomspace(mu + 1.0, s.tail_max, 20))
    rng = np.random.default_rng(spec.seed)
    Mb, r, w = f_inequality_samples(s.inequality_samples, rng, m)
    summary.update({"tail_bound": tail.bound, "tail_exponent": tail.exponent,
                    "inequality_samples": int(s.inequality_samples),
                    "inequality_all_positive": f_inequality_check(Mb, r, w)})
    if s.puiseux:
        for side, name in ((1, "plus"), (-1, "minus")):
            fit = puiseux_fit(s.speed, profile, m, side)
            summary[f"puiseux_{name}"] = {"branch": fit.branch, "R0_error": fit.R0_error,
                                          "residual": fit.residual,
                                          "half_power_norm": fit.half_power_norm}
    out.json("invertibility.json", summary)
    return {}


def _cmd_decay(spec, out):
    model = spec.model()
    grid = model.grid
    d = spec.decay
    F0 = FieldPair(np.zeros(grid.shape), smooth_bump(grid, d.radius), grid=grid)
    fits = {}
    rows = []
    vmax = max(d.speeds)
    limit = (grid.L - d.radius) / (1.0 + vmax)
    t_max = d.t_max if d.t_max > 0 else 0.95 * limit
    times = np.linspace(0.0, t_max, d.n_times)
    series = {}
    for speed in d.speeds:
        v = np.array([speed, 0.0, 0.0])
        series[speed] = local_decay_probe(F0, v, spec.m, spec.beta, times, support=d.radius,
                                          check=spec.run.check_wraparound)
        fits[str(speed)] = dataclasses.asdict(fit_decay(times, series[speed], (t_max / 4, t_max)))
    for i, t in enumerate(times):
        rows.append((t, *(series[s][i] for s in d.speeds)))
    out.csv("decay.csv", ["t", *(f"norm_v{s}" for s in d.speeds)], rows)
    out.json("decay.json", {"fits": fits, "wraparound_bound": limit})
    return {"wraparound_bound": limit}


_DISPATCH = {"wiener-check": _cmd_wiener, "soliton": _cmd_soliton, "simulate": _cmd_simulate,
             "scatter": _cmd_scatter, "frozen": _cmd_frozen, "spectral": _cmd_spectral,
             "decay-probe": _cmd_decay}


def run_experiment(spec: ExperimentSpec, out_dir) -> int:
    """Execute ``spec``, write artifacts and ``manifest.json``; return the exit code."""
    out = _Outputs(Path(out_dir))
    t0 = time.perf_counter()
    status, error, info = EXIT_OK, None, {}
    try:
        info = _DISPATCH[spec.command](spec, out) or {}
    except (ConfigError, WraparoundError) as exc:
        status, error = EXIT_INVALID, str(exc)
    except (BlowUpError, ProjectionError, QuadratureError, FloatingPointError,
            np.linalg.LinAlgError) as exc:
        status, error = EXIT_NUMERICAL, f"{type(exc).__name__}: {exc}"
    except ValueError as exc:
        status, error = EXIT_INVALID, str(exc)
    manifest = {
        "command": spec.command,
        "config": spec.to_dict(),
        "versions": {"kgsoliton": __version__, "python": platform.python_version(),
                     "numpy": np.__version__, "scipy": scipy.__version__},
        "wall_time_s": time.perf_counter() - t0,
        "wraparound_bound": info.get("wraparound_bound"),
        "files": list(out.files),
        "status": status,
        "error": error,
    }
    with open(out.out / "manifest.json", "w") as fh:
        json.dump(_jsonable(manifest), fh, indent=2, sort_keys=True)
        fh.write("\n")
    if error:
        print(f"error: {error}", file=sys.stderr)
    return status


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="kgsoliton", description=__doc__.splitlines()[0])
    src = ap.add_mutually_exclusive_group(required=True)
    src.add_argument("--config", help="TOML experiment file")
    src.add_argument("--preset", help="name of a bundled preset (see --list-presets)")
    src.add_argument("--list-presets", action="store_true")
    ap.add_argument("--out", default="out", help="output directory (default: out)")
    ap.add_argument("--seed", type=int, help="override the seed for random perturbations")
    ap.add_argument("--threads", type=int, default=1, help="FFT worker threads")
    args = ap.parse_args(argv)
    if args.list_presets:
        print("\n".join(list_presets()))
        return EXIT_OK
    try:
        spec = parse_config(args.config) if args.config else load_preset(args.preset)
        if args.seed is not None:
            if args.seed < 0 or args.seed >= 2**64:
                raise ConfigError("invalid value for seed: must be an unsigned 64-bit integer")
            spec.seed = args.seed
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    set_threads(args.threads)
    return run_experiment(spec, args.out)


if __name__ == "__main__":
    sys.exit(main())
