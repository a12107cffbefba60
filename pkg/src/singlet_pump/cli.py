"""Command-line entry point: ``singlet-pump <command> [action] [options] --out DIR``.

Angles are given in units of pi everywhere (flags and config files), and
continuous-protocol rates in units of J.  A TOML file passed with
``--config`` may hold keys at top level or under a table named after the
command; flags given on the command line override file values.  Unknown
keys are rejected.

Exit status: 0 on success, 2 for configuration errors, 3 for numerical
failures.  On failure an ``error.json`` record is written to the output
directory (when it can be created) and echoed to stderr.
"""
from __future__ import annotations

import os

# every task is single-threaded; keep BLAS from oversubscribing worker processes
for _var in ("OPENBLAS_NUM_THREADS", "OMP_NUM_THREADS", "MKL_NUM_THREADS"):
    os.environ.setdefault(_var, "1")

import argparse
import hashlib
import json
import logging
import math
import sys
import tempfile
import time
from dataclasses import dataclass, field
from importlib import metadata
from pathlib import Path
from typing import Any, Callable, Sequence

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from . import continuous as cont
from . import errors as err
from . import levels as lv
from . import motion
from . import protocol as proto
from . import sweep
from .integrate import StepSizeUnderflow
from .linalg import DensityMatrix, EigenConvergenceError, NonFiniteError, expm_array
from .liouville import NotCPTPError, spectral_analysis

log = logging.getLogger("singlet_pump")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3
# anything raised while computing, once the configuration is accepted
NUMERIC_ERRORS = (ArithmeticError, StepSizeUnderflow, EigenConvergenceError, NonFiniteError,
                  NotCPTPError, proto.DegenerateSpectrumError, motion.TruncationError,
                  np.linalg.LinAlgError, RuntimeError, ValueError)


class ConfigError(ValueError):
    pass


# ---------------------------------------------------------------------------
# configuration schema

def _angle_open_half(key, v):
    if not 0 < v < 0.5:
        raise ConfigError(f"{key} = {v} is outside (0, 0.5) (units of pi)")


def _angles_open_half(key, values):
    for v in values:
        _angle_open_half(key, v)


def _finite(key, v):
    if not math.isfinite(v):
        raise ConfigError(f"{key} = {v} is not finite")


def _positive(key, v):
    if not v > 0:
        raise ConfigError(f"{key} = {v} must be positive")


def _non_negative(key, v):
    if v < 0:
        raise ConfigError(f"{key} = {v} must be non-negative")


def _probability(key, v):
    if not 0 < v <= 0.01:
        raise ConfigError(f"{key} = {v} must lie in (0, 0.01]")


def _pair(key, v):
    if len(v) != 2 or not all(math.isfinite(x) for x in v):
        raise ConfigError(f"{key} needs two finite angles, got {v}")


def _choice(*options):
    def check(key, v):
        if v not in options:
            raise ConfigError(f"{key} = {v!r} is not one of {options}")
    return check


def _floats(text) -> list[float]:
    if isinstance(text, (list, tuple)):
        return [float(x) for x in text]
    return [float(x) for x in str(text).split(",") if x.strip()]


def _strings(text) -> list[str]:
    if isinstance(text, (list, tuple)):
        return [str(x) for x in text]
    return [x.strip() for x in str(text).split(",") if x.strip()]


@dataclass(frozen=True)
class Key:
    kind: Callable[[Any], Any]
    default: Any
    check: Callable | None = None
    help: str = ""


_PROTOCOL_KEYS = {
    "phi": Key(float, 0.25, _finite, "drive A phase (units of pi)"),
    "gamma": Key(float, 0.25, _angle_open_half, "branching angle (units of pi)"),
    "theta": Key(float, 0.75, _finite, "drive C angle (units of pi)"),
    "alternating": Key(_floats, None, _pair, "odd,even drive C angles (units of pi)"),
}

SCHEMA: dict[str, dict[str, Key]] = {
    "spectral": dict(_PROTOCOL_KEYS),
    "protocol": {
        **_PROTOCOL_KEYS,
        "cycles": Key(int, 50, _non_negative, "number of cycles"),
        "initial": Key(str, "dd", _choice("dd", "singlet", "mixed"), "initial state"),
        "schedule": Key(str, "constant", _choice("constant", "alternating"), "optimizer schedule"),
        "grid": Key(int, 64, _positive, "optimizer grid points per axis"),
    },
    "errors": {
        "phi": Key(float, 0.25, _finite),
        "gamma": Key(float, 0.23, _angle_open_half),
        "alternating": Key(_floats, [1.0, 0.5], _pair),
        "channels": Key(_strings, ["all"], None, "channel list or 'all'"),
        "pmin": Key(float, 1e-4, _probability),
        "pmax": Key(float, 1e-2, _probability),
        "points": Key(int, 5, _positive),
    },
    "motion": {
        "kind": Key(str, "qubit_freq", _choice(*motion.SWEEP_KINDS)),
        "points": Key(int, 9, _positive),
        "cycles": Key(int, 80, _non_negative),
        "fock_dim": Key(int, 12, _positive),
        "mode": Key(str, "reset", _choice(*motion.PROTOCOL_MODES)),
    },
    "continuous": {
        "omega_c": Key(_floats, [0.5, 10.0], None, "range or list (units of J)"),
        "kappa": Key(_floats, [0.5, 10.0], None, "range or list (units of J)"),
        "gamma": Key(_floats, [0.29], _angles_open_half, "list (units of pi)"),
        "points": Key(int, 20, _positive, "points per range axis"),
        "seed": Key(int, 0, None, "multi-start seed (the coarse grid is deterministic)"),
    },
    "sweep": {
        "channel": Key(_strings, ["xI"], None),
        "phi": Key(float, 0.25, _finite),
        "gamma": Key(float, 0.23, _angle_open_half),
        "alternating": Key(_floats, [1.0, 0.5], _pair),
        "pmin": Key(float, 1e-4, _probability),
        "pmax": Key(float, 1e-2, _probability),
        "points": Key(int, 5, _positive),
        "kind": Key(str, "qubit_freq", _choice(*motion.SWEEP_KINDS)),
        "cycles": Key(int, 80, _non_negative),
        "fock_dim": Key(int, 12, _positive),
        "mode": Key(str, "reset", _choice(*motion.PROTOCOL_MODES)),
        "omega_c": Key(_floats, [0.5, 10.0]),
        "kappa": Key(_floats, [0.5, 10.0]),
        "gammas": Key(_floats, [0.29], _angles_open_half),
    },
}
COMMON_KEYS = {
    "workers": Key(int, 1, _positive, "worker processes (SINGLET_PUMP_THREADS overrides)"),
    "checkpoint_interval": Key(float, sweep.CHECKPOINT_INTERVAL, _non_negative,
                               "seconds between checkpoint flushes"),
}
ACTIONS = {
    "spectral": (None,),
    "protocol": ("run", "optimize"),
    "errors": ("slopes",),
    "motion": ("sweep", "closure"),
    "continuous": ("gap-surface", "optimize", "kappa-scan"),
    "sweep": ("errors", "motion", "continuous"),
}


@dataclass
class RunConfig:
    command: str
    action: str | None
    params: dict
    out: Path
    workers: int = 1
    checkpoint_interval: float = sweep.CHECKPOINT_INTERVAL
    sources: dict = field(default_factory=dict)

    def canonical(self) -> dict:
        return {"command": self.command, "action": self.action, "params": self.params}

    def digest(self) -> str:
        blob = json.dumps(self.canonical(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()


def _coerce(key: str, spec: Key, value):
    try:
        v = spec.kind(value)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{key}: cannot read {value!r} ({exc})") from None
    if spec.check is not None:
        spec.check(key, v)
    return v


def read_config_file(path: str | Path, command: str) -> dict:
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file {path} does not exist") from None
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"malformed config file {path}: {exc}") from None
    flat = {k: v for k, v in data.items() if not isinstance(v, dict)}
    for table, values in data.items():
        if isinstance(values, dict):
            if table != command:
                if table in SCHEMA:
                    continue
                raise ConfigError(f"unknown table [{table}] in {path}")
            flat.update(values)
    return flat


def parse_config(command: str, action: str | None, flags: dict, config_path: str | None = None,
                 out: str | Path = ".") -> RunConfig:
    """Merge defaults, file values and flags (highest priority) into a RunConfig."""
    if command not in SCHEMA:
        raise ConfigError(f"unknown command {command!r}")
    if action not in ACTIONS[command]:
        raise ConfigError(f"{command}: unknown action {action!r}; expected one of {ACTIONS[command]}")
    schema = {**SCHEMA[command], **COMMON_KEYS}
    file_vals = read_config_file(config_path, command) if config_path else {}
    for key in list(file_vals) + [k for k, v in flags.items() if v is not None]:
        if key not in schema:
            raise ConfigError(f"unknown key {key!r} for command {command!r}")
    params, sources = {}, {}
    for key, spec in schema.items():
        if flags.get(key) is not None:
            params[key], sources[key] = _coerce(key, spec, flags[key]), "flag"
        elif key in file_vals:
            params[key], sources[key] = _coerce(key, spec, file_vals[key]), "file"
        else:
            params[key] = spec.default
            sources[key] = "default"
            if spec.default is not None and spec.check is not None:
                spec.check(key, spec.default)
    for lo, hi in (("pmin", "pmax"),):
        if lo in params and params[lo] > params[hi]:
            raise ConfigError(f"{lo} = {params[lo]} exceeds {hi} = {params[hi]}")
    workers = params.pop("workers")
    interval = params.pop("checkpoint_interval")
    return RunConfig(command, action, params, Path(out), workers, interval, sources)


# ---------------------------------------------------------------------------
# output helpers

def write_atomic(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _version() -> str:
    try:
        return metadata.version("singlet-pump")
    except metadata.PackageNotFoundError:
        return "unknown"


def write_manifest(cfg: RunConfig, outputs: Sequence[str], wall: float, status: str = "ok") -> None:
    write_atomic(cfg.out / "manifest.json", _json({
        "command": cfg.command, "action": cfg.action, "config": cfg.params,
        "config_hash": cfg.digest(), "version": _version(), "wall_time_s": wall,
        "workers": cfg.workers, "outputs": list(outputs), "status": status,
    }))


def _schedule_params(p: dict) -> proto.ProtocolParams:
    phi, gamma = p["phi"] * math.pi, p["gamma"] * math.pi
    if p.get("alternating"):
        t1, t2 = p["alternating"]
        return proto.ProtocolParams.alternating(phi, gamma, t1 * math.pi, t2 * math.pi)
    return proto.ProtocolParams.constant(phi, gamma, p["theta"] * math.pi)


def _range_or_list(values: list[float], points: int) -> np.ndarray:
    if len(values) == 2 and points > 2:
        return np.linspace(values[0], values[1], points)
    return np.array(values, dtype=float)


# ---------------------------------------------------------------------------
# channels

_PAULI = {"I": "0", "0": "0", "x": "x", "y": "y", "z": "z", "X": "x", "Y": "y", "Z": "z"}
ALL_CHANNELS = ("M_x0", "M_0x", "M_xx", "M_zz", "U_x", "U_z", "spin_motion")


def parse_channel(name: str) -> err.ErrorKind:
    """Channel names: 'xI', 'M_x0', 'Ux' / 'U_x', 'spin_motion', 'stark'."""
    raw = name[2:] if name.startswith("M_") else name
    if len(raw) == 2 and raw[0] in _PAULI and raw[1] in _PAULI and raw not in ("II", "00", "I0", "0I"):
        return err.PauliPair(_PAULI[raw[0]], _PAULI[raw[1]], 0.0)
    norm = name.replace("_", "").lower()
    if norm in ("ux", "uz"):
        return err.CorrelatedRotation(norm[1], 0.0)
    if norm == "spinmotion":
        return err.SpinMotionKraus(0.0)
    if norm == "stark":
        return err.StarkPhase(0.0)
    raise ConfigError(f"channel {name!r} not recognised")


def _channel_list(names: list[str]) -> list[err.ErrorKind]:
    if names == ["all"]:
        names = list(ALL_CHANNELS)
    return [parse_channel(n) for n in names]


# ---------------------------------------------------------------------------
# sweep workers (module level so a process pool can pickle them)

def errors_point(point: dict) -> dict:
    kind = err.at_probability(parse_channel(point["channel"]), point["p"])
    t1, t2 = point["alternating"]
    params = proto.ProtocolParams.alternating(point["phi"] * math.pi, point["gamma"] * math.pi,
                                              t1 * math.pi, t2 * math.pi)
    return {"steady_state_error": err.steady_state_error(err.ErrorChannelSpec(kind), params)}


def motion_point(point: dict) -> dict:
    row = motion.sweep_point(point["kind"], point["value"], n_cycles=point["cycles"],
                             fock_dim=point["fock_dim"], mode=point["mode"])
    return {"gate1_error": row.gate1_error, "gate2_error": row.gate2_error,
            "protocol_error": row.protocol_error}


def gap_point(point: dict) -> dict:
    row = cont.gap_row(point["omega_c"], point["kappa"], point["gamma_over_pi"])
    return {"gap_over_J": row.gap, "empirical_over_J": row.empirical}


def _run_sweep(cfg: RunConfig, name: str, points: list[dict], worker) -> list[sweep.PointResult]:
    cfg.out.mkdir(parents=True, exist_ok=True)
    ckpt = cfg.out / f".{name}.checkpoint.jsonl"
    results = sweep.run_points(points, worker, workers=cfg.workers, checkpoint=ckpt,
                               checkpoint_interval=cfg.checkpoint_interval)
    bad = sweep.failures(results)
    if bad:
        write_atomic(cfg.out / f"{name}_failures.json", _json(bad))
        log.warning("%d of %d points failed; see %s_failures.json", len(bad), len(points), name)
    return results


# ---------------------------------------------------------------------------
# commands

def cmd_spectral(cfg: RunConfig) -> list[str]:
    p = cfg.params
    params = _schedule_params(p)
    res = spectral_analysis(proto.cycle_superop(params))
    if res.degenerate:
        raise proto.DegenerateSpectrumError("top eigenvalue of the cycle map is degenerate")
    period = params.schedule.period
    out = {
        "phi": p["phi"], "gamma": p["gamma"],
        "theta": None if p.get("alternating") else p["theta"], "alternating": p.get("alternating"),
        "gap": res.gap, "n0": period / res.gap, "second_modulus": abs(res.second),
        "steady_state_fidelity": proto.singlet_fidelity(res.steady_state),
        "degenerate": res.degenerate,
        "eigenvalues": [[float(z.real), float(z.imag)] for z in res.eigenvalues[:8]],
    }
    write_atomic(cfg.out / "spectral.json", _json(out))
    return ["spectral.json"]


def _initial_state(name: str) -> DensityMatrix:
    if name == "dd":
        return DensityMatrix.from_ket(lv.ket(lv.DOWN, lv.DOWN), lv.TWO_IONS)
    if name == "singlet":
        return DensityMatrix.from_ket(lv.SINGLET, lv.TWO_IONS)
    return lv.ground_mixture()


def cmd_protocol(cfg: RunConfig) -> list[str]:
    p = cfg.params
    if cfg.action == "run":
        traj = proto.run_protocol(_initial_state(p["initial"]), _schedule_params(p), p["cycles"])
        write_atomic(cfg.out / "trajectory.csv", traj.to_csv())
        return ["trajectory.csv"]
    spec = proto.GridSpec(schedule=p["schedule"], n_theta=p["grid"], n_gamma=p["grid"],
                          phi=p["phi"] * math.pi)
    opt = proto.optimize_params(spec)
    theta = [t / math.pi for t in (opt.theta.theta_odd, opt.theta.theta_even)] \
        if isinstance(opt.theta, proto.Alternating) else opt.theta / math.pi
    write_atomic(cfg.out / "protocol_optimum.json", _json({
        "schedule": p["schedule"], "theta_over_pi": theta, "gamma_over_pi": opt.gamma / math.pi,
        "n0": opt.n0, "second_modulus": opt.lam}))
    return ["protocol_optimum.json"]


def _error_points(p: dict, names: list[str]) -> list[dict]:
    grid = np.geomspace(p["pmin"], p["pmax"], p["points"]) if p["points"] > 1 else [p["pmax"]]
    return [{"channel": n, "p": float(x), "phi": p["phi"], "gamma": p["gamma"],
             "alternating": list(p["alternating"])} for n in names for x in grid]


def _slopes_csv(points: list[dict], results: list[sweep.PointResult]) -> str:
    fits = []
    for label in dict.fromkeys(pt["channel"] for pt in points):
        rows = [(pt["p"], r.result["steady_state_error"]) for pt, r in zip(points, results)
                if pt["channel"] == label and r.ok]
        if not rows:
            continue
        ps, es = map(np.array, zip(*rows))
        slope = float(np.polyfit(ps, es, 1)[0]) if len(rows) > 1 else float(es[0] / ps[0])
        fits.append(err.SlopeFit(parse_channel(label).label, tuple(ps), tuple(es), slope, 0.0, 1.0))
    return err.slopes_to_csv(fits)


def cmd_errors(cfg: RunConfig) -> list[str]:
    names = [k.label for k in _channel_list(cfg.params["channels"])]
    points = _error_points(cfg.params, names)
    results = _run_sweep(cfg, "slopes", points, errors_point)
    write_atomic(cfg.out / "slopes.csv", _slopes_csv(points, results))
    return ["slopes.csv"]


def _motion_points(p: dict) -> list[dict]:
    return [{"kind": p["kind"], "value": float(v), "cycles": p["cycles"], "fock_dim": p["fock_dim"],
             "mode": p["mode"]} for v in motion.default_grid(p["kind"], p["points"])]


def _motion_csv(points, results) -> str:
    rows = [motion.SweepRow(pt["kind"], pt["value"], r.result["gate1_error"],
                            r.result["gate2_error"], r.result["protocol_error"])
            for pt, r in zip(points, results) if r.ok]
    return motion.sweep_to_csv(rows)


def cmd_motion(cfg: RunConfig) -> list[str]:
    p = cfg.params
    if cfg.action == "closure":
        res = motion.drive_A_pulse_sequence(fock_dim=p["fock_dim"])
        s = lv.collective(lv.SX_DE)
        rho = res.evolution.spin_state.data
        sup = res.spin_superop()
        out = {"abs_alpha": res.evolution.abs_alpha, "phi_over_pi": res.evolution.phi / math.pi,
               "p_ee": float(np.real(rho[8, 8]))}
        for sign, tag in ((-1, "minus"), (1, "plus")):
            u = expm_array(sign * 1j * math.pi / 4 * s @ s)
            out[f"channel_distance_exp_{tag}"] = motion.channel_distance(sup, u)
        write_atomic(cfg.out / "closure.json", _json(out))
        return ["closure.json"]
    points = _motion_points(p)
    name = f"fig4_{p['kind']}"
    results = _run_sweep(cfg, name, points, motion_point)
    write_atomic(cfg.out / f"{name}.csv", _motion_csv(points, results))
    return [f"{name}.csv"]


def _gap_points(omegas, kappas, gammas) -> list[dict]:
    return [{"omega_c": float(o), "kappa": float(k), "gamma_over_pi": float(g)}
            for g in gammas for o in omegas for k in kappas]


def _gap_csv(points, results) -> str:
    rows = [cont.GapRow(pt["omega_c"], pt["kappa"], pt["gamma_over_pi"], r.result["gap_over_J"],
                        r.result["empirical_over_J"]) for pt, r in zip(points, results) if r.ok]
    return cont.gap_to_csv(rows)


def cmd_continuous(cfg: RunConfig) -> list[str]:
    p = cfg.params
    if cfg.action == "optimize":
        opt = cont.optimize_continuous()
        write_atomic(cfg.out / "optimum.json", _json(opt.to_dict()))
        return ["optimum.json"]
    if cfg.action == "kappa-scan":
        points = _gap_points([6.0], np.geomspace(0.5, 20.0, p["points"]), [0.15, 0.25])
        name = "kappa_scan"
    else:
        points = _gap_points(_range_or_list(p["omega_c"], p["points"]),
                             _range_or_list(p["kappa"], p["points"]), p["gamma"])
        name = "gap"
    results = _run_sweep(cfg, name, points, gap_point)
    write_atomic(cfg.out / f"{name}.csv", _gap_csv(points, results))
    return [f"{name}.csv"]


def cmd_sweep(cfg: RunConfig) -> list[str]:
    p = cfg.params
    if cfg.action == "errors":
        names = [k.label for k in _channel_list(p["channel"])]
        points = _error_points(p, names)
        results = _run_sweep(cfg, "sweep_errors", points, errors_point)
        write_atomic(cfg.out / "sweep_errors.csv", _slopes_csv(points, results))
        return ["sweep_errors.csv"]
    if cfg.action == "motion":
        points = _motion_points(p)
        name = f"fig4_{p['kind']}"
        results = _run_sweep(cfg, name, points, motion_point)
        write_atomic(cfg.out / f"{name}.csv", _motion_csv(points, results))
        return [f"{name}.csv"]
    points = _gap_points(_range_or_list(p["omega_c"], p["points"]),
                         _range_or_list(p["kappa"], p["points"]), p["gammas"])
    results = _run_sweep(cfg, "gap", points, gap_point)
    write_atomic(cfg.out / "gap.csv", _gap_csv(points, results))
    return ["gap.csv"]


COMMANDS = {"spectral": cmd_spectral, "protocol": cmd_protocol, "errors": cmd_errors,
            "motion": cmd_motion, "continuous": cmd_continuous, "sweep": cmd_sweep}


def run_command(cfg: RunConfig) -> int:
    cfg.out.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    outputs = COMMANDS[cfg.command](cfg)
    write_manifest(cfg, outputs, time.perf_counter() - t0)
    return EXIT_OK


# ---------------------------------------------------------------------------
# argument parsing

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="singlet-pump",
                                     description="Dissipative singlet preparation: models and figure data.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for command, actions in ACTIONS.items():
        sp = sub.add_parser(command)
        if actions != (None,):
            sp.add_argument("action", choices=actions)
        sp.add_argument("--out", default=".", help="output directory")
        sp.add_argument("--config", help="TOML config file")
        for key, spec in {**SCHEMA[command], **COMMON_KEYS}.items():
            flag = "--" + key.replace("_", "-")
            sp.add_argument(flag, dest=key, default=None, help=spec.help or None)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    skip = {"command", "action", "out", "config", "verbose"}
    flags = {k: v for k, v in vars(args).items() if k not in skip}
    out = Path(args.out)
    try:
        cfg = parse_config(args.command, getattr(args, "action", None), flags, args.config, out)
        cfg.workers = sweep.resolve_workers(cfg.workers)
    except (ConfigError, ValueError) as exc:
        return _fail(out, EXIT_CONFIG, exc)
    try:
        return run_command(cfg)
    except ConfigError as exc:
        return _fail(out, EXIT_CONFIG, exc)
    except NUMERIC_ERRORS as exc:
        return _fail(out, EXIT_NUMERIC, exc)


def _fail(out: Path, code: int, exc: BaseException) -> int:
    record = {"status": "error", "exit_code": code, "type": type(exc).__name__, "message": str(exc)}
    try:
        write_atomic(out / "error.json", _json(record))
    except OSError:
        pass
    print(json.dumps(record), file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
