"""Command-line front end.

Usage: ``zeno COMMAND --model MODEL [options]``. Run ``zeno --help`` for flags.

Exit codes: 0 success, 2 bad configuration, 3 numerical contract
violation, 4 I/O failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
from dataclasses import dataclass, field

import numpy as np

from . import models
from .errors import ZenoError, InvalidInputError
from .numkernel import frob_norm
from .spaces import SpaceSpec, basis_vector
from .zeno_core import (
    Trajectory,
    continuous_trajectory,
    convergence_scan,
    coupling_error,
    limit_trajectory,
    pulsed_error,
    pulsed_trajectory,
    uniform_times,
)

logger = logging.getLogger(__name__)

COMMANDS = ("partition", "pulsed", "continuous", "limit", "sweep", "darkspace", "decay")
MODELS = ("two-level", "three-level", "four-level", "cavity", "decay", "custom-file")

# flag dest -> parameter name used by the model constructors
PARAM_FLAGS = {
    "omega": "omega",
    "coupling": "K",
    "coupling_prime": "K_prime",
    "g": "g",
    "kappa": "kappa",
    "tau_z": "tau_z",
    "gamma": "gamma",
}

# parameters each model needs; the measurement coupling is dropped for K sweeps
REQUIRED = {
    "two-level": ("omega",),
    "three-level": ("omega", "coupling"),
    "four-level": ("omega", "coupling", "coupling_prime"),
    "cavity": ("g", "kappa"),
    "decay": ("tau_z", "gamma", "coupling"),
    "custom-file": ("system_file", "meas_file"),
}
MEAS_COUPLING_FLAG = {"four-level": "coupling_prime", "three-level": "coupling", "decay": "coupling"}

DEFAULTS = {
    "t_max": 1.0,
    "samples": 200,
    "pulses": 64,
    "format": "csv",
    "initial_index": 0,
    "n_max": None,
}

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_IO = 0, 2, 3, 4


class ConfigError(Exception):
    pass


@dataclass
class RunConfig:
    command: str
    model: str
    parameters: dict[str, float] = field(default_factory=dict)
    t_max: float = 1.0
    samples: int = 200
    pulses: int = 64
    sweep_param: str | None = None
    sweep_values: tuple[float, ...] = ()
    window: tuple[float, float] | None = None
    n_max: int = 3
    system_file: str | None = None
    meas_file: str | None = None
    initial_index: int = 0
    output_path: str = ""
    format: str = "csv"


def _float_list(text: str) -> list[float]:
    try:
        return [float(x) for x in str(text).split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _window(text: str) -> tuple[float, float]:
    vals = _float_list(text)
    if len(vals) != 2 or not vals[0] < vals[1]:
        raise argparse.ArgumentTypeError("window must be 'T0,T1' with T0 < T1")
    return (vals[0], vals[1])


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="zeno",
        description="Simulate Zeno subspaces under pulsed and continuous measurement.",
        argument_default=argparse.SUPPRESS,
    )
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", help="JSON file of option values; command-line flags override it")
    p.add_argument("--model", choices=MODELS, help="built-in model or custom-file")
    g = p.add_argument_group("model parameters")
    g.add_argument("--omega", type=float, help="Rabi frequency of the observed pair (cavity: ground-state drive, default 0)")
    g.add_argument("--coupling", "-K", type=float, help="coupling K (measurement strength; four-level: 2-3 coupling)")
    g.add_argument("--coupling-prime", type=float, help="four-level measurement coupling K'")
    g.add_argument("--g", type=float, help="cavity atom-field coupling")
    g.add_argument("--kappa", type=float, help="cavity loss rate")
    g.add_argument("--n-max", type=int, help="cavity Fock cutoff (default: $ZENO_NMAX_DEFAULT or 3)")
    g.add_argument("--tau-z", type=float, help="Zeno time of the decay model")
    g.add_argument("--gamma", type=float, help="decay rate of the decay model")
    g.add_argument("--system-file", help="custom-file: system Hamiltonian matrix file")
    g.add_argument("--meas-file", help="custom-file: measurement Hamiltonian matrix file")
    g.add_argument("--initial-index", type=int, help="custom-file: basis index of the initial ket (default 0)")
    r = p.add_argument_group("run")
    r.add_argument("--t-max", type=float, help="final time (default 1.0)")
    r.add_argument("--samples", type=int, help="number of time samples, >= 2 (default 200)")
    r.add_argument("--pulses", "-N", type=int, help="measurements per pulsed run (default 64)")
    r.add_argument("--param", choices=("K", "N"), help="sweep parameter: measurement coupling K or pulse count N")
    r.add_argument("--values", type=_float_list, help="sweep values, comma separated (>= 4, geometric)")
    r.add_argument("--window", type=_window, help="decay fit window 'T0,T1' (default: automatic)")
    o = p.add_argument_group("output")
    o.add_argument("--output", "-o", help="output file (default: <command>.<format>)")
    o.add_argument("--format", choices=("csv", "json"), help="output format (default csv)")
    return p


def _config_file_values(path: str, parser: argparse.ArgumentParser) -> dict:
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"--config: cannot read {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"--config: {path} is not valid JSON: {exc}") from None
    if not isinstance(raw, dict):
        raise ConfigError("--config: top level must be an object")
    actions = {a.dest: a for a in parser._actions if a.dest not in ("help", "command", "config")}
    out = {}
    for key, value in raw.items():
        dest = key.lstrip("-").replace("-", "_")
        if dest not in actions:
            raise ConfigError(f"--config: unknown key {key!r}")
        action = actions[dest]
        try:
            if action.type in (_float_list, _window):
                if isinstance(value, list):
                    value = ",".join(str(v) for v in value)
                value = action.type(str(value))
            elif action.type is not None:
                if isinstance(value, bool) or not isinstance(value, (int, float, str)):
                    raise TypeError(f"expected a number, got {value!r}")
                value = action.type(value)
            elif not isinstance(value, str):
                raise TypeError(f"expected a string, got {value!r}")
        except (TypeError, ValueError, argparse.ArgumentTypeError) as exc:
            raise ConfigError(f"--config: bad value for {key!r}: {exc}") from None
        if action.choices is not None and value not in action.choices:
            raise ConfigError(f"--config: {key!r} must be one of {list(action.choices)}")
        out[dest] = value
    return out


def _default_nmax() -> int:
    env = os.environ.get("ZENO_NMAX_DEFAULT")
    if env is None:
        return 3
    try:
        return int(env)
    except ValueError:
        raise ConfigError(f"ZENO_NMAX_DEFAULT must be an integer, got {env!r}") from None


def parse_config(argv: list[str] | None = None) -> RunConfig:
    """Parse flags (over an optional ``--config`` file) into a validated config.

    Raises ``SystemExit(2)`` on any configuration error.
    """
    parser = build_parser()
    ns = vars(parser.parse_args(argv))
    try:
        merged = {}
        if "config" in ns:
            merged.update(_config_file_values(ns.pop("config"), parser))
        merged.update(ns)
        return _make_config(merged)
    except ConfigError as exc:
        parser.error(str(exc))


def _make_config(opts: dict) -> RunConfig:
    command = opts["command"]
    model = opts.get("model")
    if model is None:
        raise ConfigError("--model is required")
    values = dict(DEFAULTS)
    values.update(opts)

    required = list(REQUIRED[model])
    is_k_sweep = command == "sweep" and values.get("param") == "K"
    if is_k_sweep and MEAS_COUPLING_FLAG.get(model) in required:
        required.remove(MEAS_COUPLING_FLAG[model])
    missing = [name for name in required if values.get(name) is None]
    if missing:
        flags = ", ".join("--" + name.replace("_", "-") for name in missing)
        raise ConfigError(f"model {model!r} needs {flags}")

    params = {PARAM_FLAGS[k]: float(values[k]) for k in PARAM_FLAGS if values.get(k) is not None}

    samples = int(values["samples"])
    if samples < 2:
        raise ConfigError("--samples must be at least 2")
    t_max = float(values["t_max"])
    if not (math.isfinite(t_max) and t_max > 0):
        raise ConfigError("--t-max must be positive")
    pulses = int(values["pulses"])
    if pulses < 1:
        raise ConfigError("--pulses must be at least 1")

    n_max = values.get("n_max")
    n_max = _default_nmax() if n_max is None else int(n_max)
    if model == "cavity" and n_max < 2:
        raise ConfigError("--n-max must be at least 2")

    sweep_param = values.get("param")
    sweep_values: tuple[float, ...] = ()
    if command == "sweep":
        if sweep_param is None:
            raise ConfigError("sweep needs --param")
        raw = values.get("values")
        if not raw:
            raise ConfigError("sweep needs --values")
        vals = sorted(raw)
        if len(set(vals)) != len(vals):
            raise ConfigError("--values must be distinct")
        if sweep_param == "N" and any(v < 1 or v != int(v) for v in vals):
            raise ConfigError("--values for N must be positive integers")
        sweep_values = tuple(vals)

    fmt = values["format"]
    out = values.get("output") or f"{command}.{fmt}"
    return RunConfig(
        command=command,
        model=model,
        parameters=params,
        t_max=t_max,
        samples=samples,
        pulses=pulses,
        sweep_param=sweep_param,
        sweep_values=sweep_values,
        window=values.get("window"),
        n_max=n_max,
        system_file=values.get("system_file"),
        meas_file=values.get("meas_file"),
        initial_index=int(values["initial_index"]),
        output_path=out,
        format=fmt,
    )


# ---------------------------------------------------------------------------
# matrix files


def read_matrix_file(path: str) -> np.ndarray:
    """Read ``dim`` then ``dim*dim`` row-major entries written as ``re+imi``."""
    with open(path) as fh:
        tokens = fh.read().split()
    if not tokens:
        raise InvalidInputError(f"{path}: empty matrix file")
    try:
        dim = int(tokens[0])
    except ValueError:
        raise InvalidInputError(f"{path}: first token must be the dimension") from None
    entries = tokens[1:]
    if dim < 1 or len(entries) != dim * dim:
        raise InvalidInputError(f"{path}: expected {dim * dim} entries, found {len(entries)}")
    try:
        vals = [complex(tok.replace("i", "j")) for tok in entries]
    except ValueError as exc:
        raise InvalidInputError(f"{path}: bad complex entry ({exc})") from None
    return np.array(vals, dtype=np.complex128).reshape(dim, dim)


def write_matrix_file(path: str, A) -> None:
    A = np.asarray(A, dtype=np.complex128)
    lines = [str(A.shape[0])]
    for row in A:
        lines.append(" ".join(f"{z.real:.16e}{z.imag:+.16e}i" for z in row))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


# ---------------------------------------------------------------------------
# deterministic emitters


def fmt_float(x: float) -> str:
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return f"{x:.16e}"


def _json(obj, indent: int = 0) -> str:
    pad = "  " * (indent + 1)
    end = "  " * indent
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {_json(v, indent + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        seq = list(obj)
        if not seq:
            return "[]"
        if all(not isinstance(v, (dict, list, tuple, np.ndarray)) for v in seq):
            return "[" + ", ".join(_json(v, indent + 1) for v in seq) + "]"
        return "[\n" + ",\n".join(pad + _json(v, indent + 1) for v in seq) + "\n" + end + "]"
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if obj is None:
        return "null"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return "null" if not math.isfinite(float(obj)) else fmt_float(obj)
    return json.dumps(str(obj))


def dump_json(obj) -> str:
    return _json(obj) + "\n"


def _complex_pairs(A) -> list:
    A = np.asarray(A)
    if A.ndim == 1:
        return [[z.real, z.imag] for z in A]
    return [_complex_pairs(row) for row in A]


def trajectory_columns(traj: Trajectory) -> list[str]:
    return ["t", "survival", "total_norm", "coherence_norm"] + [f"p_{n}" for n in range(traj.n_sectors)]


def trajectory_csv(traj: Trajectory) -> str:
    lines = [",".join(trajectory_columns(traj))]
    for k in range(len(traj)):
        row = [traj.times[k], traj.survival[k], traj.total_norm[k], traj.coherence_norm[k], *traj.sector_probs[k]]
        lines.append(",".join(fmt_float(v) for v in row))
    return "\n".join(lines) + "\n"


def trajectory_dict(traj: Trajectory) -> dict:
    out = {
        "t": traj.times,
        "survival": traj.survival,
        "total_norm": traj.total_norm,
        "coherence_norm": traj.coherence_norm,
    }
    for n in range(traj.n_sectors):
        out[f"p_{n}"] = traj.sector_probs[:, n]
    return out


# ---------------------------------------------------------------------------
# run


def build_model(cfg: RunConfig) -> models.ModelInstance:
    p = cfg.parameters
    name = cfg.model
    if name == "two-level":
        return models.two_level(p["omega"], p.get("K", 0.0))
    if name == "three-level":
        return models.three_level(p["omega"], p.get("K", 1.0))
    if name == "four-level":
        return models.four_level(p["omega"], p["K"], p.get("K_prime", 1.0))
    if name == "cavity":
        return models.lambda_cavity(p["g"], p["kappa"], cfg.n_max, p.get("omega", 0.0))
    if name == "decay":
        return models.decay_model(p["tau_z"], p["gamma"], p.get("K", 0.0))
    H = read_matrix_file(cfg.system_file)
    M = read_matrix_file(cfg.meas_file)
    if H.shape != M.shape:
        raise InvalidInputError("system and measurement matrices differ in dimension")
    return models.ModelInstance(
        "custom-file", H, M, p.get("K", 1.0), basis_vector(H.shape[0], cfg.initial_index),
        SpaceSpec.single(H.shape[0]), dict(p),
    )


def _meta(cfg: RunConfig, model: models.ModelInstance) -> dict:
    return {
        "command": cfg.command,
        "model": cfg.model,
        "parameters": {k: model.parameters[k] for k in sorted(model.parameters)},
        "t_max": cfg.t_max,
        "samples": cfg.samples,
    }


def _emit_trajectory(cfg, model, traj: Trajectory, extra: dict | None = None) -> str:
    if cfg.format == "csv":
        return trajectory_csv(traj)
    doc = {"meta": _meta(cfg, model), **trajectory_dict(traj)}
    if extra:
        doc.update(extra)
    return dump_json(doc)


def _run_partition(cfg, model):
    part = model.partition()
    if cfg.format == "csv":
        lines = ["sector,eta,rank,row,col,re,im"]
        for n, P in enumerate(part.projectors):
            for i in range(P.shape[0]):
                for j in range(P.shape[1]):
                    z = P[i, j]
                    lines.append(
                        f"{n},{fmt_float(part.eigenvalues[n])},{part.ranks[n]},{i},{j},{fmt_float(z.real)},{fmt_float(z.imag)}"
                    )
        text = "\n".join(lines) + "\n"
    else:
        text = dump_json(
            {
                "meta": _meta(cfg, model),
                "eigenvalues": list(part.eigenvalues),
                "ranks": part.ranks,
                "projectors": [_complex_pairs(P) for P in part.projectors],
            }
        )
    etas = ", ".join("rest" if math.isnan(e) else f"{e:g}" for e in part.eigenvalues)
    return text, f"sectors: {len(part)}; eigenvalues: {etas}"


def _run_dynamics(cfg, model):
    times = uniform_times(cfg.t_max, cfg.samples)
    part = model.partition()
    psi0 = model.initial_state
    if cfg.command == "pulsed":
        traj = pulsed_trajectory(model.system_H, part, psi0, times, cfg.pulses)
    elif cfg.command == "continuous":
        traj = continuous_trajectory(model.system_H, model.meas_H, model.coupling, times, psi0, part)
    else:
        traj = limit_trajectory(model.system_H, model.meas_H, model.coupling, times, psi0, part)
    return _emit_trajectory(cfg, model, traj), f"final survival: {traj.survival[-1]:.10f}"


def _run_sweep(cfg, model):
    part = model.partition()
    if cfg.sweep_param == "K":
        fn = coupling_error(model.system_H, model.meas_H, cfg.t_max, part)
    else:
        fn = pulsed_error(model.system_H, part, model.initial_state, cfg.t_max)
    rep = convergence_scan(fn, cfg.sweep_values, cfg.sweep_param)
    if cfg.format == "csv":
        lines = ["value,error"] + [f"{fmt_float(v)},{fmt_float(e)}" for v, e in zip(rep.parameter_values, rep.errors)]
        text = "\n".join(lines) + "\n"
    else:
        text = dump_json(
            {
                "meta": _meta(cfg, model),
                "parameter_name": rep.parameter_name,
                "parameter_values": rep.parameter_values,
                "errors": rep.errors,
                "fitted_order": rep.fitted_order,
                "fit_residual": rep.fit_residual,
                "monotone_decreasing": rep.monotone_decreasing,
            }
        )
    return text, f"fitted order: {rep.fitted_order:.4f} (residual {rep.fit_residual:.4f})"


def _run_darkspace(cfg, model):
    B = models.dark_space(model)
    labels = [str(lab) for lab in model.space.labels()]
    extra = {}
    if model.name == "cavity":
        ref = models.reference_dark_basis(cfg.n_max)
        extra["reference_distance"] = frob_norm(B @ B.conj().T - ref @ ref.conj().T)
    if cfg.format == "csv":
        lines = ["vector,index,label,re,im"]
        for k in range(B.shape[1]):
            for i in range(B.shape[0]):
                z = B[i, k]
                lines.append(f"{k},{i},{labels[i]},{fmt_float(z.real)},{fmt_float(z.imag)}")
        text = "\n".join(lines) + "\n"
    else:
        text = dump_json(
            {
                "meta": _meta(cfg, model),
                "dimension": B.shape[1],
                "labels": labels,
                "vectors": [_complex_pairs(B[:, k]) for k in range(B.shape[1])],
                **extra,
            }
        )
    return text, f"dark space dimension: {B.shape[1]}"


def _run_decay(cfg, model):
    times = uniform_times(cfg.t_max, cfg.samples)
    traj = models.decay_trajectory(model, times)
    fit = models.fit_decay(traj, cfg.window)
    extra = {"fit": {"gamma_eff": fit.gamma_eff, "window": list(fit.window), "residual": fit.residual}}
    return _emit_trajectory(cfg, model, traj, extra), f"gamma_eff: {fit.gamma_eff:.10e}"


_RUNNERS = {
    "partition": _run_partition,
    "pulsed": _run_dynamics,
    "continuous": _run_dynamics,
    "limit": _run_dynamics,
    "sweep": _run_sweep,
    "darkspace": _run_darkspace,
    "decay": _run_decay,
}


def run(cfg: RunConfig) -> int:
    """Execute ``cfg``, write the output file and print a one-line summary."""
    try:
        model = build_model(cfg)
        text, summary = _RUNNERS[cfg.command](cfg, model)
    except OSError as exc:
        print(f"zeno: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (ZenoError, np.linalg.LinAlgError) as exc:
        print(f"zeno: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    try:
        with open(cfg.output_path, "w", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        print(f"zeno: cannot write {cfg.output_path}: {exc}", file=sys.stderr)
        return EXIT_IO
    print(summary)
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    cfg = parse_config(argv)
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
