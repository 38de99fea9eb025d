"""File formats and report serialization.

Trace CSV (``# spinfid-trace v1``): header line, ``time_ps,signal`` column
line, one sample per row. Times are picoseconds on disk and seconds in
memory; both columns use 17 significant digits so values round-trip
exactly.

Shots CSV (``# spinfid-shots v1``): ``time_ps,left,right`` rows, several
per delay, consumed by the demodulation command.

Relaxation CSV (``# spinfid-relaxation v1``): ``temperature_k,time_ps``
with an optional ``sigma_ps`` third column.

Reports are single JSON documents embedding the tool version, the fully
resolved configuration, the payload, and SHA-256 hashes of every input
file, so each emitted number is reproducible from its report alone. All
writes go through a temp-file-then-rename so outputs are atomic.
"""

from __future__ import annotations

import hashlib
import json
import math
import os
from pathlib import Path

import numpy as np

from . import presets
from .dynamics import (
    DecoherenceModel,
    ExperimentConfig,
    NoiseModel,
    OkeArtifact,
    TraceSeries,
)
from .errors import ParseError, ValidationError
from .modulation import ModulationConfig
from .physics import GValue, MagneticField

TOOL_VERSION = "0.1.0"
TRACE_HEADER = "# spinfid-trace v1"
SHOTS_HEADER = "# spinfid-shots v1"
RELAXATION_HEADER = "# spinfid-relaxation v1"

PS = 1e-12


def _g17(x: float) -> str:
    return format(float(x), ".17g")


def atomic_write_text(path: Path, text: str) -> None:
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text, encoding="utf-8")
    os.replace(tmp, path)


def atomic_write_bytes(path: Path, blob: bytes) -> None:
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_bytes(blob)
    os.replace(tmp, path)


def sha256_file(path: Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as handle:
        for block in iter(lambda: handle.read(65536), b""):
            digest.update(block)
    return digest.hexdigest()


def save_trace(trace: TraceSeries, path: Path) -> None:
    lines = [TRACE_HEADER, "time_ps,signal"]
    for t, v in zip(trace.times, trace.values):
        lines.append(f"{_g17(t / PS)},{_g17(v)}")
    atomic_write_text(path, "\n".join(lines) + "\n")


def load_trace(path: Path) -> TraceSeries:
    path = Path(path)
    lines = path.read_text(encoding="utf-8").splitlines()
    if not lines or lines[0].strip() != TRACE_HEADER:
        raise ParseError(f"{path}:1: expected header {TRACE_HEADER!r}")
    if len(lines) < 2 or lines[1].strip() != "time_ps,signal":
        raise ParseError(f"{path}:2: expected column line 'time_ps,signal'")
    times, values = [], []
    for lineno, raw in enumerate(lines[2:], start=3):
        line = raw.strip()
        if not line:
            continue
        parts = line.split(",")
        if len(parts) != 2:
            raise ParseError(f"{path}:{lineno}: expected 'time_ps,signal', got {raw!r}")
        try:
            t = float(parts[0])
            v = float(parts[1])
        except ValueError as exc:
            raise ParseError(f"{path}:{lineno}: non-numeric value ({exc})") from exc
        if times and t <= times[-1]:
            raise ValidationError(
                f"{path}:{lineno}: time {parts[0]} ps does not increase past the previous sample"
            )
        times.append(t)
        values.append(v)
    if not times:
        raise ValidationError(f"{path}: no samples")
    return TraceSeries(
        times=np.array(times) * PS,
        values=np.array(values),
        metadata={"source": str(path)},
    )


def save_shots(path: Path, records) -> None:
    """Write (time_s, left, right) records as a shots CSV."""

    lines = [SHOTS_HEADER, "time_ps,left,right"]
    for t, left, right in records:
        lines.append(f"{_g17(t / PS)},{_g17(left)},{_g17(right)}")
    atomic_write_text(path, "\n".join(lines) + "\n")


def load_shots(path: Path) -> list[tuple[float, float, float]]:
    path = Path(path)
    lines = path.read_text(encoding="utf-8").splitlines()
    if not lines or lines[0].strip() != SHOTS_HEADER:
        raise ParseError(f"{path}:1: expected header {SHOTS_HEADER!r}")
    if len(lines) < 2 or lines[1].strip() != "time_ps,left,right":
        raise ParseError(f"{path}:2: expected column line 'time_ps,left,right'")
    records = []
    for lineno, raw in enumerate(lines[2:], start=3):
        line = raw.strip()
        if not line:
            continue
        parts = line.split(",")
        if len(parts) != 3:
            raise ParseError(f"{path}:{lineno}: expected 'time_ps,left,right', got {raw!r}")
        try:
            records.append((float(parts[0]) * PS, float(parts[1]), float(parts[2])))
        except ValueError as exc:
            raise ParseError(f"{path}:{lineno}: non-numeric value ({exc})") from exc
    if not records:
        raise ValidationError(f"{path}: no samples")
    return records


def load_relaxation(path: Path) -> tuple[np.ndarray, np.ndarray, np.ndarray | None]:
    """Read (temperatures_k, times_s, sigmas_s_or_None) from a relaxation CSV."""

    path = Path(path)
    lines = path.read_text(encoding="utf-8").splitlines()
    if not lines or lines[0].strip() != RELAXATION_HEADER:
        raise ParseError(f"{path}:1: expected header {RELAXATION_HEADER!r}")
    columns = lines[1].strip() if len(lines) > 1 else ""
    if columns not in ("temperature_k,time_ps", "temperature_k,time_ps,sigma_ps"):
        raise ParseError(f"{path}:2: expected 'temperature_k,time_ps[,sigma_ps]'")
    with_sigma = columns.endswith("sigma_ps")
    temps, times, sigmas = [], [], []
    for lineno, raw in enumerate(lines[2:], start=3):
        line = raw.strip()
        if not line:
            continue
        parts = line.split(",")
        if len(parts) != (3 if with_sigma else 2):
            raise ParseError(f"{path}:{lineno}: wrong column count in {raw!r}")
        try:
            temps.append(float(parts[0]))
            times.append(float(parts[1]) * PS)
            if with_sigma:
                sigmas.append(float(parts[2]) * PS)
        except ValueError as exc:
            raise ParseError(f"{path}:{lineno}: non-numeric value ({exc})") from exc
    if not temps:
        raise ValidationError(f"{path}: no samples")
    return (
        np.array(temps),
        np.array(times),
        np.array(sigmas) if with_sigma else None,
    )


# --- configuration files ---------------------------------------------------

_EXPERIMENT_KEYS = {
    "field_tesla",
    "g_iso",
    "g_spread_sigma",
    "viscosity_mpas",
    "temperature_k",
    "concentration_molar",
    "pump_energy_j",
    "pump_helicity",
    "initialization_efficiency",
    "excited_state_lifetime_ps",
    "excited_state_coupling",
    "phase_phi0_rad",
    "phase_cubic_rad_per_t3",
    "time_start_ps",
    "time_stop_ps",
    "time_step_ps",
    "ensemble_size",
    "rng_seed",
}
_DECOHERENCE_KEYS = {"t2_intercept_ps", "t2_slope_ps_per_mpas", "t1_ps"}
_OKE_KEYS = {"amplitude", "width_ps", "odd_fraction"}
_NOISE_KEYS = {"additive_sigma", "signal_per_molar"}
_MODULATION_KEYS = {
    "pem_frequency_hz",
    "trigger_frequency_hz",
    "pulses_per_point",
    "first_trigger_phase_rad",
}
_FIT_KEYS = {"model", "fit_start_ps", "n_starts"}
_SWEEP_KEYS = {"fields_tesla", "viscosities_mpas", "glycerol_fractions", "time_stop_ps"}
_SECTIONS = {
    "experiment": _EXPERIMENT_KEYS,
    "decoherence": _DECOHERENCE_KEYS,
    "oke": _OKE_KEYS,
    "noise": _NOISE_KEYS,
    "modulation": _MODULATION_KEYS,
    "fit": _FIT_KEYS,
    "sweep": _SWEEP_KEYS,
}


def load_config_file(path: Path) -> dict:
    """Parse and strictly validate a JSON run configuration."""

    path = Path(path)
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: invalid JSON ({exc})") from exc
    if not isinstance(raw, dict):
        raise ValidationError(f"{path}: top level must be an object")
    for section, content in raw.items():
        if section not in _SECTIONS:
            raise ValidationError(f"{path}: unknown config section {section!r}")
        if not isinstance(content, dict):
            raise ValidationError(f"{path}: section {section!r} must be an object")
        unknown = set(content) - _SECTIONS[section]
        if unknown:
            raise ValidationError(
                f"{path}: unknown key(s) {sorted(unknown)} in section {section!r}"
            )
    return raw


def default_config_dict() -> dict:
    """Fully populated configuration mirroring the bundled defaults."""

    deco = presets.default_decoherence()
    return {
        "experiment": {
            "field_tesla": 0.0,
            "g_iso": presets.G_ISO_OPTICAL,
            "g_spread_sigma": 0.0,
            "viscosity_mpas": presets.WATER_VISCOSITY_MPAS,
            "temperature_k": presets.ROOM_TEMPERATURE_K,
            "concentration_molar": presets.DEFAULT_CONCENTRATION_MOLAR,
            "pump_energy_j": presets.DEFAULT_PUMP_ENERGY_J,
            "pump_helicity": "left",
            "initialization_efficiency": 1.0,
            "excited_state_lifetime_ps": presets.EXCITED_STATE_LIFETIME_WATER / PS,
            "excited_state_coupling": "constant",
            "phase_phi0_rad": 0.0,
            "phase_cubic_rad_per_t3": 0.0,
            "time_start_ps": 0.0,
            "time_stop_ps": 35.0,
            "time_step_ps": 0.1,
            "ensemble_size": presets.DEFAULT_ENSEMBLE_SIZE,
            "rng_seed": presets.DEFAULT_SEED,
        },
        "decoherence": {
            "t2_intercept_ps": deco.t2_intercept / PS,
            "t2_slope_ps_per_mpas": deco.t2_slope / PS,
            "t1_ps": None,
        },
        "oke": {"amplitude": 0.5, "width_ps": 0.1, "odd_fraction": 0.05},
        "noise": {
            "additive_sigma": presets.DEFAULT_NOISE_SIGMA,
            "signal_per_molar": presets.DEFAULT_SIGNAL_PER_MOLAR,
        },
        "modulation": {
            "pem_frequency_hz": 50176.0,
            "trigger_frequency_hz": 1014.0,
            "pulses_per_point": 1000,
            "first_trigger_phase_rad": math.pi / 2,
        },
        "fit": {"model": "damped_cosine", "fit_start_ps": 0.5, "n_starts": 1},
        "sweep": {
            "fields_tesla": [1.0, 2.0, 3.0, 4.0, 5.0],
            "viscosities_mpas": None,
            "glycerol_fractions": [0.0, 0.1, 0.2, 0.3, 0.4],
            "time_stop_ps": 80.0,
        },
    }


def merge_config(base: dict, overlay: dict) -> dict:
    """Overlay file/flag values onto the defaults, section by section."""

    merged = {section: dict(content) for section, content in base.items()}
    for section, content in overlay.items():
        merged.setdefault(section, {})
        for key, value in content.items():
            merged[section][key] = value
    return merged


def resolve_experiment(config: dict) -> ExperimentConfig:
    """Build the validated ExperimentConfig from a resolved config dict."""

    exp = config["experiment"]
    deco = config["decoherence"]
    oke = config["oke"]
    noise = config["noise"]
    t1_ps = deco.get("t1_ps")
    decoherence = DecoherenceModel(
        t2_slope=deco["t2_slope_ps_per_mpas"] * PS,
        t2_intercept=deco["t2_intercept_ps"] * PS,
        g_spread_sigma=exp["g_spread_sigma"],
        t1=(t1_ps * PS) if t1_ps is not None else math.inf,
    )
    grid = presets.time_grid_ps(exp["time_start_ps"], exp["time_stop_ps"], exp["time_step_ps"])
    return ExperimentConfig(
        field=MagneticField(exp["field_tesla"]),
        g=GValue(exp["g_iso"], exp["g_spread_sigma"]),
        decoherence=decoherence,
        viscosity=exp["viscosity_mpas"],
        temperature=exp["temperature_k"],
        concentration=exp["concentration_molar"],
        pump_energy=exp["pump_energy_j"],
        pump_helicity=exp["pump_helicity"],
        initialization_efficiency=exp["initialization_efficiency"],
        excited_state_lifetime=exp["excited_state_lifetime_ps"] * PS,
        excited_state_coupling=exp["excited_state_coupling"],
        oke=OkeArtifact(
            amplitude=oke["amplitude"],
            width=oke["width_ps"] * PS,
            odd_fraction=oke["odd_fraction"],
        ),
        noise=NoiseModel(
            additive_sigma=noise["additive_sigma"],
            signal_per_molar=noise["signal_per_molar"],
        ),
        time_grid=grid,
        ensemble_size=int(exp["ensemble_size"]),
        rng_seed=int(exp["rng_seed"]),
        phase_phi0=exp["phase_phi0_rad"],
        phase_cubic=exp["phase_cubic_rad_per_t3"],
    )


def resolve_modulation(config: dict) -> ModulationConfig:
    mod = config["modulation"]
    return ModulationConfig(
        pem_frequency=mod["pem_frequency_hz"],
        trigger_frequency=mod["trigger_frequency_hz"],
        pulses_per_point=int(mod["pulses_per_point"]),
        first_trigger_phase=mod["first_trigger_phase_rad"],
    )


# --- reports ----------------------------------------------------------------


def fit_result_payload(fit) -> dict:
    return {
        "model_id": fit.model_id,
        "parameters": {k: float(v) for k, v in fit.parameters.items()},
        "sigma": {k: float(v) for k, v in fit.sigma.items()},
        "covariance": [[float(c) for c in row] for row in np.atleast_2d(fit.covariance)],
        "residual_norm": float(fit.residual_norm),
        "n_points": fit.n_points,
        "n_iterations": fit.n_iterations,
        "converged": fit.converged,
        "degenerate_covariance": fit.degenerate_covariance,
        "fit_window_ps": [fit.fit_window[0] / PS, fit.fit_window[1] / PS],
        "message": fit.message,
    }


def build_report(command: str, resolved_config: dict, payload: dict, input_paths=()) -> dict:
    return {
        "tool": "spinfid",
        "tool_version": TOOL_VERSION,
        "command": command,
        "resolved_config": resolved_config,
        "payload": payload,
        "provenance": {str(p): sha256_file(p) for p in input_paths},
    }


def dump_report(report: dict) -> str:
    return json.dumps(_sanitize_json(report), sort_keys=True, indent=2) + "\n"


def write_report(report: dict, path: Path) -> None:
    atomic_write_text(path, dump_report(report))


def _sanitize_json(value):
    """Replace non-JSON floats so reports stay strictly parseable."""

    if isinstance(value, dict):
        return {k: _sanitize_json(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_sanitize_json(v) for v in value]
    if isinstance(value, (np.floating, float)):
        v = float(value)
        if math.isnan(v):
            return None
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return v
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.ndarray):
        return [_sanitize_json(v) for v in value.tolist()]
    return value
