"""Multi-trace studies: g extraction from field sweeps, viscosity sensing,
relaxation-time extrapolation, detection limits, and deadtime filtering.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dynamics import ExperimentConfig, TraceSeries, effective_t2star, simulate_trace
from .errors import DomainError, RangeError
from .fitting import FitResult, extract_t2star
from .physics import CODATA2018, MagneticField


@dataclass(frozen=True)
class SweepResult:
    """Per-point fits along one swept axis plus derived regression values."""

    axis_name: str  # "field_tesla" | "viscosity_mpas" | ...
    axis_values: tuple
    fits: tuple
    derived: dict
    traces: tuple = ()

    def __post_init__(self):
        diffs = np.diff(np.asarray(self.axis_values, dtype=float))
        if diffs.size and not (np.all(diffs > 0) or np.all(diffs < 0)):
            raise DomainError("sweep axis must be strictly monotone")
        if len(self.fits) != len(self.axis_values):
            raise DomainError("need exactly one fit per axis value")


@dataclass(frozen=True)
class RelaxationSeries:
    """(temperature, relaxation time) points for one relaxation kind."""

    temperatures: np.ndarray  # K, strictly increasing
    times: np.ndarray  # seconds
    sigmas: np.ndarray | None = None  # seconds
    kind: str = "T1"  # "T1" | "Tm"

    def __post_init__(self):
        temps = np.asarray(self.temperatures, dtype=float)
        times = np.asarray(self.times, dtype=float)
        object.__setattr__(self, "temperatures", temps)
        object.__setattr__(self, "times", times)
        if self.sigmas is not None:
            sig = np.asarray(self.sigmas, dtype=float)
            object.__setattr__(self, "sigmas", sig)
            if sig.shape != temps.shape or np.any(sig < 0):
                raise DomainError("sigmas must align with temperatures and be >= 0")
        if temps.shape != times.shape or temps.ndim != 1:
            raise DomainError("temperatures and times must be equal-length 1-d arrays")
        if temps.size and not np.all(np.diff(temps) > 0):
            raise DomainError("temperatures must be strictly increasing")
        if np.any(times <= 0):
            raise DomainError("relaxation times must be > 0")
        if self.kind not in ("T1", "Tm"):
            raise DomainError(f"kind must be 'T1' or 'Tm', got {self.kind!r}")


def extract_g_from_sweep(points) -> tuple[float, float]:
    """Weighted regression of omega on B through the origin; g = slope*hbar/mu_B.

    ``points`` are (field_tesla, omega_rad_s) pairs or triples with a
    trailing 1-sigma omega uncertainty. Zero-field points carry no slope
    information and are skipped. Returns (g, sigma); sigma is NaN when only
    one usable point exists.
    """

    fields, omegas, sigmas = [], [], []
    for point in points:
        if len(point) == 2:
            b, w = point
            s = None
        else:
            b, w, s = point
        if b < 0:
            raise DomainError(f"field must be >= 0, got {b}")
        if b == 0:
            continue
        fields.append(float(b))
        omegas.append(float(w))
        sigmas.append(s)
    if not fields:
        raise DomainError("need at least one nonzero-field point")

    b = np.array(fields)
    w = np.array(omegas)
    have_sigmas = all(s is not None and s > 0 for s in sigmas)
    wt = 1.0 / np.array([float(s) for s in sigmas]) ** 2 if have_sigmas else np.ones_like(b)

    sxx = float(np.sum(wt * b * b))
    slope = float(np.sum(wt * b * w)) / sxx
    to_g = CODATA2018.reduced_planck / CODATA2018.bohr_magneton
    if b.size < 2:
        return slope * to_g, math.nan
    if have_sigmas:
        var_slope = 1.0 / sxx
    else:
        resid = w - slope * b
        var_slope = float(np.sum(wt * resid ** 2)) / (b.size - 1) / sxx
    return slope * to_g, math.sqrt(var_slope) * to_g


@dataclass(frozen=True)
class ViscosityLine:
    """Weighted linear law T2* = intercept + slope * eta (eta in mPa*s)."""

    slope: float  # seconds per mPa*s
    intercept: float  # seconds
    slope_sigma: float
    intercept_sigma: float
    n_points: int

    def predict_t2star(self, viscosity: float) -> float:
        return self.intercept + self.slope * viscosity

    def invert_viscosity(self, t2star: float) -> float:
        """Sensing mode: viscosity estimate from a measured dephasing time."""

        if self.slope == 0:
            raise DomainError("cannot invert a flat viscosity law")
        return (t2star - self.intercept) / self.slope


def viscosity_regression(points) -> ViscosityLine:
    """Weighted least-squares line through (viscosity, T2*) points.

    ``points`` are (viscosity_mpas, t2star_seconds) pairs or triples with
    a trailing 1-sigma T2* uncertainty.
    """

    etas, t2s, sigmas = [], [], []
    for point in points:
        if len(point) == 2:
            e, t = point
            s = None
        else:
            e, t, s = point
        etas.append(float(e))
        t2s.append(float(t))
        sigmas.append(s)
    x = np.array(etas)
    y = np.array(t2s)
    if np.unique(x).size < 2:
        raise DomainError("need at least two distinct viscosities")

    have_sigmas = all(s is not None and s > 0 for s in sigmas)
    wt = 1.0 / np.array([float(s) for s in sigmas]) ** 2 if have_sigmas else np.ones_like(x)
    s0 = float(np.sum(wt))
    sx = float(np.sum(wt * x))
    sy = float(np.sum(wt * y))
    sxx = float(np.sum(wt * x * x))
    sxy = float(np.sum(wt * x * y))
    delta = s0 * sxx - sx * sx
    slope = (s0 * sxy - sx * sy) / delta
    intercept = (sxx * sy - sx * sxy) / delta
    var_slope = s0 / delta
    var_intercept = sxx / delta
    if not have_sigmas:
        dof = x.size - 2
        resid = y - intercept - slope * x
        scale = float(np.sum(wt * resid ** 2)) / dof if dof > 0 else math.nan
        var_slope *= scale
        var_intercept *= scale
    return ViscosityLine(
        slope=slope,
        intercept=intercept,
        slope_sigma=math.sqrt(var_slope) if var_slope >= 0 else math.nan,
        intercept_sigma=math.sqrt(var_intercept) if var_intercept >= 0 else math.nan,
        n_points=int(x.size),
    )


def glycerol_viscosity(glycerol_mass_fraction: float, temperature: float) -> float:
    """Dynamic viscosity of a water-glycerol mixture in mPa*s.

    Cheng-type power-mean correlation between the pure-component
    viscosities, validated against handbook mixture tables to a few
    percent. Validity window: mass fraction 0-0.6, temperature 278-313 K.
    """

    if not 0.0 <= glycerol_mass_fraction <= 0.6:
        raise RangeError(
            f"glycerol mass fraction {glycerol_mass_fraction} outside validated range [0, 0.6]"
        )
    if not 278.0 <= temperature <= 313.0:
        raise RangeError(f"temperature {temperature} K outside validated range [278, 313] K")
    t = temperature - 273.15
    mu_water = 1.790 * math.exp((-1230.0 - t) * t / (36100.0 + 360.0 * t))
    mu_glycerol = 12100.0 * math.exp((-1233.0 + t) * t / (9900.0 + 70.0 * t))
    cm = glycerol_mass_fraction
    a = 0.705 - 0.0017 * t
    b = (4.9 + 0.036 * t) * a ** 2.5
    alpha = 1.0 - cm + a * b * cm * (1.0 - cm) / (a * cm + b * (1.0 - cm))
    return mu_water ** alpha * mu_glycerol ** (1.0 - alpha)


@dataclass(frozen=True)
class Extrapolation:
    """Relaxation time predicted outside the measured temperature range."""

    target_temperature: float
    predicted_time: float  # seconds
    sigma: float  # seconds, NaN when undefined
    mode: str  # "loglog" | "linear"
    slope: float  # power-law exponent (loglog) or s/K (linear)
    intercept: float
    n_points_used: int
    fit_range: tuple[float, float]


def extrapolate_t1(
    series: RelaxationSeries,
    fit_range: tuple[float, float],
    target: float,
    mode: str = "loglog",
) -> Extrapolation:
    """Extrapolate a relaxation series to a target temperature.

    The default mode fits a line in (log T, log T1), i.e. a power law
    T1 = A*T^n, the only form that sensibly bridges tens of kelvin to room
    temperature; ``mode="linear"`` fits T1 = a + b*T for comparison and is
    flagged as such in reports.
    """

    if mode not in ("loglog", "linear"):
        raise DomainError(f"mode must be 'loglog' or 'linear', got {mode!r}")
    if target <= 0:
        raise DomainError(f"target temperature must be > 0, got {target}")
    lo, hi = fit_range
    mask = (series.temperatures >= lo) & (series.temperatures <= hi)
    if np.count_nonzero(mask) < 2:
        raise DomainError(
            f"fit range [{lo}, {hi}] K contains {np.count_nonzero(mask)} points; need >= 2"
        )
    temps = series.temperatures[mask]
    times = series.times[mask]
    sig = series.sigmas[mask] if series.sigmas is not None else None

    if mode == "loglog":
        x = np.log(temps)
        y = np.log(times)
        xq = math.log(target)
        wt = 1.0 / (sig / times) ** 2 if sig is not None and np.all(sig > 0) else np.ones_like(x)
    else:
        x = temps
        y = times
        xq = target
        wt = 1.0 / sig ** 2 if sig is not None and np.all(sig > 0) else np.ones_like(x)

    s0 = float(np.sum(wt))
    sx = float(np.sum(wt * x))
    sy = float(np.sum(wt * y))
    sxx = float(np.sum(wt * x * x))
    sxy = float(np.sum(wt * x * y))
    delta = s0 * sxx - sx * sx
    slope = (s0 * sxy - sx * sy) / delta
    intercept = (sxx * sy - sx * sxy) / delta
    var_slope = s0 / delta
    var_intercept = sxx / delta
    cov_ab = -sx / delta
    weighted = sig is not None and np.all(sig > 0)
    dof = x.size - 2
    if not weighted:
        if dof > 0:
            resid = y - intercept - slope * x
            scale = float(np.sum(wt * resid ** 2)) / dof
        else:
            scale = math.nan
        var_slope *= scale
        var_intercept *= scale
        cov_ab *= scale

    pred = intercept + slope * xq
    var_pred = var_intercept + xq * xq * var_slope + 2.0 * xq * cov_ab
    if mode == "loglog":
        value = math.exp(pred)
        sigma = value * math.sqrt(var_pred) if var_pred >= 0 else math.nan
    else:
        value = pred
        sigma = math.sqrt(var_pred) if var_pred >= 0 else math.nan
    return Extrapolation(
        target_temperature=float(target),
        predicted_time=value,
        sigma=sigma,
        mode=mode,
        slope=slope,
        intercept=intercept,
        n_points_used=int(x.size),
        fit_range=(float(lo), float(hi)),
    )


def detection_limit(
    reference: tuple[float, float],
    threshold_snr: float,
    pump_energy_scale: float = 1.0,
) -> float:
    """Smallest detectable concentration given a reference (c, SNR) point.

    Signal scales linearly with concentration against fixed additive
    noise, so c_min = c_ref * threshold / snr_ref; an optional linear
    pump-energy factor scales the reference SNR.
    """

    c_ref, snr_ref = reference
    if c_ref <= 0 or snr_ref <= 0:
        raise DomainError("reference concentration and SNR must be > 0")
    if threshold_snr <= 0:
        raise DomainError(f"threshold SNR must be > 0, got {threshold_snr}")
    if pump_energy_scale <= 0:
        raise DomainError(f"pump energy scale must be > 0, got {pump_energy_scale}")
    return c_ref * threshold_snr / (snr_ref * pump_energy_scale)


def deadtime_truncate(
    trace: TraceSeries,
    deadtime: float = 120e-9,
    increment: float = 2e-9,
) -> TraceSeries:
    """Apply a pulse-spectrometer timing model to a trace.

    Removes points earlier than the deadtime and snaps the remaining
    times onto the pulse-increment grid (duplicates are averaged). A
    fully blanked trace comes back empty with ``deadtime_empty`` set in
    its metadata rather than raising.
    """

    if deadtime < 0:
        raise DomainError(f"deadtime must be >= 0, got {deadtime}")
    if increment <= 0:
        raise DomainError(f"increment must be > 0, got {increment}")
    keep = trace.times >= deadtime
    meta = dict(trace.metadata)
    meta.update({"deadtime_s": deadtime, "increment_s": increment})
    if not np.any(keep):
        meta["deadtime_empty"] = True
        return TraceSeries(times=np.array([]), values=np.array([]), metadata=meta)
    snapped = np.round(trace.times[keep] / increment) * increment
    uniq, inverse, counts = np.unique(snapped, return_inverse=True, return_counts=True)
    sums = np.zeros(uniq.size)
    np.add.at(sums, inverse, trace.values[keep])
    meta["deadtime_empty"] = False
    return TraceSeries(times=uniq, values=sums / counts, metadata=meta)


def _child_seed(base_seed: int, *key: int) -> int:
    return int(np.random.SeedSequence(base_seed, spawn_key=(3, *key)).generate_state(1)[0])


def field_sweep(
    base_config: ExperimentConfig,
    fields,
    fit_start: float = 0.5e-12,
    n_starts: int = 1,
    n_threads: int = 1,
    keep_traces: bool = True,
) -> SweepResult:
    """Simulate and fit one trace per field, then regress omega(B) to g.

    Each sweep point runs with an rng seed derived deterministically from
    the base seed and the point index.
    """

    fields = [float(b) for b in fields]
    fits = []
    traces = []
    points = []
    for k, b in enumerate(fields):
        cfg = base_config.with_updates(
            field=MagneticField(b, base_config.field.axis),
            rng_seed=_child_seed(base_config.rng_seed, k),
        )
        trace = simulate_trace(cfg, n_threads=n_threads)
        expected = effective_t2star(cfg.decoherence, cfg.viscosity, b, cfg.g)
        fit = extract_t2star(
            trace, field=b, fit_start=fit_start, expected_t2star=expected, n_starts=n_starts
        )
        fits.append(fit)
        if keep_traces:
            traces.append(trace)
        sig = fit.sigma["omega"]
        points.append((b, fit.parameters["omega"], sig if sig > 0 and math.isfinite(sig) else None))
    g, g_sigma = extract_g_from_sweep(points)
    return SweepResult(
        axis_name="field_tesla",
        axis_values=tuple(fields),
        fits=tuple(fits),
        derived={"g": g, "g_sigma": g_sigma},
        traces=tuple(traces),
    )


def viscosity_sweep(
    base_config: ExperimentConfig,
    viscosities,
    fit_start: float = 0.5e-12,
    n_starts: int = 1,
    n_threads: int = 1,
    keep_traces: bool = True,
) -> SweepResult:
    """Simulate and fit one trace per viscosity, then fit the linear law."""

    viscosities = [float(v) for v in viscosities]
    fits = []
    traces = []
    points = []
    for k, eta in enumerate(viscosities):
        cfg = base_config.with_updates(
            viscosity=eta,
            rng_seed=_child_seed(base_config.rng_seed, k),
        )
        trace = simulate_trace(cfg, n_threads=n_threads)
        expected = effective_t2star(cfg.decoherence, eta, cfg.field.magnitude, cfg.g)
        fit = extract_t2star(
            trace, field=cfg.field.magnitude, fit_start=fit_start,
            expected_t2star=expected, n_starts=n_starts,
        )
        fits.append(fit)
        if keep_traces:
            traces.append(trace)
        sig = fit.sigma["t2star"]
        points.append((eta, fit.parameters["t2star"], sig if sig and math.isfinite(sig) else None))
    line = viscosity_regression(points)
    return SweepResult(
        axis_name="viscosity_mpas",
        axis_values=tuple(viscosities),
        fits=tuple(fits),
        derived={
            "t2_slope_s_per_mpas": line.slope,
            "t2_intercept_s": line.intercept,
            "t2_slope_sigma": line.slope_sigma,
            "t2_intercept_sigma": line.intercept_sigma,
        },
        traces=tuple(traces),
    )
