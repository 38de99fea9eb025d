"""Synthetic pump-probe spin traces from a Bloch-ensemble model.

A transverse field along x drives Larmor precession of the pump-initialized
z polarization; each ensemble member carries its own g value drawn from a
Gaussian spread, so the field dependence of the ensemble dephasing emerges
from the spread rather than from any member-level field term. Member
propagation uses the exact closed-form solution for a static field
(rotation about x plus exponential damping); no ODE integrator is involved.

Random substreams are derived from the experiment seed with fixed spawn
keys (0 = member g draws, 1 = additive trace noise, 2 = raw shot noise), so
results are reproducible and independent of how ensemble members are
distributed over threads.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import DomainError, ValidationError
from .physics import CODATA2018, GValue, MagneticField, PhysicalConstants

HELICITIES = ("left", "right")

# Members per work chunk. Fixed (never derived from the thread count) so the
# floating-point reduction order, and hence the result, is identical for any
# level of parallelism.
_MEMBER_CHUNK = 4096


@dataclass(frozen=True)
class BlochState:
    """Polarization 3-vector of one ensemble member plus its parameters."""

    polarization: tuple[float, float, float]
    member_g: float
    member_field_offset: float = 0.0  # tesla

    def __post_init__(self):
        norm = math.sqrt(sum(p * p for p in self.polarization))
        if norm > 1.0 + 1e-9:
            raise DomainError(f"|polarization| must be <= 1, got {norm}")
        if not (math.isfinite(self.member_g) and self.member_g > 0):
            raise DomainError(f"member g must be finite and > 0, got {self.member_g}")


@dataclass(frozen=True)
class DecoherenceModel:
    """Viscosity-linear member dephasing plus ensemble g-spread broadening.

    The member-level transverse time is ``t2_intercept + t2_slope * eta``
    with ``eta`` in mPa*s; it carries no field dependence. ``g_spread_sigma``
    feeds the analytic field-broadening term of :func:`effective_t2star`.
    ``t1`` is a ceiling used for validation (T2 <= 2*T1), not simulated.
    """

    t2_slope: float  # seconds per mPa*s
    t2_intercept: float  # seconds at zero viscosity
    g_spread_sigma: float = 0.0
    t1: float = math.inf  # seconds

    def __post_init__(self):
        if not (self.t2_intercept > 0 and math.isfinite(self.t2_intercept)):
            raise DomainError(f"T2 intercept must be finite and > 0, got {self.t2_intercept}")
        if not math.isfinite(self.t2_slope):
            raise DomainError("T2 slope must be finite")
        if self.g_spread_sigma < 0:
            raise DomainError(f"g spread must be >= 0, got {self.g_spread_sigma}")
        if not self.t1 > 0:
            raise DomainError(f"T1 must be > 0, got {self.t1}")

    def member_t2(self, viscosity: float) -> float:
        """Member-level T2 at a viscosity in mPa*s."""

        if viscosity <= 0:
            raise DomainError(f"viscosity must be > 0, got {viscosity}")
        t2 = self.t2_intercept + self.t2_slope * viscosity
        if t2 <= 0:
            raise DomainError(
                f"T2(eta={viscosity} mPa*s) = {t2} s is not positive; "
                "decoherence line invalid at this viscosity"
            )
        if t2 > 2.0 * self.t1:
            raise DomainError(f"T2 = {t2} s exceeds the physical bound 2*T1 = {2 * self.t1} s")
        return t2


@dataclass(frozen=True)
class OkeArtifact:
    """Gaussian time-zero artifact; ``odd_fraction`` survives demodulation."""

    amplitude: float = 0.0  # signal units
    width: float = 0.1e-12  # Gaussian sigma, seconds
    odd_fraction: float = 0.05

    def __post_init__(self):
        if self.amplitude < 0:
            raise DomainError(f"artifact amplitude must be >= 0, got {self.amplitude}")
        if not self.width > 0:
            raise DomainError(f"artifact width must be > 0, got {self.width}")
        if not 0 <= self.odd_fraction <= 1:
            raise DomainError(f"odd fraction must be in [0, 1], got {self.odd_fraction}")

    def envelope(self, times: np.ndarray) -> np.ndarray:
        """Full artifact amplitude profile (odd + even parts)."""

        t = np.asarray(times, dtype=float)
        return self.amplitude * np.exp(-0.5 * (t / self.width) ** 2)


@dataclass(frozen=True)
class NoiseModel:
    """Additive Gaussian point noise and the signal-per-concentration scale."""

    additive_sigma: float = 0.0  # signal units per trace point
    signal_per_molar: float = 500.0  # signal units per mol/L
    rng_seed: int | None = None  # overrides the experiment seed for noise draws

    def __post_init__(self):
        if self.additive_sigma < 0:
            raise DomainError(f"noise sigma must be >= 0, got {self.additive_sigma}")


@dataclass(frozen=True)
class TraceSeries:
    """Ordered (delay, signal) samples with free-form provenance metadata."""

    times: np.ndarray  # seconds, strictly increasing
    values: np.ndarray  # signal units
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        values = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "values", values)
        if times.shape != values.shape or times.ndim != 1:
            raise ValidationError(
                f"times and values must be equal-length 1-d arrays, got {times.shape} and {values.shape}"
            )
        if times.size and not np.all(np.diff(times) > 0):
            raise ValidationError("trace times must be strictly increasing")
        if not np.all(np.isfinite(values)):
            raise ValidationError("trace values must be finite")
        if not np.all(np.isfinite(times)):
            raise ValidationError("trace times must be finite")

    def __len__(self) -> int:
        return int(self.times.size)

    @property
    def is_empty(self) -> bool:
        return self.times.size == 0


@dataclass(frozen=True)
class ExperimentConfig:
    """Complete physical and instrumental description of one synthetic run."""

    field: MagneticField
    g: GValue
    decoherence: DecoherenceModel
    viscosity: float  # mPa*s
    temperature: float  # K
    concentration: float  # mol/L
    pump_energy: float  # J
    pump_helicity: str  # "left" | "right"
    initialization_efficiency: float  # fraction of full polarization
    excited_state_lifetime: float  # seconds
    oke: OkeArtifact
    noise: NoiseModel
    time_grid: np.ndarray  # seconds, strictly increasing
    ensemble_size: int
    rng_seed: int
    excited_state_coupling: str = "constant"  # "constant" | "decay"
    phase_phi0: float = 0.0  # rad, zero-field oscillation phase
    phase_cubic: float = 0.0  # rad / T^3

    def __post_init__(self):
        grid = np.asarray(self.time_grid, dtype=float)
        object.__setattr__(self, "time_grid", grid)
        if grid.ndim != 1 or grid.size == 0:
            raise ValidationError("time grid must be a non-empty 1-d array")
        if not np.all(np.diff(grid) > 0):
            raise ValidationError("time grid must be strictly increasing")
        if self.pump_helicity not in HELICITIES:
            raise ValidationError(f"pump helicity must be one of {HELICITIES}, got {self.pump_helicity!r}")
        if self.excited_state_coupling not in ("constant", "decay"):
            raise ValidationError(
                f"excited-state coupling must be 'constant' or 'decay', got {self.excited_state_coupling!r}"
            )
        if not 0 <= self.initialization_efficiency <= 1:
            raise DomainError(
                f"initialization efficiency must be in [0, 1], got {self.initialization_efficiency}"
            )
        if self.ensemble_size < 1:
            raise ValidationError(f"ensemble size must be >= 1, got {self.ensemble_size}")
        if self.concentration <= 0:
            raise DomainError(f"concentration must be > 0, got {self.concentration}")
        if self.viscosity <= 0:
            raise DomainError(f"viscosity must be > 0, got {self.viscosity}")
        if self.temperature <= 0:
            raise DomainError(f"temperature must be > 0, got {self.temperature}")
        if self.pump_energy < 0:
            raise DomainError(f"pump energy must be >= 0, got {self.pump_energy}")
        if not self.excited_state_lifetime > 0:
            raise DomainError(f"excited-state lifetime must be > 0, got {self.excited_state_lifetime}")
        if not (math.isfinite(self.phase_phi0) and math.isfinite(self.phase_cubic)):
            raise DomainError("phase parameters must be finite")

    def with_updates(self, **changes) -> "ExperimentConfig":
        return replace(self, **changes)


def initialize_polarization(helicity: str, efficiency: float) -> tuple[float, float, float]:
    """Pump-initialized polarization (0, 0, +/-efficiency) along z."""

    if helicity not in HELICITIES:
        raise ValidationError(f"helicity must be one of {HELICITIES}, got {helicity!r}")
    if not 0 <= efficiency <= 1:
        raise DomainError(f"efficiency must be in [0, 1], got {efficiency}")
    sign = 1.0 if helicity == "left" else -1.0
    return (0.0, 0.0, sign * efficiency)


def phase_offset(field: float, phi0: float = 0.0, cubic_coeff: float = 0.0) -> float:
    """Phenomenological oscillation phase phi0 + c*B^3."""

    if not all(math.isfinite(v) for v in (field, phi0, cubic_coeff)):
        raise DomainError("phase inputs must be finite")
    return phi0 + cubic_coeff * field ** 3


def excited_state_weight(t: float, lifetime: float, mode: str = "constant") -> float:
    """Coupling of the probe signal to the excited-state population.

    The default mode returns 1 (signal decoupled from population decay);
    ``mode="decay"`` returns exp(-t/lifetime) for sensitivity studies.
    """

    if not lifetime > 0:
        raise DomainError(f"lifetime must be > 0, got {lifetime}")
    if t < 0:
        raise DomainError(f"t must be >= 0, got {t}")
    if mode == "constant":
        return 1.0
    if mode == "decay":
        return math.exp(-t / lifetime)
    raise ValidationError(f"unknown excited-state mode {mode!r}")


def evolve_bloch(
    state: BlochState,
    field_along_x: float,
    t2: float,
    t1: float,
    dt: float,
    constants: PhysicalConstants = CODATA2018,
) -> BlochState:
    """Propagate one member for ``dt`` seconds under a static field along x.

    Closed form: the (y, z) components rotate at the member Larmor rate
    while decaying with T2; the x component decays with T1 toward zero
    equilibrium. Exact for any dt.
    """

    if dt < 0:
        raise DomainError(f"dt must be >= 0, got {dt}")
    if not t2 > 0:
        raise DomainError(f"T2 must be > 0, got {t2}")
    if not t1 > 0:
        raise DomainError(f"T1 must be > 0, got {t1}")
    if t2 > 2.0 * t1:
        raise DomainError(f"unphysical relaxation pair: T2 = {t2} > 2*T1 = {2 * t1}")
    omega = larmor_rate(state.member_g, field_along_x + state.member_field_offset, constants)
    px, py, pz = state.polarization
    c, s = math.cos(omega * dt), math.sin(omega * dt)
    decay_t = math.exp(-dt / t2)
    decay_l = math.exp(-dt / t1)
    new_p = (
        px * decay_l,
        (py * c + pz * s) * decay_t,
        (pz * c - py * s) * decay_t,
    )
    return replace(state, polarization=new_p)


def larmor_rate(g: float, field: float, constants: PhysicalConstants = CODATA2018) -> float:
    """Signed angular precession rate g*mu_B*B/hbar; accepts negative fields."""

    return g * constants.bohr_magneton * field / constants.reduced_planck


def effective_t2star(
    model: DecoherenceModel,
    viscosity: float,
    field: float,
    g: GValue,
    constants: PhysicalConstants = CODATA2018,
) -> float:
    """Predicted ensemble dephasing time at a given viscosity and field.

    Combines the viscosity-linear member rate with the inhomogeneous
    g-spread rate sigma_g*mu_B*B/(sqrt(2)*hbar) by adding inverse rates.
    Reduces to the linear-in-viscosity law at zero field.
    """

    t2_member = model.member_t2(viscosity)
    if field < 0:
        raise DomainError(f"field must be >= 0, got {field}")
    spread_rate = model.g_spread_sigma * constants.bohr_magneton * field / (
        math.sqrt(2.0) * constants.reduced_planck
    )
    return 1.0 / (1.0 / t2_member + spread_rate)


def _substream(config: ExperimentConfig, *key: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(config.rng_seed, spawn_key=tuple(key)))


def member_g_values(config: ExperimentConfig) -> np.ndarray:
    """Per-member g values; element m is the fixed substream draw for member m."""

    if config.g.spread_sigma == 0.0:
        return np.full(config.ensemble_size, config.g.iso)
    rng = _substream(config, 0)
    draws = config.g.iso + config.g.spread_sigma * rng.standard_normal(config.ensemble_size)
    # A Gaussian tail can reach g <= 0 only for unphysically wide spreads
    # (the GValue invariant keeps sigma < iso); reflect to stay positive.
    return np.abs(draws)


def _mean_cosine(omegas: np.ndarray, times: np.ndarray, phi: float, n_threads: int) -> np.ndarray:
    """Ensemble mean of cos(omega*t + phi) with a thread-invariant reduction."""

    chunks = [omegas[i : i + _MEMBER_CHUNK] for i in range(0, omegas.size, _MEMBER_CHUNK)]

    def chunk_sum(om: np.ndarray) -> np.ndarray:
        return np.cos(np.outer(om, times) + phi).sum(axis=0)

    if n_threads > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(max_workers=n_threads) as pool:
            partials = list(pool.map(chunk_sum, chunks))
    else:
        partials = [chunk_sum(c) for c in chunks]
    total = partials[0]
    for p in partials[1:]:
        total = total + p
    return total / omegas.size


def noise_free_trace_values(config: ExperimentConfig, n_threads: int = 1) -> np.ndarray:
    """Demodulated trace without additive noise (spin term plus odd artifact)."""

    times = config.time_grid
    t2 = config.decoherence.member_t2(config.viscosity)
    phi = phase_offset(config.field.magnitude, config.phase_phi0, config.phase_cubic)
    sign = 1.0 if config.pump_helicity == "left" else -1.0
    eff = config.initialization_efficiency

    pos = times >= 0
    t_pos = times[pos]
    mean_pz = np.zeros_like(times)
    if t_pos.size:
        if config.g.spread_sigma == 0.0:
            omega = larmor_rate(config.g.iso, config.field.magnitude)
            mean_cos = np.cos(omega * t_pos + phi)
        else:
            omegas = member_g_values(config) * CODATA2018.bohr_magneton * config.field.magnitude \
                / CODATA2018.reduced_planck
            mean_cos = _mean_cosine(omegas, t_pos, phi, n_threads)
        envelope = np.exp(-t_pos / t2)
        if config.excited_state_coupling == "decay":
            envelope = envelope * np.exp(-t_pos / config.excited_state_lifetime)
        mean_pz[pos] = sign * eff * mean_cos * envelope

    scale = config.noise.signal_per_molar * config.concentration
    oke_term = config.oke.odd_fraction * config.oke.envelope(times)
    return scale * mean_pz + oke_term


def simulate_trace(config: ExperimentConfig, n_threads: int = 1) -> TraceSeries:
    """Synthesize one demodulated pump-probe trace.

    Deterministic for a fixed ``rng_seed`` and independent of
    ``n_threads``. The noise-free, spread-free, artifact-free limit equals
    the closed-form damped cosine at every grid point.
    """

    values = noise_free_trace_values(config, n_threads=n_threads)
    if config.noise.additive_sigma > 0:
        seed = config.noise.rng_seed if config.noise.rng_seed is not None else config.rng_seed
        rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(1,)))
        values = values + config.noise.additive_sigma * rng.standard_normal(values.size)
    meta = {
        "kind": "simulated",
        "field_tesla": config.field.magnitude,
        "viscosity_mpas": config.viscosity,
        "temperature_k": config.temperature,
        "concentration_molar": config.concentration,
        "ensemble_size": config.ensemble_size,
        "rng_seed": config.rng_seed,
    }
    return TraceSeries(times=config.time_grid.copy(), values=values, metadata=meta)
