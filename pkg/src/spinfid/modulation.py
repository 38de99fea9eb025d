"""Polarization-modulation detection: pump helicity sequencing from the
PEM/trigger frequency relationship and pump-odd demodulation.

The laser trigger is treated as phase-locked to the PEM: the trigger period
spans a half-odd-integer number of PEM half-cycles, so consecutive pulses
sample opposite retardation half-cycles and carry opposite helicity. A
stated trigger frequency is snapped to the nearest locked ratio; configs
whose ratio is closer to an integer (consecutive pulses on same-sign
half-cycles) are rejected.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dynamics import ExperimentConfig, noise_free_trace_values
from .errors import DomainError, ValidationError

# Maximum distance of 2*f_pem/f_trig from the nearest integer before the
# stated frequencies are considered inconsistent with a phase lock.
_LOCK_TOLERANCE = 0.05


@dataclass(frozen=True)
class ModulationConfig:
    """PEM retardation cycle and pump-pulse trigger description."""

    pem_frequency: float = 50176.0  # Hz
    trigger_frequency: float = 1014.0  # Hz
    pulses_per_point: int = 1000  # helicity pairs averaged per delay point
    first_trigger_phase: float = math.pi / 2  # PEM phase at the first trigger

    def __post_init__(self):
        if not (self.pem_frequency > self.trigger_frequency > 0):
            raise ValidationError(
                f"need pem_frequency > trigger_frequency > 0, got "
                f"{self.pem_frequency} and {self.trigger_frequency}"
            )
        if self.pulses_per_point < 1:
            raise ValidationError(f"pulses_per_point must be >= 1, got {self.pulses_per_point}")
        # Validates the half-cycle relationship.
        self.half_cycles_per_pulse()
        if abs(math.sin(self.first_trigger_phase)) < 1e-9:
            raise ValidationError(
                "first trigger sits at a PEM retardation zero crossing; helicity undefined"
            )

    def half_cycles_per_pulse(self) -> int:
        """Number of PEM half-cycles between consecutive triggers (locked).

        Must be odd: an even count puts every pulse on the same-sign
        half-cycle, producing constant helicity.
        """

        ratio2 = 2.0 * self.pem_frequency / self.trigger_frequency
        nearest = round(ratio2)
        if abs(ratio2 - nearest) > _LOCK_TOLERANCE:
            raise ValidationError(
                f"pem/trigger ratio {ratio2 / 2:.4f} is not consistent with a "
                "half-cycle phase lock"
            )
        if nearest % 2 == 0:
            raise ValidationError(
                "consecutive pulses sample same-sign PEM half-cycles "
                f"(ratio {nearest / 2:g}); helicity would not alternate"
            )
        return nearest


@dataclass(frozen=True)
class RawShotPair:
    """Probe response for one left-pumped and one right-pumped shot."""

    left_shot: float
    right_shot: float

    def __post_init__(self):
        if not (math.isfinite(self.left_shot) and math.isfinite(self.right_shot)):
            raise ValidationError("shot values must be finite")


def pulse_helicities(config: ModulationConfig, n: int) -> list[str]:
    """Helicity of the first ``n`` pump pulses.

    Pulse k sees PEM phase 2*pi*f_pem*t_k + phase0 at its locked trigger
    time t_k; the sign of the retardation selects left or right circular.
    """

    if n < 1:
        raise DomainError(f"n must be >= 1, got {n}")
    half_cycles = config.half_cycles_per_pulse()
    k = np.arange(n)
    pem_phase = math.pi * half_cycles * k + config.first_trigger_phase
    retardation = np.sin(pem_phase)
    return ["left" if r > 0 else "right" for r in retardation]


def demodulate(pairs: "list[RawShotPair]") -> float:
    """Pump-odd signal: mean over pairs of (left - right)/2.

    Any component common to both helicities cancels exactly.
    """

    if len(pairs) == 0:
        raise DomainError("demodulate needs at least one shot pair")
    return float(np.mean([(p.left_shot - p.right_shot) / 2.0 for p in pairs]))


def synthesize_raw_shots(
    config: ExperimentConfig,
    mod: ModulationConfig,
    delay: float,
    delay_index: int = 0,
    per_shot_sigma: float | None = None,
) -> list[RawShotPair]:
    """Individual shot pairs at one pump-probe delay.

    Each left/right shot carries +/- the pump-odd signal (spin plus the odd
    artifact fraction), the helicity-even artifact background, and an
    independent Gaussian noise draw. ``per_shot_sigma`` defaults to
    ``additive_sigma * sqrt(2 * pulses_per_point)`` so the demodulated mean
    has the same standard error as a simulated trace point. Deterministic
    per (seed, delay_index).
    """

    snapshot = config.with_updates(time_grid=np.array([delay]))
    odd = float(noise_free_trace_values(snapshot)[0])
    even = float((1.0 - config.oke.odd_fraction) * config.oke.envelope(np.array([delay]))[0])
    if per_shot_sigma is None:
        per_shot_sigma = config.noise.additive_sigma * math.sqrt(2.0 * mod.pulses_per_point)
    if per_shot_sigma < 0:
        raise DomainError(f"per-shot sigma must be >= 0, got {per_shot_sigma}")

    seed = config.noise.rng_seed if config.noise.rng_seed is not None else config.rng_seed
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(2, delay_index)))
    noise = per_shot_sigma * rng.standard_normal((mod.pulses_per_point, 2)) if per_shot_sigma > 0 \
        else np.zeros((mod.pulses_per_point, 2))
    return [
        RawShotPair(left_shot=odd + even + noise[i, 0], right_shot=-odd + even + noise[i, 1])
        for i in range(mod.pulses_per_point)
    ]
