"""Closed-form spin physics: Zeeman/Larmor relations, resonance arithmetic,
Boltzmann level populations, and hydrodynamic tumbling times.

All functions are pure and take SI inputs unless the docstring says
otherwise. Energy unit conversions (cm^-1 <-> J) are centralized here.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import DomainError


@dataclass(frozen=True)
class PhysicalConstants:
    """CODATA 2018 constants, hard-coded for reproducibility.

    ``reduced_planck`` is derived as ``planck / (2*pi)`` so the pair is
    exactly consistent in floating point; it agrees with the tabulated
    CODATA value to 10 significant figures.
    """

    bohr_magneton: float = 9.2740100783e-24  # J/T
    planck: float = 6.62607015e-34  # J*s, exact in SI
    reduced_planck: float = 6.62607015e-34 / (2.0 * math.pi)  # J*s
    boltzmann: float = 1.380649e-23  # J/K, exact in SI
    speed_of_light: float = 299792458.0  # m/s, exact in SI


CODATA2018 = PhysicalConstants()


@dataclass(frozen=True)
class MagneticField:
    """Static field of given magnitude along a unit axis (default: x)."""

    magnitude: float  # tesla
    axis: tuple[float, float, float] = (1.0, 0.0, 0.0)

    def __post_init__(self):
        if not math.isfinite(self.magnitude) or self.magnitude < 0:
            raise DomainError(f"field magnitude must be finite and >= 0, got {self.magnitude}")
        norm = math.sqrt(sum(a * a for a in self.axis))
        if abs(norm - 1.0) > 1e-12:
            raise DomainError(f"field axis must be a unit vector, |axis| = {norm}")


@dataclass(frozen=True)
class GValue:
    """Isotropic g value plus a Gaussian ensemble spread."""

    iso: float
    spread_sigma: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.iso) and self.iso > 0):
            raise DomainError(f"g iso must be finite and > 0, got {self.iso}")
        if not (0 <= self.spread_sigma < self.iso):
            raise DomainError(
                f"g spread must satisfy 0 <= sigma < iso, got {self.spread_sigma}"
            )


def _require_finite(**values: float) -> None:
    for name, v in values.items():
        if not math.isfinite(v):
            raise DomainError(f"{name} must be finite, got {v}")


def wavenumber_to_joules(wavenumber_cm: float, constants: PhysicalConstants = CODATA2018) -> float:
    """Convert an energy in cm^-1 to joules (E = h*c*100*nu_tilde)."""

    return wavenumber_cm * constants.planck * constants.speed_of_light * 100.0


def joules_to_wavenumber(energy_j: float, constants: PhysicalConstants = CODATA2018) -> float:
    """Convert an energy in joules to cm^-1."""

    return energy_j / (constants.planck * constants.speed_of_light * 100.0)


def larmor_frequency(g: float, field: float, constants: PhysicalConstants = CODATA2018) -> float:
    """Angular Larmor frequency g*mu_B*B/hbar in rad/s."""

    _require_finite(g=g, field=field)
    if g <= 0:
        raise DomainError(f"g must be > 0, got {g}")
    if field < 0:
        raise DomainError(f"field must be >= 0, got {field}")
    return g * constants.bohr_magneton * field / constants.reduced_planck


def resonance_field(g: float, microwave_freq: float, constants: PhysicalConstants = CODATA2018) -> float:
    """Resonance field h*nu/(g*mu_B) in tesla for a microwave frequency in Hz."""

    _require_finite(g=g, microwave_freq=microwave_freq)
    if g <= 0:
        raise DomainError(f"g must be > 0, got {g}")
    if microwave_freq <= 0:
        raise DomainError(f"microwave frequency must be > 0, got {microwave_freq}")
    return constants.planck * microwave_freq / (g * constants.bohr_magneton)


def g_from_resonance(field: float, microwave_freq: float, constants: PhysicalConstants = CODATA2018) -> float:
    """g value h*nu/(mu_B*B) from a resonance field in tesla and frequency in Hz."""

    _require_finite(field=field, microwave_freq=microwave_freq)
    if field <= 0:
        raise DomainError(f"field must be > 0, got {field}")
    if microwave_freq <= 0:
        raise DomainError(f"microwave frequency must be > 0, got {microwave_freq}")
    return constants.planck * microwave_freq / (constants.bohr_magneton * field)


def ground_level_population(
    delta_soc: float,
    temperature: float,
    degeneracy_lower: int = 2,
    degeneracy_upper: int = 4,
    constants: PhysicalConstants = CODATA2018,
) -> float:
    """Two-level Boltzmann fraction of the lower spin-orbit level.

    ``delta_soc`` is the splitting in cm^-1; degeneracies default to the
    J' = 1/2 (lower) and J' = 3/2 (upper) multiplets of a spin-orbit split
    threefold orbital term.
    """

    _require_finite(delta_soc=delta_soc, temperature=temperature)
    if delta_soc < 0:
        raise DomainError(f"splitting must be >= 0, got {delta_soc}")
    if temperature <= 0:
        raise DomainError(f"temperature must be > 0, got {temperature}")
    if degeneracy_lower < 1 or degeneracy_upper < 1:
        raise DomainError("degeneracies must be >= 1")
    delta_j = wavenumber_to_joules(delta_soc, constants)
    boltz = math.exp(-delta_j / (constants.boltzmann * temperature))
    return degeneracy_lower / (degeneracy_lower + degeneracy_upper * boltz)


def rotational_correlation_time(
    viscosity: float,
    hydrodynamic_radius: float = 0.35e-9,
    temperature: float = 294.0,
    constants: PhysicalConstants = CODATA2018,
) -> float:
    """Stokes-Einstein-Debye tumbling time 4*pi*eta*r^3/(3*kB*T) in seconds.

    ``viscosity`` in Pa*s. The default radius of 0.35 nm is a documented
    package default for an octahedral hexachloride anion, not a measured
    value.
    """

    _require_finite(viscosity=viscosity, hydrodynamic_radius=hydrodynamic_radius, temperature=temperature)
    if viscosity <= 0 or hydrodynamic_radius <= 0 or temperature <= 0:
        raise DomainError("viscosity, radius and temperature must all be > 0")
    return (
        4.0 * math.pi * viscosity * hydrodynamic_radius ** 3
        / (3.0 * constants.boltzmann * temperature)
    )
