"""Bundled default configurations and reference constants.

The reference dephasing times and g values are the measured aqueous-sample
constants this package is calibrated around; the default decoherence line
passes through the zero-field water point (1.0 mPa*s, 8.60 ps) and the 40%
w/w glycerol point (eta(0.40), 21.9 ps).

Two g values are carried as data without reconciliation: the
room-temperature optical value (1.74) and the frozen-glass CW resonance
value (1.807); the discrepancy between them is a property of the sample,
not of this package.
"""

from __future__ import annotations

import math

import numpy as np

from .dynamics import DecoherenceModel, ExperimentConfig, NoiseModel, OkeArtifact
from .modulation import ModulationConfig
from .physics import GValue, MagneticField
from .pipelines import glycerol_viscosity

G_ISO_OPTICAL = 1.74  # room-temperature aqueous solution
G_ISO_FROZEN_GLASS = 1.807  # CW resonance in a frozen solvent glass

T2STAR_WATER_0T = 8.60e-12  # s, zero field in H2O
T2STAR_D2O_0T = 10.1e-12  # s, zero field in D2O
T2STAR_GLYCEROL40_0T = 21.9e-12  # s, zero field in 3:2 water:glycerol (w/w)

WATER_VISCOSITY_MPAS = 1.0
GLYCEROL40_MASS_FRACTION = 0.40
ROOM_TEMPERATURE_K = 294.0
ANCHOR_TEMPERATURE_K = 293.15  # temperature at which the default line is anchored

EXCITED_STATE_LIFETIME_WATER = 17e-12  # s, zero field
EXCITED_STATE_LIFETIME_DMSO = 430e-12  # s

SPIN_ORBIT_SPLITTING_CM1 = 5000.0  # ground-term splitting, cm^-1

DEFAULT_CONCENTRATION_MOLAR = 2e-3
DEFAULT_PUMP_ENERGY_J = 1e-6
DEFAULT_SIGNAL_PER_MOLAR = 500.0  # signal units per mol/L -> amplitude 1.0 at 2 mM
DEFAULT_NOISE_SIGMA = 1.0 / 300.0  # SNR 300 at the default amplitude
DEFAULT_ENSEMBLE_SIZE = 10_000
DEFAULT_SEED = 42

EPR_DEADTIME_S = 120e-9
EPR_INCREMENT_S = 2e-9


def time_grid_ps(start_ps: float, stop_ps: float, step_ps: float) -> np.ndarray:
    """Strictly increasing delay grid in seconds from picosecond bounds."""

    n = int(round((stop_ps - start_ps) / step_ps)) + 1
    return (start_ps + step_ps * np.arange(n)) * 1e-12


def default_decoherence(
    g_spread_sigma: float = 0.0,
    t1: float = math.inf,
    anchor_temperature: float = ANCHOR_TEMPERATURE_K,
) -> DecoherenceModel:
    """Decoherence line through the water and 40% glycerol anchor points."""

    eta_40 = glycerol_viscosity(GLYCEROL40_MASS_FRACTION, anchor_temperature)
    slope = (T2STAR_GLYCEROL40_0T - T2STAR_WATER_0T) / (eta_40 - WATER_VISCOSITY_MPAS)
    intercept = T2STAR_WATER_0T - slope * WATER_VISCOSITY_MPAS
    return DecoherenceModel(
        t2_slope=slope,
        t2_intercept=intercept,
        g_spread_sigma=g_spread_sigma,
        t1=t1,
    )


def default_experiment(
    field_tesla: float = 0.0,
    viscosity_mpas: float = WATER_VISCOSITY_MPAS,
    g_iso: float = G_ISO_OPTICAL,
    g_spread_sigma: float = 0.0,
    concentration: float = DEFAULT_CONCENTRATION_MOLAR,
    additive_sigma: float = DEFAULT_NOISE_SIGMA,
    time_stop_ps: float = 35.0,
    time_step_ps: float = 0.1,
    ensemble_size: int = DEFAULT_ENSEMBLE_SIZE,
    rng_seed: int = DEFAULT_SEED,
) -> ExperimentConfig:
    """The bundled aqueous-sample configuration at room temperature."""

    return ExperimentConfig(
        field=MagneticField(field_tesla),
        g=GValue(g_iso, g_spread_sigma),
        decoherence=default_decoherence(g_spread_sigma=g_spread_sigma),
        viscosity=viscosity_mpas,
        temperature=ROOM_TEMPERATURE_K,
        concentration=concentration,
        pump_energy=DEFAULT_PUMP_ENERGY_J,
        pump_helicity="left",
        initialization_efficiency=1.0,
        excited_state_lifetime=EXCITED_STATE_LIFETIME_WATER,
        oke=OkeArtifact(amplitude=0.5, width=0.1e-12, odd_fraction=0.05),
        noise=NoiseModel(additive_sigma=additive_sigma, signal_per_molar=DEFAULT_SIGNAL_PER_MOLAR),
        time_grid=time_grid_ps(0.0, time_stop_ps, time_step_ps),
        ensemble_size=ensemble_size,
        rng_seed=rng_seed,
    )


def default_modulation() -> ModulationConfig:
    return ModulationConfig()
