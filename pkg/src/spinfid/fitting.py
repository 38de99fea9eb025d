"""Damped least-squares fitting of free-induction and EPR relaxation models.

The solver is a Levenberg-Marquardt loop with Marquardt diagonal scaling
and analytic Jacobians for every model in the registry:

``damped_cosine``
    eta0 * exp(-t/t2star) * cos(omega*t + phi), the free-induction-decay
    fitting model.
``exponential``
    amplitude * exp(-t/tau), for transient population decay.
``inversion_recovery``
    i_inf - amplitude * exp(-t/t1); full inversion is amplitude = 2*i_inf.
``hahn_echo``
    i0 * exp(-(2tau/tm)^stretch); stretch is fixed to 1 unless opted in.

Sign conventions for the oscillatory model: omega >= 0 and phi in
(-pi, pi], since cos(omega*t + phi) = cos(-omega*t - phi).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field

import numpy as np
from scipy.signal import hilbert

from .dynamics import TraceSeries
from .errors import DegenerateFitError, DomainError, GuessFailureError

_TINY_TIME = 1e-24  # lower bound for fitted time constants, seconds

LAMBDA_START = 1e-3
LAMBDA_GROW = 10.0
LAMBDA_SHRINK = 10.0
LAMBDA_MAX = 1e15
COST_TOL = 1e-10
GRAD_TOL = 1e-10
CONVERGED_STREAK = 3
MAX_ITERATIONS = 500
# Per-iteration geometric trust factor for strictly positive parameters
# (time constants, stretch): one Gauss-Newton overshoot must not teleport
# them onto a degenerate boundary where the model loses all sensitivity.
STEP_FACTOR = 3.0


def _damped_cosine_f(t, p):
    t2 = p["t2star"]
    if t2 <= 0:
        raise DomainError(f"t2star must be > 0, got {t2}")
    return p["eta0"] * np.exp(-t / t2) * np.cos(p["omega"] * t + p["phi"])


def _damped_cosine_jac(t, p):
    t2 = p["t2star"]
    env = np.exp(-t / t2)
    arg = p["omega"] * t + p["phi"]
    c, s = np.cos(arg), np.sin(arg)
    return np.column_stack([
        env * c,
        p["eta0"] * env * c * t / t2 ** 2,
        -p["eta0"] * env * s * t,
        -p["eta0"] * env * s,
    ])


def _exponential_f(t, p):
    tau = p["tau"]
    if tau <= 0:
        raise DomainError(f"tau must be > 0, got {tau}")
    return p["amplitude"] * np.exp(-t / tau)


def _exponential_jac(t, p):
    env = np.exp(-t / p["tau"])
    return np.column_stack([env, p["amplitude"] * env * t / p["tau"] ** 2])


def _inversion_recovery_f(t, p):
    t1 = p["t1"]
    if t1 <= 0:
        raise DomainError(f"t1 must be > 0, got {t1}")
    return p["i_inf"] - p["amplitude"] * np.exp(-t / t1)


def _inversion_recovery_jac(t, p):
    env = np.exp(-t / p["t1"])
    return np.column_stack([
        np.ones_like(t),
        -env,
        -p["amplitude"] * env * t / p["t1"] ** 2,
    ])


def _hahn_echo_f(t, p):
    tm, stretch = p["tm"], p["stretch"]
    if tm <= 0 or stretch <= 0:
        raise DomainError(f"tm and stretch must be > 0, got {tm}, {stretch}")
    return p["i0"] * np.exp(-((t / tm) ** stretch))


def _hahn_echo_jac(t, p):
    tm, stretch = p["tm"], p["stretch"]
    u = (t / tm) ** stretch
    env = np.exp(-u)
    # d u / d stretch = u * log(t/tm); zero at t = 0 for stretch > 0.
    with np.errstate(divide="ignore", invalid="ignore"):
        ulog = np.where(t > 0, u * np.log(np.where(t > 0, t / tm, 1.0)), 0.0)
    return np.column_stack([
        env,
        p["i0"] * env * u * stretch / tm,
        -p["i0"] * env * ulog,
    ])


@dataclass(frozen=True)
class _ModelDef:
    params: tuple[str, ...]
    default_bounds: dict
    func: callable
    jac: callable


MODELS: dict[str, _ModelDef] = {
    "damped_cosine": _ModelDef(
        params=("eta0", "t2star", "omega", "phi"),
        default_bounds={
            "eta0": (-math.inf, math.inf),
            "t2star": (_TINY_TIME, math.inf),
            "omega": (0.0, math.inf),
            "phi": (-math.pi, math.pi),
        },
        func=_damped_cosine_f,
        jac=_damped_cosine_jac,
    ),
    "exponential": _ModelDef(
        params=("amplitude", "tau"),
        default_bounds={"amplitude": (-math.inf, math.inf), "tau": (_TINY_TIME, math.inf)},
        func=_exponential_f,
        jac=_exponential_jac,
    ),
    "inversion_recovery": _ModelDef(
        params=("i_inf", "amplitude", "t1"),
        default_bounds={
            "i_inf": (-math.inf, math.inf),
            "amplitude": (-math.inf, math.inf),
            "t1": (_TINY_TIME, math.inf),
        },
        func=_inversion_recovery_f,
        jac=_inversion_recovery_jac,
    ),
    "hahn_echo": _ModelDef(
        params=("i0", "tm", "stretch"),
        default_bounds={
            "i0": (-math.inf, math.inf),
            "tm": (_TINY_TIME, math.inf),
            "stretch": (_TINY_TIME, math.inf),
        },
        func=_hahn_echo_f,
        jac=_hahn_echo_jac,
    ),
}


def model_damped_cosine(t, eta0, t2star, omega, phi):
    """Evaluate eta0*exp(-t/t2star)*cos(omega*t + phi)."""

    return _damped_cosine_f(np.asarray(t, dtype=float), {
        "eta0": eta0, "t2star": t2star, "omega": omega, "phi": phi})


def model_exponential(t, amplitude, tau):
    """Evaluate amplitude*exp(-t/tau)."""

    return _exponential_f(np.asarray(t, dtype=float), {"amplitude": amplitude, "tau": tau})


def model_inversion_recovery(t, i_inf, amplitude, t1):
    """Evaluate i_inf - amplitude*exp(-t/t1)."""

    return _inversion_recovery_f(np.asarray(t, dtype=float), {
        "i_inf": i_inf, "amplitude": amplitude, "t1": t1})


def model_hahn_echo(two_tau, i0, tm, stretch=1.0):
    """Evaluate i0*exp(-(2tau/tm)^stretch) at total evolution times 2tau."""

    return _hahn_echo_f(np.asarray(two_tau, dtype=float), {"i0": i0, "tm": tm, "stretch": stretch})


@dataclass(frozen=True)
class ModelSpec:
    """A model id plus fixed-parameter values and bound overrides.

    ``fixed`` maps parameter names to frozen values excluded from the
    optimization; ``bounds`` overrides the per-parameter defaults. The
    Hahn-echo stretch exponent defaults to fixed 1 via :func:`default_spec`.
    """

    model_id: str
    fixed: dict = dc_field(default_factory=dict)
    bounds: dict = dc_field(default_factory=dict)

    def __post_init__(self):
        if self.model_id not in MODELS:
            raise DomainError(f"unknown model {self.model_id!r}; known: {sorted(MODELS)}")
        names = MODELS[self.model_id].params
        for key in self.fixed:
            if key not in names:
                raise DomainError(f"fixed parameter {key!r} not in model {self.model_id}")
        for key, (lo, hi) in self.bounds.items():
            if key not in names:
                raise DomainError(f"bounded parameter {key!r} not in model {self.model_id}")
            if not lo < hi:
                raise DomainError(f"bound for {key!r} must satisfy lower < upper, got ({lo}, {hi})")

    @property
    def param_names(self) -> tuple[str, ...]:
        return MODELS[self.model_id].params

    @property
    def free_names(self) -> tuple[str, ...]:
        return tuple(n for n in self.param_names if n not in self.fixed)

    def bound(self, name: str) -> tuple[float, float]:
        return self.bounds.get(name, MODELS[self.model_id].default_bounds[name])


def default_spec(model_id: str) -> ModelSpec:
    """ModelSpec with package conventions applied (hahn_echo stretch fixed)."""

    if model_id == "hahn_echo":
        return ModelSpec(model_id, fixed={"stretch": 1.0})
    return ModelSpec(model_id)


@dataclass(frozen=True)
class FitResult:
    """Best-fit parameters with covariance-based 1-sigma uncertainties.

    ``covariance`` spans all named parameters in model order; rows and
    columns of fixed parameters are zero. ``sigma`` entries are NaN when
    the covariance is degenerate (zero residual degrees of freedom or a
    singular normal matrix), with ``degenerate_covariance`` set.
    """

    model_id: str
    parameters: dict
    sigma: dict
    covariance: np.ndarray
    residual_norm: float
    n_points: int
    n_iterations: int
    converged: bool
    fit_window: tuple[float, float]
    degenerate_covariance: bool = False
    message: str = ""

    def model_values(self, times: np.ndarray) -> np.ndarray:
        """Evaluate the fitted model on an arbitrary time grid."""

        return MODELS[self.model_id].func(np.asarray(times, dtype=float), self.parameters)


def _param_vector(spec: ModelSpec, values: dict) -> np.ndarray:
    missing = [n for n in spec.free_names if n not in values]
    if missing:
        raise DomainError(f"initial guess missing parameters: {missing}")
    return np.array([float(values[n]) for n in spec.free_names])


def _full_params(spec: ModelSpec, x: np.ndarray) -> dict:
    p = dict(zip(spec.free_names, x))
    p.update(spec.fixed)
    return p


def _normalize_phase(spec: ModelSpec, params: dict) -> dict:
    if spec.model_id == "damped_cosine" and "phi" not in spec.fixed:
        phi = math.remainder(params["phi"], 2.0 * math.pi)
        if phi <= -math.pi:
            phi = math.pi
        params = dict(params)
        params["phi"] = phi
    return params


def nonlinear_least_squares(
    spec: ModelSpec,
    trace: TraceSeries,
    init: dict,
    window: tuple[float, float] | None = None,
    sigma: np.ndarray | None = None,
    max_iterations: int = MAX_ITERATIONS,
    cost_history: list | None = None,
) -> FitResult:
    """Fit a registered model to a trace by damped least squares.

    Parameters
    ----------
    spec : ModelSpec
        Model id, fixed parameters and bounds.
    trace : TraceSeries
        Data to fit.
    init : dict
        Starting values for every free parameter; must lie within bounds.
    window : (t_start, t_end), optional
        Inclusive fit window in seconds; defaults to the full trace.
    sigma : array, optional
        Per-point standard deviations aligned with ``trace`` for weighted
        fitting; defaults to unweighted.
    max_iterations : int
        Iteration cap. Reaching it returns an unconverged result rather
        than raising.
    cost_history : list, optional
        Diagnostic sink; the cost after every accepted step is appended.

    Returns
    -------
    FitResult
        Converged when the relative cost decrease or the gradient
        infinity-norm stays below 1e-10 for three consecutive iterations.

    Raises
    ------
    DomainError
        Fewer data points than free parameters, or init outside bounds.
    DegenerateFitError
        Singular normal matrix during iteration.
    """

    model = MODELS[spec.model_id]
    if window is None:
        window = (float(trace.times[0]), float(trace.times[-1]))
    mask = (trace.times >= window[0]) & (trace.times <= window[1])
    t = trace.times[mask]
    y = trace.values[mask]
    if sigma is not None:
        sigma = np.asarray(sigma, dtype=float)
        if sigma.shape != trace.times.shape:
            raise DomainError("sigma must align with the trace")
        if np.any(sigma <= 0):
            raise DomainError("sigma values must be > 0")
        w = 1.0 / sigma[mask]
    else:
        w = np.ones_like(t)

    free = spec.free_names
    if t.size < len(free):
        raise DomainError(
            f"need at least {len(free)} points in the fit window, got {t.size}"
        )
    lo = np.array([spec.bound(n)[0] for n in free])
    hi = np.array([spec.bound(n)[1] for n in free])
    x = _param_vector(spec, init)
    if np.any(x < lo) or np.any(x > hi):
        raise DomainError("initial guess violates parameter bounds")
    geometric = lo > 0  # parameters living on a positive scale

    free_idx = [model.params.index(n) for n in free]

    def residuals(xv):
        return (model.func(t, _full_params(spec, xv)) - y) * w

    r = residuals(x)
    cost = float(r @ r)
    if cost_history is not None:
        cost_history.append(cost)
    lam = LAMBDA_START
    streak = 0
    converged = False
    n_iter = 0
    message = ""

    while n_iter < max_iterations:
        n_iter += 1
        jac = model.jac(t, _full_params(spec, x))[:, free_idx] * w[:, None]
        grad = jac.T @ r
        if not np.all(np.isfinite(grad)):
            raise DegenerateFitError("non-finite gradient; model diverged inside the fit window")
        normal = jac.T @ jac
        diag = np.diag(normal).copy()
        dead = np.where(diag <= 0)[0]
        if dead.size:
            raise DegenerateFitError(
                "degenerate fit: parameter(s) "
                f"{[free[i] for i in dead]} have zero sensitivity over the fit window"
            )
        try:
            step = np.linalg.solve(normal + lam * np.diag(diag), -grad)
        except np.linalg.LinAlgError as exc:
            raise DegenerateFitError(f"degenerate fit: singular normal matrix ({exc})") from exc

        x_trial = x + step
        if np.any(geometric):
            x_trial[geometric] = np.clip(
                x_trial[geometric], x[geometric] / STEP_FACTOR, x[geometric] * STEP_FACTOR
            )
        x_trial = np.clip(x_trial, lo, hi)
        r_trial = residuals(x_trial)
        cost_trial = float(r_trial @ r_trial)
        accepted = math.isfinite(cost_trial) and cost_trial <= cost
        grad_small = float(np.max(np.abs(grad))) < GRAD_TOL
        if accepted:
            rel_decrease = (cost - cost_trial) / max(cost, np.finfo(float).tiny)
            x, r, cost = x_trial, r_trial, cost_trial
            if cost_history is not None:
                cost_history.append(cost)
            lam = max(lam / LAMBDA_SHRINK, 1e-12)
            streak = streak + 1 if (rel_decrease < COST_TOL or grad_small) else 0
        else:
            # A rejected trial only retunes the damping; it neither
            # confirms nor refutes stationarity, so the streak holds.
            lam = min(lam * LAMBDA_GROW, LAMBDA_MAX)
            if grad_small:
                streak += 1
        if streak >= CONVERGED_STREAK:
            converged = True
            break

    if not converged:
        message = f"no convergence within {max_iterations} iterations"

    params = _normalize_phase(spec, _full_params(spec, x))
    cov, sigmas, degenerate = _covariance(spec, model, t, y, w, x, cost, free_idx)
    return FitResult(
        model_id=spec.model_id,
        parameters=params,
        sigma=sigmas,
        covariance=cov,
        residual_norm=math.sqrt(cost),
        n_points=int(t.size),
        n_iterations=n_iter,
        converged=converged,
        fit_window=(float(window[0]), float(window[1])),
        degenerate_covariance=degenerate,
        message=message,
    )


def _covariance(spec, model, t, y, w, x, cost, free_idx):
    names = model.params
    n_free = len(free_idx)
    dof = t.size - n_free
    cov_full = np.zeros((len(names), len(names)))
    degenerate = False
    if dof <= 0:
        degenerate = True
        cov_free = np.full((n_free, n_free), np.nan)
    else:
        jac = model.jac(t, _full_params(spec, x))[:, free_idx] * w[:, None]
        normal = jac.T @ jac
        try:
            inv = np.linalg.inv(normal)
            cov_free = (cost / dof) * 0.5 * (inv + inv.T)
            cov_free = _project_psd(cov_free)
        except np.linalg.LinAlgError:
            degenerate = True
            cov_free = np.full((n_free, n_free), np.nan)
    for a, ia in enumerate(free_idx):
        for b, ib in enumerate(free_idx):
            cov_full[ia, ib] = cov_free[a, b]
    sigmas = {}
    for i, name in enumerate(names):
        if name in spec.fixed:
            sigmas[name] = 0.0
        else:
            var = cov_full[i, i]
            sigmas[name] = math.sqrt(var) if var >= 0 else math.nan
    return cov_full, sigmas, degenerate


def _project_psd(cov: np.ndarray) -> np.ndarray:
    """Clip the tiny negative eigenvalues ill-conditioned inversion leaves.

    Works in correlation space so vastly different parameter scales do not
    distort the projection.
    """

    d = np.sqrt(np.diag(cov))
    if np.any(d <= 0) or not np.all(np.isfinite(d)):
        return cov
    corr = cov / np.outer(d, d)
    vals, vecs = np.linalg.eigh(0.5 * (corr + corr.T))
    if np.all(vals >= 0):
        return cov
    corr = (vecs * np.maximum(vals, 0.0)) @ vecs.T
    return corr * np.outer(d, d)


def multistart_least_squares(
    spec: ModelSpec,
    trace: TraceSeries,
    init: dict,
    n_starts: int = 1,
    seed: int = 0,
    relative_spread: float = 0.2,
    **kwargs,
) -> FitResult:
    """Run seeded multi-start fits and keep the lowest residual norm.

    Start 0 uses ``init`` verbatim; subsequent starts perturb every free
    parameter uniformly by up to ``relative_spread`` (clipped to bounds).
    """

    if n_starts < 1:
        raise DomainError(f"n_starts must be >= 1, got {n_starts}")
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(9,)))
    best = None
    for k in range(n_starts):
        trial = dict(init)
        if k > 0:
            for name in spec.free_names:
                lo, hi = spec.bound(name)
                factor = 1.0 + relative_spread * rng.uniform(-1.0, 1.0)
                trial[name] = float(np.clip(init[name] * factor, lo, hi))
        try:
            result = nonlinear_least_squares(spec, trace, trial, **kwargs)
        except DegenerateFitError:
            if best is None and k == n_starts - 1:
                raise
            continue
        if best is None or result.residual_norm < best.residual_norm:
            best = result
    if best is None:
        raise DegenerateFitError("all multi-start fits were degenerate")
    return best


def initial_guess_damped_cosine(
    trace: TraceSeries,
    window: tuple[float, float] | None = None,
    spec: ModelSpec | None = None,
    force_zero_frequency: bool = False,
) -> dict:
    """Automatic starting point for the damped-cosine model.

    The frequency comes from the dominant peak of a zero-padded discrete
    Fourier transform of the windowed, mean-removed data (zero when no
    peak exceeds three times the spectral median); the decay time from a
    linear regression of the log envelope, where the envelope is the
    analytic-signal amplitude for windows holding several oscillation
    cycles and the local maxima of ``|y|`` (peak picking) otherwise;
    amplitude and phase from back-projecting the first sample. The guess
    is clipped into the model bounds.
    """

    if spec is None:
        spec = default_spec("damped_cosine")
    if window is None:
        window = (float(trace.times[0]), float(trace.times[-1]))
    mask = (trace.times >= window[0]) & (trace.times <= window[1])
    t = trace.times[mask]
    y = trace.values[mask]
    if t.size < 8:
        raise GuessFailureError(
            f"only {t.size} points in the guess window; supply an initial guess manually"
        )

    omega = 0.0 if force_zero_frequency else _dominant_angular_frequency(t, y)
    span = float(t[-1] - t[0])
    cycles = omega * span / (2.0 * math.pi)

    if omega > 0 and cycles >= 3.0:
        envelope = np.abs(hilbert(y - np.mean(y)))
        trim = max(3, t.size // 20)  # analytic-signal edge artifacts
        t_env, envelope = t[trim:-trim], envelope[trim:-trim]
    elif omega > 0:
        t_env, envelope = _peak_envelope(t, y)
    else:
        t_env, envelope = t, np.abs(y)
    log_a, log_b = _log_envelope_line(t_env, envelope, _noise_floor(y))
    if log_b < 0:
        t2_guess = -1.0 / log_b
    else:
        t2_guess = 10.0 * span  # flat or rising envelope: park near slow decay

    if omega == 0.0:
        eta0 = float(y[0] * math.exp(t[0] / t2_guess))
        phi = 0.0
    else:
        eta0 = math.exp(log_a)
        env_t0 = math.exp(log_a + log_b * t[0])
        ratio = min(1.0, max(-1.0, y[0] / env_t0 if env_t0 > 0 else 0.0))
        alpha = math.acos(ratio)
        phi = _pick_phase(t, y, eta0, t2_guess, omega, (alpha - omega * t[0], -alpha - omega * t[0]))

    guess = {"eta0": eta0, "t2star": t2_guess, "omega": omega, "phi": phi}
    for name in list(guess):
        lo, hi = spec.bound(name)
        guess[name] = float(min(max(guess[name], lo), hi))
    if "phi" not in spec.fixed:
        guess["phi"] = float(math.remainder(guess["phi"], 2.0 * math.pi))
    return {k: v for k, v in guess.items() if k not in spec.fixed}


def _dominant_angular_frequency(t: np.ndarray, y: np.ndarray, pad_factor: int = 8) -> float:
    dt = float(np.median(np.diff(t)))
    centered = y - np.mean(y)
    n_fft = pad_factor * t.size
    spectrum = np.abs(np.fft.rfft(centered, n=n_fft))
    freqs = np.fft.rfftfreq(n_fft, d=dt)
    # Ignore the quasi-DC region left by imperfect mean removal of the
    # decaying envelope: everything below one cycle per window.
    f_min = 1.0 / (t[-1] - t[0])
    candidates = np.where(freqs >= f_min)[0]
    if candidates.size < 3:
        return 0.0
    mags = spectrum[candidates]
    # A real oscillation shows up as an interior local maximum; a pure
    # decay only slopes down from the low-frequency edge.
    interior = np.where((mags[1:-1] > mags[:-2]) & (mags[1:-1] >= mags[2:]))[0] + 1
    if interior.size == 0:
        return 0.0
    peak_local = int(interior[np.argmax(mags[interior])])
    rounding_scale = 1e-12 * t.size * float(np.max(np.abs(y)))
    floor = max(3.0 * float(np.median(mags)), float(mags[0]), rounding_scale)
    if mags[peak_local] <= floor:
        return 0.0
    idx = candidates[peak_local]
    f_peak = _parabolic_peak(freqs, spectrum, idx)
    return 2.0 * math.pi * f_peak


def _parabolic_peak(freqs: np.ndarray, spectrum: np.ndarray, idx: int) -> float:
    if idx <= 0 or idx >= spectrum.size - 1:
        return float(freqs[idx])
    ym, y0, yp = spectrum[idx - 1], spectrum[idx], spectrum[idx + 1]
    denom = ym - 2.0 * y0 + yp
    if denom == 0:
        return float(freqs[idx])
    shift = 0.5 * (ym - yp) / denom
    shift = min(0.5, max(-0.5, shift))
    return float(freqs[idx] + shift * (freqs[1] - freqs[0]))


def _noise_floor(y: np.ndarray) -> float:
    """Robust per-point noise scale from first differences."""

    diffs = np.abs(np.diff(y))
    return float(np.median(diffs)) / (0.6745 * math.sqrt(2.0))


def _peak_envelope(t: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Envelope samples at local maxima of |y| (plus the first point)."""

    mag = np.abs(y)
    interior = (mag[1:-1] >= mag[:-2]) & (mag[1:-1] >= mag[2:])
    idx = np.concatenate(([0], 1 + np.where(interior)[0]))
    return t[idx], mag[idx]


def _log_envelope_line(t: np.ndarray, envelope: np.ndarray, noise: float = 0.0) -> tuple[float, float]:
    floor = max(0.05 * float(np.max(envelope)), 4.0 * noise)
    # Regress only over the contiguous prefix above the floor; later
    # excursions above it are noise or transform edge artifacts.
    below = envelope <= floor
    cutoff = int(np.argmax(below)) if below.any() else envelope.size
    keep = slice(0, max(cutoff, 2))
    tt, ee = t[keep], envelope[keep]
    if tt.size < 2 or np.any(ee <= 0):
        return math.log(max(float(np.max(envelope)), np.finfo(float).tiny)), 0.0
    slope, intercept = np.polyfit(tt, np.log(ee), 1)
    return float(intercept), float(slope)


def _pick_phase(t, y, eta0, t2, omega, candidates) -> float:
    n = min(8, t.size)
    best_phi, best_sse = candidates[0], math.inf
    for phi in candidates:
        model = eta0 * np.exp(-t[:n] / t2) * np.cos(omega * t[:n] + phi)
        sse = float(np.sum((model - y[:n]) ** 2))
        if sse < best_sse:
            best_phi, best_sse = phi, sse
    return best_phi


def extract_t2star(
    trace: TraceSeries,
    field: float,
    fit_start: float = 0.5e-12,
    min_span_factor: float = 3.0,
    expected_t2star: float | None = None,
    sigma: np.ndarray | None = None,
    n_starts: int = 1,
) -> FitResult:
    """Guess-then-fit pipeline for the damped-cosine dephasing time.

    At zero field the oscillation is non-identifiable, so omega and phi
    are fixed to 0 and a pure exponential is fitted. The trace must cover
    ``min_span_factor`` times the expected decay time (taken from the
    automatic guess when ``expected_t2star`` is not given; pass
    ``min_span_factor=0`` to override the check).
    """

    if field < 0:
        raise DomainError(f"field must be >= 0, got {field}")
    window = (fit_start, float(trace.times[-1]))
    if field == 0.0:
        spec = ModelSpec("damped_cosine", fixed={"omega": 0.0, "phi": 0.0})
    else:
        spec = default_spec("damped_cosine")
    guess = initial_guess_damped_cosine(
        trace, window=window, spec=spec, force_zero_frequency=(field == 0.0)
    )
    span = window[1] - window[0]
    expected = expected_t2star if expected_t2star is not None else guess["t2star"]
    if min_span_factor > 0 and span < min_span_factor * expected:
        raise DomainError(
            f"fit window ({span:.3g} s) covers less than {min_span_factor} x the "
            f"expected decay time ({expected:.3g} s); pass min_span_factor=0 to override"
        )
    if n_starts > 1:
        return multistart_least_squares(
            spec, trace, guess, n_starts=n_starts, window=window, sigma=sigma
        )
    return nonlinear_least_squares(spec, trace, guess, window=window, sigma=sigma)
