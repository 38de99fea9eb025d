"""Command-line interface.

Subcommands: simulate, fit, sweep-field, sweep-viscosity, epr-fit,
extrapolate, sensitivity, demod. Every run writes a JSON report embedding
the fully resolved configuration; trace data goes to CSV and figures to
SVG next to the report. Exit codes: 0 success, 1 validation/IO error,
2 fit non-convergence (report still written).
"""

from __future__ import annotations

import argparse
import math
import sys
from pathlib import Path

import numpy as np

from . import plotting, traceio
from .dynamics import TraceSeries, simulate_trace
from .errors import SpinfidError
from .physics import CODATA2018
from .fitting import (
    ModelSpec,
    default_spec,
    extract_t2star,
    initial_guess_damped_cosine,
    nonlinear_least_squares,
)
from .modulation import RawShotPair, demodulate
from .pipelines import (
    RelaxationSeries,
    detection_limit,
    extrapolate_t1,
    field_sweep,
    glycerol_viscosity,
    viscosity_sweep,
)

PS = 1e-12


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # exit 1, not argparse's default 2
        self.print_usage(sys.stderr)
        print(f"ERROR[usage]: {message}", file=sys.stderr)
        raise SystemExit(1)


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", type=Path, help="JSON run configuration")
    parser.add_argument("--seed", type=int, help="override the rng seed")
    parser.add_argument("--out", type=Path, default=Path("."), help="output directory")
    parser.add_argument("--stem", help="output file stem (default: subcommand name)")
    parser.add_argument("--svg", action=argparse.BooleanOptionalAction, default=True,
                        help="emit SVG figures (default on)")
    parser.add_argument("--fit-start", type=float, help="fit window start in ps (default 0.5)")
    parser.add_argument("--field", type=float, help="magnetic field in tesla")
    parser.add_argument("--viscosity", type=float, help="solvent viscosity in mPa*s")
    parser.add_argument("--glycerol-fraction", type=float,
                        help="set viscosity from a glycerol mass fraction")
    parser.add_argument("--threads", type=int, default=1, help="ensemble worker threads")


def build_parser() -> _Parser:
    parser = _Parser(prog="spinfid", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="synthesize a trace from a configuration")
    _add_common(p)

    p = sub.add_parser("fit", help="fit a damped-cosine model to a trace file")
    _add_common(p)
    p.add_argument("--trace", type=Path, required=True, help="input trace CSV")
    p.add_argument("--model", default="damped_cosine",
                   choices=["damped_cosine", "exponential"])

    p = sub.add_parser("sweep-field", help="simulate/fit a field series and extract g")
    _add_common(p)
    p.add_argument("--fields", help="comma-separated fields in tesla")

    p = sub.add_parser("sweep-viscosity", help="simulate/fit a viscosity series")
    _add_common(p)
    p.add_argument("--viscosities", help="comma-separated viscosities in mPa*s")
    p.add_argument("--glycerol-fractions", help="comma-separated glycerol mass fractions")

    p = sub.add_parser("epr-fit", help="fit inversion-recovery or echo-decay traces")
    _add_common(p)
    p.add_argument("--trace", type=Path, required=True, help="input trace CSV")
    p.add_argument("--model", required=True, choices=["inversion_recovery", "hahn_echo"])
    p.add_argument("--fit-stretch", action="store_true",
                   help="fit the echo stretch exponent instead of fixing it to 1")

    p = sub.add_parser("extrapolate", help="extrapolate a relaxation series in temperature")
    _add_common(p)
    p.add_argument("--series", type=Path, required=True, help="relaxation CSV")
    p.add_argument("--kind", default="T1", choices=["T1", "Tm"])
    p.add_argument("--fit-range", default="12:20", help="temperature window K, lo:hi")
    p.add_argument("--target", type=float, required=True, help="target temperature in K")
    p.add_argument("--mode", default="loglog", choices=["loglog", "linear"])

    p = sub.add_parser("sensitivity", help="estimate the concentration detection limit")
    _add_common(p)
    p.add_argument("--threshold", type=float, default=3.0, help="detection threshold SNR")
    p.add_argument("--pump-scale", type=float, default=1.0,
                   help="linear pump-energy scaling of the reference SNR")

    p = sub.add_parser("demod", help="demodulate a raw shot file into a trace")
    _add_common(p)
    p.add_argument("--shots", type=Path, required=True, help="input shots CSV")
    return parser


def _resolve(args) -> tuple[dict, list[Path]]:
    """defaults <- config file <- CLI flags; returns (config, input files)."""

    config = traceio.default_config_dict()
    inputs: list[Path] = []
    if args.config:
        config = traceio.merge_config(config, traceio.load_config_file(args.config))
        inputs.append(args.config)
    exp = config["experiment"]
    if args.seed is not None:
        exp["rng_seed"] = args.seed
    if args.field is not None:
        exp["field_tesla"] = args.field
    if args.viscosity is not None:
        exp["viscosity_mpas"] = args.viscosity
    if args.glycerol_fraction is not None:
        exp["viscosity_mpas"] = glycerol_viscosity(
            args.glycerol_fraction, exp["temperature_k"]
        )
    if args.fit_start is not None:
        config["fit"]["fit_start_ps"] = args.fit_start
    return config, inputs


def _floats(text: str) -> list[float]:
    return [float(x) for x in text.split(",") if x.strip()]


def _outputs(args) -> tuple[Path, str]:
    out = args.out
    out.mkdir(parents=True, exist_ok=True)
    stem = args.stem if args.stem else args.command
    return out, stem


def _finish_fit(args, config, inputs, fit, trace, extra_payload, panel="trace") -> int:
    out, stem = _outputs(args)
    payload = {"fit": traceio.fit_result_payload(fit)}
    payload.update(extra_payload)
    report = traceio.build_report(args.command, config, payload, inputs)
    traceio.write_report(report, out / f"{stem}.json")
    if args.svg:
        plotting.plot_trace(trace, out / f"{stem}.{panel}.svg", fit=fit)
    if not fit.converged:
        print(f"ERROR[fit]: {fit.message or 'fit did not converge'}", file=sys.stderr)
        return 2
    return 0


def cmd_simulate(args) -> int:
    config, inputs = _resolve(args)
    trace = simulate_trace(traceio.resolve_experiment(config), n_threads=args.threads)
    out, stem = _outputs(args)
    trace_path = out / f"{stem}.trace.csv"
    traceio.save_trace(trace, trace_path)
    payload = {
        "trace_file": trace_path.name,
        "n_points": len(trace),
        "time_start_ps": trace.times[0] / PS,
        "time_stop_ps": trace.times[-1] / PS,
        "signal_rms": float(np.sqrt(np.mean(trace.values**2))),
    }
    report = traceio.build_report(args.command, config, payload, inputs)
    traceio.write_report(report, out / f"{stem}.json")
    if args.svg:
        plotting.plot_trace(trace, out / f"{stem}.trace.svg")
    return 0


def cmd_fit(args) -> int:
    config, inputs = _resolve(args)
    trace = traceio.load_trace(args.trace)
    inputs.append(args.trace)
    fit_start = config["fit"]["fit_start_ps"] * PS
    field = config["experiment"]["field_tesla"]
    if args.model == "damped_cosine":
        fit = extract_t2star(trace, field=field, fit_start=fit_start,
                             n_starts=int(config["fit"]["n_starts"]))
        extra = {
            "t2star_ps": fit.parameters["t2star"] / PS,
            "t2star_sigma_ps": fit.sigma["t2star"] / PS,
            "omega_rad_per_s": fit.parameters["omega"],
            "omega_sigma_rad_per_s": fit.sigma["omega"],
            "frequency_ghz": fit.parameters["omega"] / (2 * math.pi) / 1e9,
        }
    else:
        spec = default_spec("exponential")
        window = (fit_start, float(trace.times[-1]))
        guess = initial_guess_damped_cosine(trace, window=window, force_zero_frequency=True)
        init = {"amplitude": guess["eta0"], "tau": guess["t2star"]}
        fit = nonlinear_least_squares(spec, trace, init, window=window)
        extra = {"tau_ps": fit.parameters["tau"] / PS, "tau_sigma_ps": fit.sigma["tau"] / PS}
    extra["trace_file"] = str(args.trace)
    return _finish_fit(args, config, inputs, fit, trace, extra)


def cmd_sweep_field(args) -> int:
    config, inputs = _resolve(args)
    fields = _floats(args.fields) if args.fields else [float(b) for b in config["sweep"]["fields_tesla"]]
    config["sweep"]["fields_tesla"] = fields
    exp_cfg = dict(config, experiment=dict(config["experiment"]))
    exp_cfg["experiment"]["time_stop_ps"] = config["sweep"]["time_stop_ps"]
    base = traceio.resolve_experiment(exp_cfg)
    sweep = field_sweep(
        base, fields,
        fit_start=config["fit"]["fit_start_ps"] * PS,
        n_starts=int(config["fit"]["n_starts"]),
        n_threads=args.threads,
    )
    out, stem = _outputs(args)
    payload = {
        "points": [
            {"field_tesla": b, "fit": traceio.fit_result_payload(f)}
            for b, f in zip(sweep.axis_values, sweep.fits)
        ],
        "g": sweep.derived["g"],
        "g_sigma": sweep.derived["g_sigma"],
    }
    report = traceio.build_report(args.command, config, payload, inputs)
    traceio.write_report(report, out / f"{stem}.json")
    if args.svg:
        labels = [f"{b:g} T" for b in sweep.axis_values]
        plotting.plot_trace_overlay(sweep.traces, labels, out / f"{stem}.traces.svg",
                                    fits=sweep.fits)
        omegas = [f.parameters["omega"] for f in sweep.fits]
        sigmas = [f.sigma["omega"] if math.isfinite(f.sigma["omega"]) else 0.0 for f in sweep.fits]
        slope = sweep.derived["g"] * CODATA2018.bohr_magneton / CODATA2018.reduced_planck
        line_b = np.array([0.0, max(sweep.axis_values)])
        plotting.plot_regression(
            sweep.axis_values, omegas, sigmas, line_b, slope * line_b,
            "field (T)", "precession rate (rad/s)", out / f"{stem}.regression.svg",
        )
    return 0


def cmd_sweep_viscosity(args) -> int:
    config, inputs = _resolve(args)
    if args.viscosities:
        viscosities = _floats(args.viscosities)
    elif args.glycerol_fractions:
        temp = config["experiment"]["temperature_k"]
        viscosities = [glycerol_viscosity(f, temp) for f in _floats(args.glycerol_fractions)]
    elif config["sweep"]["viscosities_mpas"]:
        viscosities = [float(v) for v in config["sweep"]["viscosities_mpas"]]
    else:
        temp = config["experiment"]["temperature_k"]
        viscosities = [
            glycerol_viscosity(f, temp) for f in config["sweep"]["glycerol_fractions"]
        ]
    config["sweep"]["viscosities_mpas"] = viscosities
    exp_cfg = dict(config, experiment=dict(config["experiment"]))
    exp_cfg["experiment"]["time_stop_ps"] = config["sweep"]["time_stop_ps"]
    base = traceio.resolve_experiment(exp_cfg)
    sweep = viscosity_sweep(
        base, viscosities,
        fit_start=config["fit"]["fit_start_ps"] * PS,
        n_starts=int(config["fit"]["n_starts"]),
        n_threads=args.threads,
    )
    out, stem = _outputs(args)
    payload = {
        "points": [
            {"viscosity_mpas": v, "fit": traceio.fit_result_payload(f)}
            for v, f in zip(sweep.axis_values, sweep.fits)
        ],
        "t2_slope_ps_per_mpas": sweep.derived["t2_slope_s_per_mpas"] / PS,
        "t2_intercept_ps": sweep.derived["t2_intercept_s"] / PS,
        "t2_slope_sigma_ps_per_mpas": sweep.derived["t2_slope_sigma"] / PS,
        "t2_intercept_sigma_ps": sweep.derived["t2_intercept_sigma"] / PS,
    }
    report = traceio.build_report(args.command, config, payload, inputs)
    traceio.write_report(report, out / f"{stem}.json")
    if args.svg:
        labels = [f"{v:.2f} mPa s" for v in sweep.axis_values]
        plotting.plot_trace_overlay(sweep.traces, labels, out / f"{stem}.traces.svg",
                                    fits=sweep.fits)
        t2s = [f.parameters["t2star"] / PS for f in sweep.fits]
        sig = [f.sigma["t2star"] / PS if math.isfinite(f.sigma["t2star"]) else 0.0
               for f in sweep.fits]
        line_x = np.array([min(sweep.axis_values), max(sweep.axis_values)])
        line_y = (sweep.derived["t2_intercept_s"] + sweep.derived["t2_slope_s_per_mpas"] * line_x) / PS
        plotting.plot_regression(
            sweep.axis_values, t2s, sig, line_x, line_y,
            "viscosity (mPa s)", "dephasing time (ps)", out / f"{stem}.regression.svg",
        )
    return 0


def _epr_initial_guess(model_id: str, trace: TraceSeries) -> dict:
    t, y = trace.times, trace.values
    span = float(t[-1] - t[0])
    if model_id == "inversion_recovery":
        i_inf = float(np.mean(y[max(-3, -len(y)):]))
        amplitude = i_inf - float(y[0])
        target = i_inf - amplitude / math.e
        idx = int(np.argmin(np.abs(y - target)))
        t1 = float(t[idx]) if t[idx] > 0 else span / 3.0
        return {"i_inf": i_inf, "amplitude": amplitude, "t1": t1}
    i0 = float(y[0])
    target = i0 / math.e
    idx = int(np.argmin(np.abs(y - target)))
    tm = float(t[idx]) if t[idx] > 0 else span / 3.0
    return {"i0": i0, "tm": tm}


def cmd_epr_fit(args) -> int:
    config, inputs = _resolve(args)
    trace = traceio.load_trace(args.trace)
    inputs.append(args.trace)
    if args.model == "hahn_echo" and args.fit_stretch:
        spec = ModelSpec("hahn_echo")
        init = _epr_initial_guess("hahn_echo", trace)
        init["stretch"] = 1.0
    else:
        spec = default_spec(args.model)
        init = _epr_initial_guess(args.model, trace)
    fit = nonlinear_least_squares(spec, trace, init)
    constant = "t1" if args.model == "inversion_recovery" else "tm"
    extra = {
        "kind": "T1" if args.model == "inversion_recovery" else "Tm",
        "time_constant_ps": fit.parameters[constant] / PS,
        "time_constant_sigma_ps": fit.sigma[constant] / PS,
        "trace_file": str(args.trace),
    }
    return _finish_fit(args, config, inputs, fit, trace, extra, panel="decay")


def cmd_extrapolate(args) -> int:
    config, inputs = _resolve(args)
    temps, times, sigmas = traceio.load_relaxation(args.series)
    inputs.append(args.series)
    series = RelaxationSeries(temperatures=temps, times=times, sigmas=sigmas, kind=args.kind)
    lo, _, hi = args.fit_range.partition(":")
    result = extrapolate_t1(series, (float(lo), float(hi)), args.target, mode=args.mode)
    out, stem = _outputs(args)
    payload = {
        "kind": args.kind,
        "mode": result.mode,
        "mode_is_comparison_only": result.mode == "linear",
        "target_temperature_k": result.target_temperature,
        "predicted_time_ps": result.predicted_time / PS,
        "predicted_sigma_ps": result.sigma / PS,
        "slope": result.slope,
        "intercept": result.intercept,
        "n_points_used": result.n_points_used,
        "fit_range_k": list(result.fit_range),
        "series_file": str(args.series),
    }
    report = traceio.build_report(args.command, config, payload, inputs)
    traceio.write_report(report, out / f"{stem}.json")
    if args.svg:
        line_temps = np.geomspace(min(temps.min(), args.target), max(temps.max(), args.target), 64)
        if result.mode == "loglog":
            line_times = np.exp(result.intercept + result.slope * np.log(line_temps))
        else:
            line_times = result.intercept + result.slope * line_temps
        plotting.plot_relaxation_loglog(
            temps, times, sigmas, line_temps, line_times,
            args.target, result.predicted_time,
            out / f"{stem}.relaxation.svg",
        )
    return 0


def cmd_sensitivity(args) -> int:
    config, inputs = _resolve(args)
    experiment = traceio.resolve_experiment(config)
    trace = simulate_trace(experiment, n_threads=args.threads)
    fit = extract_t2star(
        trace, field=experiment.field.magnitude, fit_start=config["fit"]["fit_start_ps"] * PS
    )
    rms_residual = fit.residual_norm / math.sqrt(fit.n_points)
    snr = abs(fit.parameters["eta0"]) / rms_residual
    limit = detection_limit((experiment.concentration, snr), args.threshold,
                            pump_energy_scale=args.pump_scale)
    out, stem = _outputs(args)
    payload = {
        "reference_concentration_molar": experiment.concentration,
        "snr_measured": snr,
        "threshold_snr": args.threshold,
        "pump_energy_scale": args.pump_scale,
        "detection_limit_molar": limit,
        "fit": traceio.fit_result_payload(fit),
    }
    report = traceio.build_report(args.command, config, payload, inputs)
    traceio.write_report(report, out / f"{stem}.json")
    if args.svg:
        plotting.plot_trace(trace, out / f"{stem}.trace.svg", fit=fit)
    return 0


def cmd_demod(args) -> int:
    config, inputs = _resolve(args)
    records = traceio.load_shots(args.shots)
    inputs.append(args.shots)
    groups: dict[float, list[RawShotPair]] = {}
    for t, left, right in records:
        groups.setdefault(t, []).append(RawShotPair(left_shot=left, right_shot=right))
    times = np.array(sorted(groups))
    values = np.array([demodulate(groups[t]) for t in times])
    trace = TraceSeries(times=times, values=values, metadata={"source": str(args.shots)})
    out, stem = _outputs(args)
    trace_path = out / f"{stem}.trace.csv"
    traceio.save_trace(trace, trace_path)
    pairs = [len(groups[t]) for t in times]
    payload = {
        "trace_file": trace_path.name,
        "n_points": len(trace),
        "pairs_per_point_min": int(min(pairs)),
        "pairs_per_point_max": int(max(pairs)),
    }
    report = traceio.build_report(args.command, config, payload, inputs)
    traceio.write_report(report, out / f"{stem}.json")
    if args.svg:
        plotting.plot_trace(trace, out / f"{stem}.trace.svg")
    return 0


_HANDLERS = {
    "simulate": cmd_simulate,
    "fit": cmd_fit,
    "sweep-field": cmd_sweep_field,
    "sweep-viscosity": cmd_sweep_viscosity,
    "epr-fit": cmd_epr_fit,
    "extrapolate": cmd_extrapolate,
    "sensitivity": cmd_sensitivity,
    "demod": cmd_demod,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return _HANDLERS[args.command](args)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else 0
    except SpinfidError as exc:
        print(f"ERROR[{exc.category}]: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"ERROR[io]: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
