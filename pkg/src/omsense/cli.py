"""Command-line interface: config ingestion, sweeps and CSV emission.

Subcommands
-----------
psd         joint output-quadrature PSD, normalized to the joint shot-noise
            level, per probe kind
sweep       metrics (minimum noise, bandwidth, sensitivity, SBP) versus
            probe power or resonance splitting, with a single-sensor
            classical reference
incoherent  energy-estimator traces, their t^(-1/4) resolution fits, the
            entangled/classical time-to-resolution ratio and a
            (splitting, time) resolution contour grid
validate    cross-engine and invariant oracle battery with a
            machine-readable report
defaults    emit a default configuration profile

Exit codes: 0 success, 2 configuration/schema error, 3 numeric failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from omsense import estimation, search, timedomain
from omsense.config import (
    ConfigBundle,
    SchemaError,
    default_config,
    load_config,
    render_config,
    PROFILES,
)
from omsense.estimation import GridTooNarrowError
from omsense.mechanics import susceptibility_sq_mag, thermal_force_psd_onesided
from omsense.probes import aligned_variance_factors, weighted_sum_variance

EXIT_OK = 0
EXIT_SCHEMA = 2
EXIT_NUMERIC = 3

PROBE_CHOICES = ("classical", "entangled", "optimal", "all")


def _fmt(x) -> str:
    return format(float(x), ".17g")


def write_csv(path: Path, header_comments, columns, rows) -> None:
    """RFC-4180-style CSV with '#' comment lines and full-precision floats."""
    lines = [f"# {c}" for c in header_comments]
    lines.append(",".join(columns))
    for row in rows:
        lines.append(",".join(_fmt(v) for v in row))
    path.write_text("\n".join(lines) + "\n")


def read_csv(path) -> tuple:
    """Re-parse a CSV written by ``write_csv``; returns (columns, array)."""
    columns = None
    rows = []
    for line in Path(path).read_text().splitlines():
        if not line or line.startswith("#"):
            continue
        if columns is None:
            columns = line.split(",")
        else:
            rows.append([float(v) for v in line.split(",")])
    if columns is None:
        raise ValueError(f"{path}: no header row")
    return columns, np.asarray(rows)


def _probe_kinds(arg: str):
    return ("classical", "entangled", "optimal") if arg == "all" else (arg,)


# ---------------------------------------------------------------------------
# psd


def _joint_quadrature_psd(cfg_arr):
    """Joint (summed-record) output PSD and the joint shot-noise level."""
    ones = np.ones(cfg_arr.arms)
    if cfg_arr.probe_kind == "optimal":
        v = aligned_variance_factors(cfg_arr.source, cfg_arr.network)
        floor = 0.5 * float(np.sum(v))
    else:
        floor = weighted_sum_variance(cfg_arr.input_covariance(), ones)
    omega = cfg_arr.grid
    psd = np.full_like(omega, floor)
    for ch in cfg_arr.channels:
        gain = ch.alpha_flux * ch.beta**2 * susceptibility_sq_mag(ch.mode, omega)
        psd = psd + gain * thermal_force_psd_onesided(ch.mode, ch.temperature)
    snl = 0.5 * cfg_arr.arms
    return omega, psd / snl


def cmd_psd(bundle: ConfigBundle, args, out: Path) -> list:
    kinds = _probe_kinds(args.probe)
    files = []
    first = bundle.array_config(kinds[0])
    omega = first.grid
    columns = ["freq_hz"]
    data = [omega / (2 * np.pi)]
    for kind in kinds:
        arr = bundle.array_config(kind)
        _, norm = _joint_quadrature_psd(arr)
        columns.append(f"snl_normalized_joint_psd_{kind}")
        data.append(norm)
    path = out / "psd_analytic.csv"
    write_csv(
        path,
        [
            "joint homodyne PSD of the summed records, one-sided",
            "normalized to the joint shot-noise level M*0.5 (coherent probes = 1.0)",
        ],
        columns,
        np.column_stack(data),
    )
    files.append(path)

    if args.engine in ("montecarlo", "both"):
        plan = bundle.sim_plan(args.seed)
        columns = ["freq_hz"]
        data = []
        for kind in kinds:
            if kind == "optimal":
                continue  # frequency-dependent probe: analytic only
            arr = bundle.array_config(kind)
            rec = timedomain.simulate(arr, plan)
            spec = timedomain.welch_psd(timedomain.joint_record(rec, "sum"), plan)
            if not data:
                data.append(spec.freq_hz)
            data.append(spec.psd / (0.5 * arr.arms))
            columns.append(f"snl_normalized_joint_psd_{kind}")
        if len(data) > 1:
            path = out / "psd_montecarlo.csv"
            write_csv(
                path,
                [f"Welch-averaged Monte Carlo joint PSD, seed={args.seed}",
                 "normalized to the joint shot-noise level M*0.5"],
                columns,
                np.column_stack(data),
            )
            files.append(path)
    return files


# ---------------------------------------------------------------------------
# sweep


def _metric_row(bundle, kind, variable, value):
    if variable == "power":
        arr = bundle.array_config(kind, power_uw=value)
    else:
        arr = bundle.array_config(kind, delta_omega_hz=value)
    rep = estimation.sbp(arr)
    return [
        rep.s_min,
        rep.omega_min / (2 * np.pi),
        rep.bandwidth_3db / (2 * np.pi),
        rep.sensitivity,
        rep.sensitivity * rep.bandwidth_3db / (2 * np.pi),
    ]


def cmd_sweep(bundle: ConfigBundle, args, out: Path) -> list:
    sweep = bundle.cfg["sweep"]
    variable = sweep["variable"]
    if sweep["log"]:
        values = np.geomspace(sweep["start"], sweep["stop"], sweep["points"])
    else:
        values = np.linspace(sweep["start"], sweep["stop"], sweep["points"])
    kinds = _probe_kinds(args.probe)
    unit = "power_uw" if variable == "power" else "delta_omega_hz"
    columns = [unit]
    per_kind = ["smin_n2_per_hz", "omega_min_hz", "bandwidth_hz", "sensitivity_hz_per_n2", "sbp_hz2_per_n2"]
    for kind in list(kinds) + ["single_classical"]:
        columns.extend(f"{name}_{kind}" for name in per_kind)

    def one(value):
        row = [value]
        for kind in kinds:
            row.extend(_metric_row(bundle, kind, variable, value))
        # single-sensor classical reference (sensor 1 alone, same power)
        if variable == "power":
            arr1 = bundle.array_config("classical", power_uw=value, single_sensor=True)
        else:
            arr1 = bundle.array_config("classical", delta_omega_hz=value, single_sensor=True)
        rep = estimation.sbp(arr1)
        row.extend([
            rep.s_min,
            rep.omega_min / (2 * np.pi),
            rep.bandwidth_3db / (2 * np.pi),
            rep.sensitivity,
            rep.sensitivity * rep.bandwidth_3db / (2 * np.pi),
        ])
        return row

    with ThreadPoolExecutor(max_workers=args.jobs) as pool:
        rows = list(pool.map(one, values))
    path = out / f"sweep_{variable}.csv"
    write_csv(
        path,
        [f"metric sweep over {unit}; probes: {', '.join(kinds)}",
         "sensitivity = 1/smin; sbp = sensitivity * bandwidth"],
        columns,
        rows,
    )
    return [path]


# ---------------------------------------------------------------------------
# incoherent


def cmd_incoherent(bundle: ConfigBundle, args, out: Path) -> list:
    inc = bundle.cfg["incoherent"]
    times = np.geomspace(inc["t_start_s"], inc["t_stop_s"], inc["t_points"])
    kinds = _probe_kinds(args.probe)
    files = []

    columns = ["t_s"]
    data = [times]
    slopes = {}
    for kind in kinds:
        arr = bundle.array_config(kind)
        trace = search.analytic_energy_trace(arr, times)
        data.extend([trace.e_n, trace.e_n_std, trace.efsr, trace.efsr / np.sqrt(trace.b_eff_hz)])
        columns.extend([
            f"e_n_n2_{kind}",
            f"std_e_n_n2_{kind}",
            f"efsr_n_{kind}",
            f"efsr_n_per_rthz_{kind}",
        ])
        slopes[kind] = search.loglog_slope(times, trace.efsr)
    path = out / "incoherent_trace_analytic.csv"
    write_csv(
        path,
        ["radiometer-model energy estimator over the 3-dB band",
         "efsr_n = sqrt(std E_N); efsr_n_per_rthz = efsr_n/sqrt(B_eff)"],
        columns,
        np.column_stack(data),
    )
    files.append(path)

    if inc["trials"] > 0 and args.engine in ("montecarlo", "both"):
        plan = bundle.sim_plan(args.seed, trials=inc["trials"], duration=float(times[-1]))
        columns = ["t_s"]
        data = [times]
        for kind in kinds:
            if kind == "optimal":
                continue
            arr = bundle.array_config(kind)
            trace = search.montecarlo_energy_trace(arr, plan, times)
            data.extend([trace.e_n, trace.e_n_std, trace.efsr])
            columns.extend([f"e_n_n2_{kind}", f"std_e_n_n2_{kind}", f"efsr_n_{kind}"])
        path = out / "incoherent_trace_montecarlo.csv"
        write_csv(path, [f"Monte Carlo energy estimator, trials={inc['trials']}, seed={args.seed}"],
                  columns, np.column_stack(data))
        files.append(path)

    # summary: resolution-scaling fit and time-to-resolution ratios
    ratio_opt = search.time_to_resolution_ratio(
        bundle.array_config("optimal"), bundle.array_config("classical")
    )
    ratio_ent = search.time_to_resolution_ratio(
        bundle.array_config("entangled"), bundle.array_config("classical")
    )
    columns = ["efsr_slope_" + k for k in kinds]
    columns += ["time_ratio_optimal_classical", "time_ratio_entangled_classical"]
    rows = [[slopes[k] for k in kinds] + [ratio_opt, ratio_ent]]
    path = out / "incoherent_summary.csv"
    write_csv(path, ["log-log slope of EFSR vs t (t^-1/4 law -> -0.25)",
                     "time ratios to reach a common resolution target"], columns, rows)
    files.append(path)

    if inc["contour_delta_hz"]:
        rows = []
        for kind in kinds:
            for dom in inc["contour_delta_hz"]:
                arr = bundle.array_config(kind, delta_omega_hz=float(dom))
                trace = search.analytic_energy_trace(arr, times)
                for t, e in zip(times, trace.efsr):
                    rows.append([float(dom), t, e, e / np.sqrt(trace.b_eff_hz),
                                 float(kinds.index(kind))])
        path = out / "incoherent_contour.csv"
        write_csv(
            path,
            ["resolution contour grid over (splitting, time)",
             f"probe_index: {', '.join(f'{i}={k}' for i, k in enumerate(kinds))}"],
            ["delta_omega_hz", "t_s", "efsr_n", "efsr_n_per_rthz", "probe_index"],
            rows,
        )
        files.append(path)
    return files


# ---------------------------------------------------------------------------
# validate


def _validate_checks(bundle: ConfigBundle, seed: int, beta_mismatch: float):
    """Yield (name, measured, tolerance, passed) for the oracle battery."""
    rng = np.random.default_rng(seed)

    # probe covariance positive semidefiniteness over random parameters
    from omsense.probes import SplitNetwork, SqueezedSource, probe_noise

    worst = 0.0
    for _ in range(200):
        m = int(rng.integers(1, 5))
        t = rng.dirichlet(np.ones(m))
        src = SqueezedSource(rng.uniform(0, 15), 1e14)
        net = SplitNetwork(tuple(t), tuple(rng.uniform(0, 1, m)))
        eig = np.linalg.eigvalsh(probe_noise(src, net).covariance).min()
        worst = min(worst, eig)
    yield "probe_covariance_psd", worst, -1e-12, worst >= -1e-12

    # closed-form minimum vs numeric minimizer (shot-only, classical)
    arr = bundle.array_config("classical")
    wcf = estimation.omega_min_closed_form(arr.channels[0].mode, arr.channels[1].mode)
    _, wnum = estimation.min_force_noise(arr, include_thermal=False)
    rel = abs(wnum - wcf) / wcf
    yield "omega_min_closed_form", rel, 1e-6, rel <= 1e-6

    # quadratic approximation of the minimum vs the numeric minimum
    worst = 0.0
    for dom in (50.0, 500.0, 1500.0):
        for kind in ("classical", "entangled"):
            a = bundle.array_config(kind, delta_omega_hz=dom)
            smin, _ = estimation.min_force_noise(a)
            err = abs(estimation.eq2_min_force_noise(a) / smin - 1.0)
            worst = max(worst, err)
    yield "eq2_vs_numeric_min", worst, 0.05, worst <= 0.05

    # Monte Carlo vs analytic: shot floor and transduced thermal power
    plan = bundle.sim_plan(seed, duration=8.0)
    arr = bundle.array_config("entangled")
    if beta_mismatch:
        arr = _scale_beta(arr, 1.0 + beta_mismatch)
    rec = timedomain.simulate(arr, plan)
    spec = timedomain.welch_psd(rec, plan)
    ana = bundle.array_config("entangled")
    from omsense.mechanics import output_psd

    cov = ana.input_covariance().covariance
    err_floor = 0.0
    err_power = 0.0
    for i, ch in enumerate(ana.channels):
        model = output_psd(ch, cov[i, i], spec.omega).psd
        meas = spec.psd[i]
        sel = model < 1.2 * cov[i, i]  # off-resonant floor bins
        err_floor = max(err_floor, abs(np.mean(meas[sel]) / cov[i, i] - 1.0))
        err_power = max(
            err_power,
            abs(np.trapezoid(meas - cov[i, i], spec.freq_hz)
                / np.trapezoid(model - cov[i, i], spec.freq_hz) - 1.0),
        )
    yield "mc_shot_floor", err_floor, 0.02, err_floor <= 0.02
    yield "mc_transduced_power", err_power, 0.05, err_power <= 0.05

    # equipartition of the simulated modes
    from scipy.constants import k as kB

    var = timedomain.position_variance(rec)
    worst = 0.0
    for ch, v in zip(arr.channels, var):
        target = kB * ch.temperature / (ch.mode.mass * ch.mode.omega0**2)
        worst = max(worst, abs(v / target - 1.0))
    yield "equipartition", worst, 0.03, worst <= 0.03

    # radiometer law vs Monte Carlo ensemble
    arr = bundle.array_config("entangled")
    plan = bundle.sim_plan(seed + 1, trials=64, duration=2.0)
    times = np.array([0.5, 1.0, 2.0])
    mc = search.montecarlo_energy_trace(arr, plan, times)
    an = search.analytic_energy_trace(arr, times, band=mc.band)
    rel = float(np.max(np.abs(mc.e_n_std / an.e_n_std - 1.0)))
    yield "radiometer_vs_mc_std", rel, 0.30, rel <= 0.30


def _scale_beta(arr, scale):
    """Copy of ``arr`` with every channel's transduction scaled (test hook)."""
    from dataclasses import replace

    channels = tuple(replace(ch, beta=ch.beta * scale) for ch in arr.channels)
    return estimation.ArrayConfig(channels, arr.source, arr.network, arr.probe_kind, arr.grid)


def cmd_validate(bundle: ConfigBundle, args, out: Path) -> int:
    report = []
    ok = True
    for name, measured, tol, passed in _validate_checks(bundle, args.seed, args.inject_beta_mismatch):
        report.append({
            "check": name,
            "measured": float(measured),
            "tolerance": float(tol),
            "pass": bool(passed),
        })
        ok = bool(ok and passed)
    text = json.dumps({"pass": ok, "checks": report}, indent=2)
    print(text)
    if out is not None:
        (out / "validate_report.json").write_text(text + "\n")
    return EXIT_OK if ok else EXIT_NUMERIC


# ---------------------------------------------------------------------------
# entry point


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="omsense", description=__doc__,
                                 formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = ap.add_subparsers(dest="command", required=True)
    for name in ("psd", "sweep", "incoherent", "validate"):
        p = sub.add_parser(name)
        p.add_argument("--config", type=Path, default=None, help="YAML run configuration")
        p.add_argument("--out", type=Path, default=Path("."), help="output directory")
        p.add_argument("--seed", type=int, default=12345)
        p.add_argument("--probe", choices=PROBE_CHOICES, default="all")
        p.add_argument("--engine", choices=("analytic", "montecarlo", "both"), default="analytic")
        p.add_argument("--jobs", type=int, default=1)
        if name == "validate":
            p.add_argument("--inject-beta-mismatch", type=float, default=0.0,
                           help="scale the Monte Carlo transduction by (1+x); testing hook")
    p = sub.add_parser("defaults")
    p.add_argument("--profile", choices=PROFILES, default="shot")
    p.add_argument("--out", type=Path, default=None, help="write to file instead of stdout")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "defaults":
        text = render_config(default_config(args.profile))
        if args.out is None:
            print(text, end="")
        else:
            args.out.parent.mkdir(parents=True, exist_ok=True)
            args.out.write_text(text)
        return EXIT_OK

    try:
        cfg = load_config(args.config) if args.config else default_config("shot")
    except (SchemaError, OSError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_SCHEMA
    bundle = ConfigBundle(cfg)
    out = args.out
    out.mkdir(parents=True, exist_ok=True)

    try:
        if args.command == "psd":
            files = cmd_psd(bundle, args, out)
        elif args.command == "sweep":
            files = cmd_sweep(bundle, args, out)
        elif args.command == "incoherent":
            files = cmd_incoherent(bundle, args, out)
        elif args.command == "validate":
            return cmd_validate(bundle, args, out)
        else:  # pragma: no cover
            raise AssertionError(args.command)
    except (GridTooNarrowError, ValueError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    for f in files:
        print(f)
    return EXIT_OK


if __name__ == "__main__":
    raise SystemExit(main())
