"""Incoherent-force detection statistics.

The performance metric is the band-integrated noise force energy

    E_N(t) = (1/t) int_0^t F_N(tau)^2 dtau

accumulated over the 3-dB band of the joint force-noise spectrum.  Its mean
is the band integral of S_F and its ensemble standard deviation follows the
radiometer law  std(E_N) = E_bar / sqrt(B_eff t)  with the noise-equivalent
bandwidth  B_eff = (int S df)^2 / int S^2 df  of the actual band shape.
The equivalent force spectral resolution is the square root of that standard
deviation and therefore falls as t^(-1/4).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from omsense.estimation import ArrayConfig, force_noise_at, three_db_band
from omsense.timedomain import Record, SimPlan, joint_record, simulate

#: points used to resolve the band shape in the analytic integrals
_BAND_POINTS = 4097


@dataclass(frozen=True)
class EnergyTrace:
    """Noise-energy estimator statistics on a (log-spaced) time axis.

    ``e_n`` is the ensemble-mean estimate of E_N(t) (N^2), ``e_n_std`` its
    standard deviation, and ``efsr`` = sqrt(e_n_std) the equivalent force
    spectral resolution in newtons; ``efsr / sqrt(b_eff_hz)`` gives the
    band-normalized N/sqrt(Hz) variant.  ``e_bar`` is the analytic in-band
    mean energy and ``band`` the angular band used.
    """

    times: np.ndarray
    e_n: np.ndarray
    e_n_std: np.ndarray
    efsr: np.ndarray
    band: Tuple[float, float]
    b_eff_hz: float
    e_bar: float
    source: str = "analytic"

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        if times.ndim != 1 or np.any(np.diff(times) <= 0) or times[0] <= 0:
            raise ValueError("times must be positive and strictly increasing")
        if self.band[1] <= self.band[0]:
            raise ValueError("empty band")
        object.__setattr__(self, "times", times)


def band_integrals(cfg: ArrayConfig, band: Tuple[float, float]) -> Tuple[float, float]:
    """(E_bar, B_eff_hz): in-band mean energy and noise-equivalent bandwidth."""
    lo, hi = band
    if hi <= lo:
        raise ValueError("empty band")
    omega = np.linspace(lo, hi, _BAND_POINTS)
    s = force_noise_at(cfg, omega)
    f = omega / (2.0 * np.pi)
    e_bar = float(np.trapezoid(s, f))
    s2 = float(np.trapezoid(s**2, f))
    return e_bar, e_bar**2 / s2


def analytic_energy_trace(cfg: ArrayConfig, times, band=None) -> EnergyTrace:
    """Radiometer-model energy trace over the 3-dB band (or a given band)."""
    if band is None:
        band = three_db_band(cfg)
    e_bar, b_eff = band_integrals(cfg, band)
    times = np.asarray(times, dtype=float)
    std = e_bar / np.sqrt(b_eff * times)
    return EnergyTrace(
        times=times,
        e_n=np.full_like(times, e_bar),
        e_n_std=std,
        efsr=np.sqrt(std),
        band=(float(band[0]), float(band[1])),
        b_eff_hz=b_eff,
        e_bar=e_bar,
        source="analytic",
    )


def _bandpass_energy(rec: Record, band: Tuple[float, float]) -> np.ndarray:
    """Running mean of the band-passed squared force record, E_N(t_k) series."""
    y = rec.streams[0]
    n = y.size
    lab = rec.demod_center + 2.0 * np.pi * np.fft.fftfreq(n, 1.0 / rec.sample_rate)
    mask = (lab >= band[0]) & (lab <= band[1])
    if not mask.any():
        raise ValueError("band does not overlap the simulated spectrum")
    yb = np.fft.ifft(np.fft.fft(y) * mask)
    # lab-frame instantaneous F^2 averages to |envelope|^2 / 2
    return np.cumsum(np.abs(yb) ** 2) / 2.0 / np.arange(1, n + 1)


def montecarlo_energy_trace(cfg: ArrayConfig, plan: SimPlan, times, band=None) -> EnergyTrace:
    """Ensemble energy trace from force-rescaled joint Monte Carlo records.

    Trials use per-trial RNG substreams and are reduced in trial order, so a
    given (cfg, plan) is deterministic.
    """
    if band is None:
        band = three_db_band(cfg)
    times = np.asarray(times, dtype=float)
    if times[-1] > plan.duration:
        raise ValueError("requested times exceed the simulated duration")
    idx = np.maximum((times * plan.sample_rate).astype(int) - 1, 0)
    samples = np.empty((plan.trials, times.size))
    for trial in range(plan.trials):
        rec = simulate(cfg, plan, trial)
        force = joint_record(rec, "average-force")
        samples[trial] = _bandpass_energy(force, band)[idx]
    e_bar, b_eff = band_integrals(cfg, band)
    std = samples.std(axis=0, ddof=1) if plan.trials > 1 else np.full(times.size, np.nan)
    return EnergyTrace(
        times=times,
        e_n=samples.mean(axis=0),
        e_n_std=std,
        efsr=np.sqrt(std),
        band=(float(band[0]), float(band[1])),
        b_eff_hz=b_eff,
        e_bar=e_bar,
        source="montecarlo",
    )


def energy_estimator(cfg: ArrayConfig, times, band=None, plan: SimPlan = None) -> EnergyTrace:
    """Band-integrated noise-energy estimator over the 3-dB band.

    With a ``plan`` the estimate comes from the Monte Carlo ensemble;
    otherwise from the radiometer model.
    """
    if plan is None:
        return analytic_energy_trace(cfg, times, band)
    return montecarlo_energy_trace(cfg, plan, times, band)


def efsr(trace: EnergyTrace) -> np.ndarray:
    """Equivalent force spectral resolution sqrt(std(E_N(t))) per time point."""
    return np.sqrt(trace.e_n_std)


def detectability(trace: EnergyTrace, signal_energy: float) -> np.ndarray:
    """True wherever the in-band signal energy exceeds the noise-power
    uncertainty std(E_N(t))."""
    if signal_energy < 0:
        raise ValueError("signal energy must be >= 0")
    return signal_energy > trace.e_n_std


def time_to_detection(trace: EnergyTrace, signal_energy: float) -> float:
    """Radiometer-model time at which std(E_N(t)) falls to the signal energy."""
    if signal_energy <= 0:
        raise ValueError("signal energy must be positive")
    return (trace.e_bar / signal_energy) ** 2 / trace.b_eff_hz


def time_to_resolution_ratio(cfg_num: ArrayConfig, cfg_den: ArrayConfig) -> float:
    """Ratio of integration times needed to reach a common resolution target.

    In the radiometer model t(delta) = E_bar^2 / (B_eff delta^4), so the
    ratio is (E_num/E_den)^2 * (B_den/B_num), independent of the target.
    """
    e_n, b_n = band_integrals(cfg_num, three_db_band(cfg_num))
    e_d, b_d = band_integrals(cfg_den, three_db_band(cfg_den))
    return (e_n / e_d) ** 2 * (b_d / b_n)


def loglog_slope(x, y) -> float:
    """Least-squares slope of log y versus log x."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if np.any(x <= 0) or np.any(y <= 0):
        raise ValueError("log-log fit needs positive data")
    return float(np.polyfit(np.log(x), np.log(y), 1)[0])
