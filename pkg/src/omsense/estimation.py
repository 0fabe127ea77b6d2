"""Joint force estimation across sensors and all derived spectral metrics.

The joint estimator rescales each output quadrature by the magnitude of its
force transduction, 1/(alpha_i beta_i |chi_i(omega)|), and averages the M
sensors with weight 1/M.  Because all noise sources are mutually independent
apart from the engineered (frequency-flat, real) probe cross-covariance, the
joint force-noise PSD is

    S_F(omega) = (1/M^2) [ w(omega)' Sigma_in w(omega) + sum_i S_th,i ]

with w_i(omega) = 1/(alpha_i beta_i |chi_i(omega)|) and S_th,i the one-sided
thermal force density of sensor i.  Coherent-tone signal terms are excluded:
this is a noise budget.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Tuple

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from omsense.mechanics import (
    MechanicalMode,
    SensorChannel,
    susceptibility_sq_mag,
    thermal_force_psd_onesided,
)
from omsense.probes import (
    SqueezedSource,
    SplitNetwork,
    QuadratureNoise,
    VACUUM_VARIANCE,
    aligned_variance_factors,
    coherent_noise,
    probe_noise,
    weighted_sum_variance,
)
from omsense.spectra import SpectrumGrid

PROBE_KINDS = ("classical", "entangled", "optimal")

#: grid margin required beyond the outermost resonance, in units of max Gamma
GRID_MARGIN_GAMMAS = 10.0

#: relative tolerance of the 1-D minimum/root refinement in omega
OMEGA_REL_TOL = 1e-9


class GridTooNarrowError(RuntimeError):
    """The 3-dB level is not crossed inside the configured grid."""


@dataclass(frozen=True)
class ArrayConfig:
    """Sensor array + probe description + analysis grid.

    ``probe_kind`` selects how the input covariance enters the joint
    estimator: independent coherent arms ("classical"), the split squeezed
    mode ("entangled"), or the per-frequency aligned entangled bound
    ("optimal").
    """

    channels: tuple
    source: SqueezedSource
    network: SplitNetwork
    probe_kind: str
    grid: np.ndarray

    def __post_init__(self):
        channels = tuple(self.channels)
        if len(channels) < 1:
            raise ValueError("need at least one sensor channel")
        if self.probe_kind not in PROBE_KINDS:
            raise ValueError(f"probe_kind must be one of {PROBE_KINDS}")
        if self.network.arms != len(channels):
            raise ValueError("network arm count must match channel count")
        grid = np.asarray(self.grid, dtype=float)
        if grid.ndim != 1 or grid.size < 2 or np.any(np.diff(grid) <= 0):
            raise ValueError("grid must be a strictly increasing 1-D array")
        gmax = max(ch.mode.gamma for ch in channels)
        o_lo = min(ch.mode.omega0 for ch in channels)
        o_hi = max(ch.mode.omega0 for ch in channels)
        if grid[0] > o_lo - GRID_MARGIN_GAMMAS * gmax or grid[-1] < o_hi + GRID_MARGIN_GAMMAS * gmax:
            raise ValueError("grid must span all resonances with margin >= 10 max(Gamma)")
        object.__setattr__(self, "channels", channels)
        object.__setattr__(self, "grid", grid)

    @property
    def arms(self) -> int:
        return len(self.channels)

    def input_covariance(self) -> QuadratureNoise:
        if self.probe_kind == "classical":
            return coherent_noise(self.arms)
        return probe_noise(self.source, self.network)

    def with_probe_kind(self, kind: str) -> "ArrayConfig":
        return ArrayConfig(self.channels, self.source, self.network, kind, self.grid)


@dataclass(frozen=True)
class MetricsReport:
    """Spectral metrics of one configuration.

    ``sbp`` is stored as exactly sensitivity * bandwidth_3db; ``sbp_approx``
    is the closed-form estimate beta alpha_c / (omega_min m sqrt(S0)) *
    sqrt(1/S_min) evaluated alongside for comparison.
    """

    s_min: float
    omega_min: float
    bandwidth_3db: float
    sensitivity: float
    sbp: float
    sbp_approx: float
    regime: str

    def __post_init__(self):
        if self.s_min <= 0:
            raise ValueError("s_min must be positive")
        if self.bandwidth_3db < 0:
            raise ValueError("bandwidth must be >= 0")


# ---------------------------------------------------------------------------
# joint force-noise spectrum


def _force_weights(cfg: ArrayConfig, omega) -> np.ndarray:
    """Rescaling weights w_i = 1/(alpha_i beta_i |chi_i|), shape (M, len(omega))."""
    omega = np.atleast_1d(np.asarray(omega, dtype=float))
    rows = []
    for ch in cfg.channels:
        if ch.alpha_flux <= 0:
            raise ValueError("force estimator undefined for alpha = 0")
        rows.append(1.0 / (ch.alpha * ch.beta * np.sqrt(susceptibility_sq_mag(ch.mode, omega))))
    return np.vstack(rows)


def _thermal_sum(cfg: ArrayConfig) -> float:
    return sum(thermal_force_psd_onesided(ch.mode, ch.temperature) for ch in cfg.channels)


def force_noise_at(cfg: ArrayConfig, omega, include_thermal: bool = True) -> np.ndarray:
    """Joint force-noise PSD (N^2/Hz) at arbitrary angular frequencies."""
    w = _force_weights(cfg, omega)
    m = cfg.arms
    if cfg.probe_kind == "optimal":
        v = aligned_variance_factors(cfg.source, cfg.network)
        imp = VACUUM_VARIANCE * np.einsum("i,ik->k", v, w**2)
    else:
        cov = cfg.input_covariance().covariance
        imp = np.einsum("ik,ij,jk->k", w, cov, w)
    out = imp / m**2
    if include_thermal:
        out = out + _thermal_sum(cfg) / m**2
    return out if np.ndim(omega) else float(out[0])


def force_noise_psd(cfg: ArrayConfig) -> SpectrumGrid:
    """Joint force-noise PSD sampled on the configuration grid (noise only)."""
    return SpectrumGrid(cfg.grid, force_noise_at(cfg, cfg.grid), units="N^2/Hz")


# ---------------------------------------------------------------------------
# metrics


def omega_min_closed_form(mode1: MechanicalMode, mode2: MechanicalMode) -> float:
    """Closed-form location of the shot-noise-limited joint minimum,

        omega_min = (1/2) sqrt(2 (Omega1^2 + Omega2^2) - Gamma1^2 - Gamma2^2),

    the exact minimizer of |chi_1|^-2 + |chi_2|^-2 for equal arm fluxes.
    Approaches (Omega1 + Omega2)/2 when |Delta| and Gamma are small.
    """
    radicand = 2.0 * (mode1.omega0**2 + mode2.omega0**2) - mode1.gamma**2 - mode2.gamma**2
    if radicand <= 0:
        raise ValueError("non-positive radicand: overdamped parameter set")
    return 0.5 * float(np.sqrt(radicand))


def min_force_noise(cfg: ArrayConfig, include_thermal: bool = True) -> Tuple[float, float]:
    """Global minimum of the joint force-noise PSD, ``(s_min, omega_min)``.

    A dense grid scan locates the basin; Brent refinement (parabolic
    interpolation) then converges to relative 1e-9 in omega, so landscapes
    with multiple local minima are handled by the scan.
    """
    s = force_noise_at(cfg, cfg.grid, include_thermal)
    i = int(np.argmin(s))
    lo = cfg.grid[max(i - 1, 0)]
    hi = cfg.grid[min(i + 1, cfg.grid.size - 1)]
    res = minimize_scalar(
        lambda w: force_noise_at(cfg, w, include_thermal),
        bounds=(lo, hi),
        method="bounded",
        options={"xatol": OMEGA_REL_TOL * cfg.grid[i]},
    )
    if res.fun <= s[i]:
        return float(res.fun), float(res.x)
    return float(s[i]), float(cfg.grid[i])


def three_db_band(cfg: ArrayConfig) -> Tuple[float, float]:
    """Edges of the contiguous band around omega_min where S <= 2 S_min.

    The crossings are bracketed on the grid and polished with Brent root
    finding.  A missing crossing inside the grid raises
    ``GridTooNarrowError``.
    """
    s_min, w_min = min_force_noise(cfg)
    level = 2.0 * s_min
    omega = cfg.grid
    s = force_noise_at(cfg, omega)
    i0 = int(np.searchsorted(omega, w_min))
    i0 = min(max(i0, 0), omega.size - 1)

    def f(w):
        return force_noise_at(cfg, w) - level

    # outward to the right
    j = i0
    while j < omega.size and s[j] <= level:
        j += 1
    if j == omega.size:
        raise GridTooNarrowError("no upper 3-dB crossing inside the grid")
    hi = brentq(f, omega[j - 1] if j > 0 else w_min, omega[j], xtol=OMEGA_REL_TOL * w_min)

    # outward to the left
    k = i0
    while k >= 0 and s[k] <= level:
        k -= 1
    if k < 0:
        raise GridTooNarrowError("no lower 3-dB crossing inside the grid")
    lo = brentq(f, omega[k], omega[k + 1] if k + 1 < omega.size else w_min, xtol=OMEGA_REL_TOL * w_min)
    return float(lo), float(hi)


def bandwidth_3db(cfg: ArrayConfig) -> float:
    """Width of the 3-dB band, omega_hi - omega_lo (rad/s)."""
    lo, hi = three_db_band(cfg)
    return hi - lo


def _joint_quadrature_floor(cfg: ArrayConfig) -> float:
    """S0 entering the SBP closed form: V_eff/2 of the symmetric joint mode."""
    if cfg.probe_kind == "classical":
        return VACUUM_VARIANCE
    ones = np.ones(cfg.arms)
    if cfg.probe_kind == "optimal":
        v = aligned_variance_factors(cfg.source, cfg.network)
        return float(VACUUM_VARIANCE * np.mean(v))
    joint = weighted_sum_variance(cfg.input_covariance(), ones)
    return joint / cfg.arms  # per-arm share of the symmetric-mode variance


def sbp(cfg: ArrayConfig) -> MetricsReport:
    """Full metrics report: minimum noise, bandwidth, sensitivity and SBP."""
    s_min, w_min = min_force_noise(cfg)
    bw = bandwidth_3db(cfg)
    sens = 1.0 / s_min
    alpha_c = float(np.sqrt(sum(ch.alpha_flux for ch in cfg.channels)))
    beta = float(np.exp(np.mean([np.log(ch.beta) for ch in cfg.channels])))
    mass = float(np.mean([ch.mode.mass for ch in cfg.channels]))
    s0 = _joint_quadrature_floor(cfg)
    approx = beta * alpha_c / (w_min * mass * np.sqrt(s0)) * np.sqrt(1.0 / s_min)
    thermal = _thermal_sum(cfg) / cfg.arms**2
    regime = "thermal-dominant" if thermal >= s_min - thermal else "imprecision-dominant"
    return MetricsReport(
        s_min=s_min,
        omega_min=w_min,
        bandwidth_3db=bw,
        sensitivity=sens,
        sbp=sens * bw,
        sbp_approx=float(approx),
        regime=regime,
    )


def eq2_min_force_noise(cfg: ArrayConfig) -> float:
    """Closed-form estimate of the two-sensor minimum force-noise PSD,

        S_min ~ m^2/(beta^2 alpha_c^2) Obar^2 (Gbar^2 + dOmega^2) S0 + S_th,

    valid for |dOmega|, Gamma << Omega.  S0 is the joint quadrature floor of
    the configured probe and S_th the one-sided joint thermal density.
    """
    if cfg.arms != 2:
        raise ValueError("closed form applies to two-sensor arrays")
    ch1, ch2 = cfg.channels
    obar = (ch1.mode.omega0 + ch2.mode.omega0) / 2.0
    gbar2 = (ch1.mode.gamma**2 + ch2.mode.gamma**2) / 2.0
    dom = ch1.mode.omega0 - ch2.mode.omega0
    alpha_c2 = sum(ch.alpha_flux for ch in cfg.channels)
    beta = float(np.exp(np.mean([np.log(ch.beta) for ch in cfg.channels])))
    mass = float(np.mean([ch.mode.mass for ch in cfg.channels]))
    s0 = _joint_quadrature_floor(cfg)
    imp = mass**2 / (beta**2 * alpha_c2) * obar**2 * (gbar2 + dom**2) * s0
    return imp + _thermal_sum(cfg) / 4.0


def optimal_probe_bound(cfg: ArrayConfig) -> SpectrumGrid:
    """Force-noise PSD with the per-frequency aligned entangled bound.

    At every omega the squeezed mode is taken to be distributed so that the
    squeezing aligns with the rescaling direction w(omega); the imprecision
    quadratic form then collapses to (1/2) sum_i w_i^2 (eta_i V + 1 - eta_i)
    (= V times the classical form for lossless arms) while thermal terms are
    unchanged.
    """
    opt = cfg.with_probe_kind("optimal")
    return force_noise_psd(opt)


def calibrate_beta(target_floor: float, ch: SensorChannel, omega_ref: float) -> float:
    """Back-solve the transduction so the single-arm shot-limited force floor
    (1/2) / (alpha^2 beta^2 |chi(omega_ref)|^2) equals ``target_floor``."""
    if target_floor <= 0:
        raise ValueError("target_floor must be positive")
    if ch.alpha_flux <= 0:
        raise ValueError("calibration needs alpha > 0")
    chi2 = float(susceptibility_sq_mag(ch.mode, omega_ref))
    beta2 = VACUUM_VARIANCE / (ch.alpha_flux * target_floor * chi2)
    return float(np.sqrt(beta2))


def sensitivity_improvement_ratios(variance_factor: float) -> dict:
    """The candidate entangled-vs-classical improvement ratios implied by a
    joint noise-floor reduction to V: the floor itself, the amplitude ratio,
    and the shot-limited PSD sensitivity ratio.  No single headline number is
    endorsed; callers report all three."""
    v = float(variance_factor)
    if not 0 < v <= 1:
        raise ValueError("variance factor must lie in (0, 1]")
    return {
        "noise_floor_ratio": v,
        "amplitude_ratio": float(np.sqrt(v)),
        "sensitivity_ratio_shot_limited": 1.0 / v,
    }
