"""Mechanical response, optomechanical transduction and sensor output spectra.

Each sensor is a damped harmonic mode transduced onto the phase quadrature
of its probe arm:

    Y_out(omega) = Y_in(omega) + alpha beta chi(omega) [F_th + F_sig]

with chi(omega) = (1/m_eff) / (Omega^2 - omega^2 + i omega Gamma).

Spectral conventions
--------------------
Thermal Langevin force: ``thermal_force_psd`` returns the symmetrized
(double-sided) density 2 Gamma m_eff kB T, the value whose delta-correlated
drive reproduces the equipartition position variance kB T / (m_eff Omega^2).
All one-sided spectra assembled in this package (integral over positive
frequencies equals the variance) therefore use twice that value, exposed as
``thermal_force_psd_onesided``.  Quadrature spectra keep the vacuum at 1/2
per arm; the relative scale between the two sectors is absorbed by the
transduction calibration.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Union

import numpy as np
from scipy.constants import k as BOLTZMANN

from omsense.spectra import SpectrumGrid


@dataclass(frozen=True)
class MechanicalMode:
    """Damped harmonic oscillator: resonance and damping in rad/s, mass in kg."""

    omega0: float
    gamma: float
    mass: float

    def __post_init__(self):
        if self.omega0 <= 0:
            raise ValueError("omega0 must be positive")
        if self.gamma <= 0:
            raise ValueError("gamma must be positive")
        if self.mass <= 0:
            raise ValueError("mass must be positive")

    @property
    def quality_factor(self) -> float:
        return self.omega0 / self.gamma

    @property
    def omega_damped(self) -> float:
        """Underdamped oscillation frequency sqrt(Omega^2 - Gamma^2/4)."""
        return float(np.sqrt(self.omega0**2 - self.gamma**2 / 4.0))


@dataclass(frozen=True)
class ToneSignal:
    """Coherent force tone: angular frequency (rad/s) and amplitude (N)."""

    frequency: float
    amplitude: float

    def __post_init__(self):
        if self.frequency <= 0:
            raise ValueError("tone frequency must be positive")
        if self.amplitude < 0:
            raise ValueError("tone amplitude must be >= 0")


@dataclass(frozen=True)
class BandSignal:
    """Incoherent force: flat one-sided PSD (N^2/Hz) over an angular band."""

    band: tuple
    psd: float

    def __post_init__(self):
        lo, hi = self.band
        if not 0 < lo < hi:
            raise ValueError("band must satisfy 0 < lo < hi")
        if self.psd < 0:
            raise ValueError("signal PSD must be >= 0")


Signal = Union[ToneSignal, BandSignal]


@dataclass(frozen=True)
class SensorChannel:
    """One optomechanical sensor: mode, transduction, probe arm and bath."""

    mode: MechanicalMode
    beta: float  # displacement-to-quadrature transduction, 1/m
    alpha_flux: float  # probe photon flux at the sensor, photons/s
    temperature: float = 295.0  # bath temperature, K
    signal: Optional[Signal] = None

    def __post_init__(self):
        if self.beta <= 0:
            raise ValueError("beta must be positive")
        if self.alpha_flux < 0:
            raise ValueError("alpha_flux must be >= 0")
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")

    @property
    def alpha(self) -> float:
        """Probe quadrature displacement amplitude, sqrt(photon flux)."""
        return float(np.sqrt(self.alpha_flux))


def susceptibility(mode: MechanicalMode, omega) -> np.ndarray:
    """Complex mechanical susceptibility chi(omega) in m/N.

    The resonant denominator is evaluated in the factored form
    (Omega - omega)(Omega + omega) to avoid cancellation near resonance.
    Conjugate symmetry chi(-omega) = chi(omega)* holds for signed input.
    """
    omega = np.asarray(omega, dtype=float)
    o0, g, m = mode.omega0, mode.gamma, mode.mass
    return (1.0 / m) / ((o0 - omega) * (o0 + omega) + 1j * omega * g)


def susceptibility_sq_mag(mode: MechanicalMode, omega) -> np.ndarray:
    """|chi(omega)|^2 in m^2/N^2, without forming the complex value."""
    omega = np.asarray(omega, dtype=float)
    o0, g, m = mode.omega0, mode.gamma, mode.mass
    d2 = ((o0 - omega) * (o0 + omega)) ** 2 + (omega * g) ** 2
    return 1.0 / (m * m * d2)


def derive_beta(G: float, kappa: float) -> float:
    """Transduction from cavity pull G (rad/s per m) and linewidth kappa:
    beta = 4 sqrt(2) G / kappa."""
    if G <= 0 or kappa <= 0:
        raise ValueError("G and kappa must be positive")
    return 4.0 * np.sqrt(2.0) * G / kappa


def thermal_force_psd(mode: MechanicalMode, temperature: float) -> float:
    """Langevin force spectral density 2 Gamma m_eff kB T (symmetrized, N^2/Hz).

    See the module docstring: one-sided compositions must use
    ``thermal_force_psd_onesided``.
    """
    if temperature < 0:
        raise ValueError("temperature must be >= 0")
    return 2.0 * mode.gamma * mode.mass * BOLTZMANN * temperature


def thermal_force_psd_onesided(mode: MechanicalMode, temperature: float) -> float:
    """One-sided thermal force density, 2x the symmetrized value."""
    return 2.0 * thermal_force_psd(mode, temperature)


def output_psd(ch: SensorChannel, noise_in: float, omega_grid) -> SpectrumGrid:
    """One-sided PSD of the sensor output quadrature on ``omega_grid``.

    ``noise_in`` is the (white) phase-quadrature variance of the probe arm.
    A coherent tone deposits amplitude^2/2 of transduced force power into
    the single grid bin containing it, so plotted tone heights depend on the
    bin width.
    """
    omega = np.asarray(omega_grid, dtype=float)
    if omega.ndim != 1 or omega.size < 2:
        raise ValueError("omega_grid must be a 1-D array with >= 2 points")
    if np.any(np.diff(omega) <= 0) or omega[0] <= 0:
        raise ValueError("omega_grid must be strictly increasing and positive")

    gain = ch.alpha_flux * ch.beta**2 * susceptibility_sq_mag(ch.mode, omega)
    s_force = np.full_like(omega, thermal_force_psd_onesided(ch.mode, ch.temperature))

    if isinstance(ch.signal, BandSignal):
        lo, hi = ch.signal.band
        if lo < omega[0] or hi > omega[-1]:
            raise ValueError("signal band lies outside the grid")
        s_force[(omega >= lo) & (omega <= hi)] += ch.signal.psd
    elif isinstance(ch.signal, ToneSignal):
        if not omega[0] <= ch.signal.frequency <= omega[-1]:
            raise ValueError("tone frequency lies outside the grid")
        i = int(np.argmin(np.abs(omega - ch.signal.frequency)))
        bin_hz = (omega[min(i + 1, omega.size - 1)] - omega[max(i - 1, 0)]) / 2.0 / (2.0 * np.pi)
        s_force[i] += ch.signal.amplitude**2 / 2.0 / bin_hz

    return SpectrumGrid(omega, noise_in + gain * s_force, units="quad^2/Hz")
