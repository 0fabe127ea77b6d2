"""Frequency grids and sampled one-sided power spectral densities."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class SpectrumGrid:
    """One-sided PSD samples on a strictly increasing angular-frequency axis.

    ``psd`` may be one-dimensional, or two-dimensional with one row per
    stream/sensor.  ``units`` tags the vertical axis, e.g. ``"quad^2/Hz"``
    or ``"N^2/Hz"``.
    """

    omega: np.ndarray
    psd: np.ndarray
    units: str = "quad^2/Hz"

    def __post_init__(self):
        omega = np.asarray(self.omega, dtype=float)
        psd = np.asarray(self.psd, dtype=float)
        if omega.ndim != 1 or omega.size < 2:
            raise ValueError("omega axis must be a 1-D array with >= 2 points")
        if np.any(np.diff(omega) <= 0):
            raise ValueError("omega axis must be strictly increasing")
        if psd.shape[-1] != omega.size:
            raise ValueError("psd and omega lengths do not match")
        object.__setattr__(self, "omega", omega)
        object.__setattr__(self, "psd", psd)

    @property
    def freq_hz(self) -> np.ndarray:
        return self.omega / (2.0 * np.pi)

    def band_power(self, lo: float, hi: float) -> float:
        """Integrate the PSD over [lo, hi] (rad/s); returns variance units."""
        if self.psd.ndim != 1:
            raise ValueError("band_power expects a single-stream spectrum")
        if hi <= lo:
            raise ValueError("empty band")
        mask = (self.omega >= lo) & (self.omega <= hi)
        if mask.sum() < 2:
            raise ValueError("band contains fewer than two grid points")
        return float(np.trapezoid(self.psd[mask], self.freq_hz[mask]))


def make_omega_grid(center: float, halfspan: float, points: int = 8192) -> np.ndarray:
    """Uniform angular-frequency axis centred on ``center`` (rad/s)."""
    if center <= 0 or halfspan <= 0:
        raise ValueError("center and halfspan must be positive")
    if halfspan >= center:
        raise ValueError("grid would extend to non-positive frequencies")
    if points < 2:
        raise ValueError("need at least two grid points")
    return np.linspace(center - halfspan, center + halfspan, int(points))
