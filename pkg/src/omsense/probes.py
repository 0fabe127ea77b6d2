"""Quadrature-noise statistics of classical and entangled probe light.

A single squeezed mode is distributed to M sensor arms through a passive
split network, with the remaining network ports in vacuum; each arm then
passes a lumped loss channel before detection.  Only the phase quadrature
is tracked.  The vacuum (coherent-probe) variance is normalized to 1/2 per
arm, and all spectra are white over the analysis band.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

#: phase-quadrature variance of one vacuum / coherent arm
VACUUM_VARIANCE = 0.5

#: tolerance on the split-network weight normalization
_WEIGHT_TOL = 1e-12


def variance_from_db(squeezing_db: float) -> float:
    """Variance reduction factor for a squeezing level in dB below shot noise.

    0 dB is a coherent probe (factor 1.0); larger values squeeze the phase
    quadrature to 10^(-dB/10) of the vacuum variance.  Anti-squeezing
    (negative input) is outside the model and rejected.
    """
    if squeezing_db < 0:
        raise ValueError("negative squeezing_db: anti-squeezing is not modeled")
    return float(10.0 ** (-squeezing_db / 10.0))


@dataclass(frozen=True)
class SqueezedSource:
    """Squeezed (or coherent, at 0 dB) light source feeding the split network.

    ``carrier_flux`` is the mean photon flux of the carrier in photons/s;
    its square root is the total quadrature displacement available to the
    arms.
    """

    squeezing_db: float
    carrier_flux: float

    def __post_init__(self):
        if self.squeezing_db < 0:
            raise ValueError("squeezing_db must be >= 0")
        if self.carrier_flux < 0:
            raise ValueError("carrier_flux must be >= 0")

    @property
    def variance_factor(self) -> float:
        """V = 10^(-dB/10), in (0, 1]."""
        return variance_from_db(self.squeezing_db)

    @classmethod
    def from_variance(cls, variance_factor: float, carrier_flux: float) -> "SqueezedSource":
        """Build a source from the variance factor V directly."""
        if not 0.0 < variance_factor <= 1.0:
            raise ValueError("variance factor must lie in (0, 1]")
        return cls(-10.0 * np.log10(variance_factor), carrier_flux)


@dataclass(frozen=True)
class SplitNetwork:
    """Passive splitter distributing one input mode over M arms.

    ``weights`` are per-arm intensity fractions t_i (sum to 1);
    ``efficiency`` is the per-arm power transmission of the lumped
    detection-side loss channel.
    """

    weights: tuple
    efficiency: tuple

    def __post_init__(self):
        w = tuple(float(x) for x in self.weights)
        e = tuple(float(x) for x in self.efficiency)
        if len(w) < 1:
            raise ValueError("need at least one arm")
        if len(e) != len(w):
            raise ValueError("weights and efficiency lengths differ")
        if any(x < 0 for x in w):
            raise ValueError("weights must be non-negative")
        if abs(sum(w) - 1.0) > _WEIGHT_TOL:
            raise ValueError("weights must sum to 1 within 1e-12")
        if any(not 0.0 <= x <= 1.0 for x in e):
            raise ValueError("efficiencies must lie in [0, 1]")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "efficiency", e)

    @property
    def arms(self) -> int:
        return len(self.weights)

    @classmethod
    def even(cls, arms: int, efficiency: float = 1.0) -> "SplitNetwork":
        """Even split t_i = 1/M with a common per-arm efficiency."""
        return cls((1.0 / arms,) * arms, (float(efficiency),) * arms)


@dataclass(frozen=True)
class QuadratureNoise:
    """White phase-quadrature covariance of the M probe arms (quad^2/Hz)."""

    covariance: np.ndarray

    def __post_init__(self):
        cov = np.atleast_2d(np.asarray(self.covariance, dtype=float))
        if cov.shape[0] != cov.shape[1]:
            raise ValueError("covariance must be square")
        if not np.allclose(cov, cov.T, rtol=0, atol=1e-12):
            raise ValueError("covariance must be symmetric")
        # PSD check; tiny negative eigenvalues from rounding are tolerated
        if np.linalg.eigvalsh(cov).min() < -1e-12:
            raise ValueError("covariance must be positive semidefinite")
        object.__setattr__(self, "covariance", cov)

    @property
    def arms(self) -> int:
        return self.covariance.shape[0]

    @property
    def per_arm_variance(self) -> np.ndarray:
        return np.diag(self.covariance).copy()


def coherent_noise(arms: int) -> QuadratureNoise:
    """Independent coherent probes: diagonal vacuum covariance."""
    return QuadratureNoise(np.eye(arms) * VACUUM_VARIANCE)


def probe_noise(source: SqueezedSource, net: SplitNetwork) -> QuadratureNoise:
    """Covariance of the arm phase quadratures after split and loss.

    The squeezed mode enters the network with amplitude coefficients
    sqrt(t_i); the unused ports carry vacuum, and each arm mixes with
    vacuum through its loss channel:

        Var_i   = eta_i [ t_i V/2 + (1 - t_i)/2 ] + (1 - eta_i)/2
        Cov_ij  = sqrt(eta_i eta_j t_i t_j) (V - 1)/2      (i != j)

    Coherent probes (V = 1) reduce to the diagonal vacuum case.
    """
    v = source.variance_factor
    t = np.asarray(net.weights)
    eta = np.asarray(net.efficiency)
    amp = np.sqrt(eta * t)
    cov = np.outer(amp, amp) * (v - 1.0) / 2.0
    diag = eta * (t * v / 2.0 + (1.0 - t) / 2.0) + (1.0 - eta) / 2.0
    np.fill_diagonal(cov, diag)
    return QuadratureNoise(cov)


def weighted_sum_variance(noise: QuadratureNoise, w) -> float:
    """Variance of the weighted quadrature sum, sum_ij w_i w_j Cov_ij."""
    w = np.asarray(w, dtype=float)
    if w.shape != (noise.arms,):
        raise ValueError(f"weight vector must have length {noise.arms}")
    if not np.all(np.isfinite(w)):
        raise ValueError("weights must be finite")
    return float(w @ noise.covariance @ w)


def aligned_variance_factors(source: SqueezedSource, net: SplitNetwork) -> np.ndarray:
    """Per-arm variance factors attainable when the squeezed mode is
    redistributed to align with an arbitrary weighting direction.

    For a weight vector w the best passive distribution of the squeezed
    mode gives  w' Sigma w = (1/2) sum_i w_i^2 f_i  with
    f_i = eta_i V + (1 - eta_i); lossless arms return V itself.
    """
    eta = np.asarray(net.efficiency)
    return eta * source.variance_factor + (1.0 - eta)
