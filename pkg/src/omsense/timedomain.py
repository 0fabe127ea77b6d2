"""Monte Carlo homodyne records and spectral estimation.

The simulation runs in a demodulated (rotating) frame centred between the
mechanical resonances.  Each mode's slowly varying complex amplitude obeys
an Ornstein-Uhlenbeck equation whose one-step update is exact in
distribution (complex AR(1) with the matrix-exponential decay factor and the
exact process-noise variance), so the step size is limited only by the
demodulated bandwidth, not by Gamma/Omega ~ 3e-5.  The stationary amplitude
variance is pinned to equipartition, 2 kB T / (m Omega^2) for |A|^2, which
reproduces the one-sided thermal spectra of the analytic engine.

Shot noise is white over the simulated band and drawn per step from the
M-variate arm covariance; the demodulated complex record has twice the
one-sided lab density, and ``welch_psd`` converts back so that a coherent
probe shows a flat level of 1/2.

Seeding uses numpy's counter-based Philox generator keyed by
``(plan.seed, trial)``: trials are independent substreams and a given
(plan, trial) pair is bit-reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.constants import k as BOLTZMANN
from scipy.signal import lfilter, welch

from omsense.estimation import ArrayConfig
from omsense.mechanics import BandSignal, ToneSignal, susceptibility
from omsense.spectra import SpectrumGrid


@dataclass(frozen=True)
class SimPlan:
    """Sampling, duration, seeding and Welch parameters for one simulation."""

    sample_rate: float  # Hz, of the demodulated record
    duration: float  # s
    seed: int
    segment_length: int = 1024
    overlap: float = 0.5
    trials: int = 1
    demod_center: Optional[float] = None  # rad/s; None = mean resonance

    def __post_init__(self):
        if self.sample_rate <= 0 or self.duration <= 0:
            raise ValueError("sample_rate and duration must be positive")
        if not (self.seed >= 0 and int(self.seed) == self.seed):
            raise ValueError("seed must be a non-negative integer")
        n = self.segment_length
        if n < 2 or (n & (n - 1)) != 0:
            raise ValueError("segment_length must be a power of two")
        if not 0.0 <= self.overlap < 1.0:
            raise ValueError("overlap must lie in [0, 1)")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")

    @property
    def samples(self) -> int:
        return int(round(self.duration * self.sample_rate))


@dataclass(frozen=True)
class Record:
    """Demodulated per-sensor streams plus simulation metadata.

    ``streams`` has shape (n_streams, n_samples); homodyne records are
    dimensionless complex envelopes at ``demod_center``, force-rescaled
    records carry newtons.  ``positions`` (when present) holds the
    mechanical amplitude envelopes in metres.
    """

    streams: np.ndarray
    sample_rate: float
    demod_center: float
    channels: tuple = ()
    positions: Optional[np.ndarray] = None
    units: str = "quad"

    def __post_init__(self):
        streams = np.atleast_2d(np.asarray(self.streams))
        if not np.all(np.isfinite(streams.view(float))):
            raise ValueError("record contains non-finite samples")
        object.__setattr__(self, "streams", streams)

    @property
    def n_samples(self) -> int:
        return self.streams.shape[1]

    @property
    def time(self) -> np.ndarray:
        return np.arange(self.n_samples) / self.sample_rate


def _rng(seed: int, trial: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(entropy=[int(seed), int(trial)])))


def _complex_normal(rng, scale2, shape):
    """Circular complex Gaussian with E|z|^2 = scale2."""
    s = np.sqrt(scale2 / 2.0)
    return s * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))


def simulate(cfg: ArrayConfig, plan: SimPlan, trial: int = 0) -> Record:
    """Generate one homodyne record for every sensor of ``cfg``.

    Output per sensor: shot-noise envelope plus alpha beta times the
    mechanical amplitude envelope (thermal motion, injected tones and
    band-limited incoherent forces in exact steady state).
    """
    fs = plan.sample_rate
    n = plan.samples
    dt = 1.0 / fs
    t = np.arange(n) * dt
    center = plan.demod_center
    if center is None:
        center = float(np.mean([ch.mode.omega0 for ch in cfg.channels]))

    offsets = np.array([ch.mode.omega_damped - center for ch in cfg.channels])
    if fs <= 4.0 * np.max(np.abs(offsets)) / (2.0 * np.pi):
        raise ValueError("sample_rate must exceed 4x the largest demodulated resonance offset")

    rng = _rng(plan.seed, trial)

    # correlated shot noise: per-quadrature covariance Sigma * fs so the
    # one-sided lab density comes out flat at Sigma
    cov = cfg.input_covariance().covariance
    try:
        chol = np.linalg.cholesky(cov)
    except np.linalg.LinAlgError:
        chol = np.linalg.cholesky(cov + 1e-15 * np.eye(cov.shape[0]))
    white = rng.standard_normal((cov.shape[0], n)) + 1j * rng.standard_normal((cov.shape[0], n))
    shot = np.sqrt(fs) * (chol @ white)

    positions = np.zeros((len(cfg.channels), n), dtype=complex)
    nu = np.fft.fftfreq(n, dt)  # Hz offsets of the FFT bins
    for i, ch in enumerate(cfg.channels):
        mode = ch.mode
        if mode.gamma <= 0:
            raise ValueError("unstable mode: gamma must be positive")
        var_a = 2.0 * BOLTZMANN * ch.temperature / (mode.mass * mode.omega0**2)
        if var_a > 0:
            phi = np.exp((1j * offsets[i] - mode.gamma / 2.0) * dt)
            eps = _complex_normal(rng, var_a * (1.0 - np.exp(-mode.gamma * dt)), n)
            eps[0] = _complex_normal(rng, var_a, 1)[0]  # stationary start
            positions[i] = lfilter([1.0], [1.0, -phi], eps)
        sig = ch.signal
        if isinstance(sig, ToneSignal):
            resp = sig.amplitude * susceptibility(mode, sig.frequency)
            positions[i] += resp * np.exp(1j * (sig.frequency - center) * t)
        elif isinstance(sig, BandSignal):
            lo, hi = sig.band
            lab = center + 2.0 * np.pi * nu
            mask = (lab >= lo) & (lab <= hi)
            if mask.any():
                spec = np.zeros(n, dtype=complex)
                # bin variance for a flat two-sided envelope density 2*psd
                spec[mask] = _complex_normal(rng, 2.0 * sig.psd * fs * n, int(mask.sum()))
                spec[mask] *= susceptibility(mode, lab[mask])
                positions[i] += np.fft.ifft(spec)

    gains = np.array([ch.alpha * ch.beta for ch in cfg.channels])
    streams = shot + gains[:, None] * positions
    return Record(streams, fs, center, channels=cfg.channels, positions=positions)


def position_variance(rec: Record) -> np.ndarray:
    """Per-sensor position variance <x^2> = <|A|^2>/2 from the envelopes."""
    if rec.positions is None:
        raise ValueError("record carries no mechanical envelopes")
    return np.mean(np.abs(rec.positions) ** 2, axis=1) / 2.0


def welch_psd(rec: Record, plan: SimPlan) -> SpectrumGrid:
    """Averaged, Hann-windowed one-sided PSD of every stream in ``rec``.

    Demodulated complex records are mapped back to the lab frame:
    S_lab(center + nu) = S_envelope(nu) / 2.  The density scaling satisfies
    Parseval (integral = variance) for white input.
    """
    n = rec.n_samples
    if n < plan.segment_length:
        raise ValueError("record shorter than one Welch segment")
    noverlap = int(plan.overlap * plan.segment_length)
    if rec.demod_center > 0:
        f, p = welch(
            rec.streams,
            fs=rec.sample_rate,
            window="hann",
            nperseg=plan.segment_length,
            noverlap=noverlap,
            detrend=False,
            return_onesided=False,
            scaling="density",
            axis=-1,
        )
        order = np.argsort(f)
        omega = rec.demod_center + 2.0 * np.pi * f[order]
        psd = p[..., order] / 2.0
    else:
        f, p = welch(
            rec.streams.real,
            fs=rec.sample_rate,
            window="hann",
            nperseg=plan.segment_length,
            noverlap=noverlap,
            detrend=False,
            scaling="density",
            axis=-1,
        )
        omega = 2.0 * np.pi * f
        psd = p
    psd = psd[0] if psd.shape[0] == 1 else psd
    return SpectrumGrid(omega, psd, units=f"{rec.units}^2/Hz")


def joint_record(rec: Record, mode: str = "sum") -> Record:
    """Combine the per-sensor streams into one joint stream.

    ``"sum"`` adds the homodyne records.  ``"average-force"`` rescales each
    stream by 1/(alpha_i beta_i |chi_i(omega)|) in the frequency domain and
    averages with weight 1/M, yielding a force record in newtons.
    """
    if rec.streams.shape[0] < 2:
        raise ValueError("joint record needs at least two sensors")
    if mode == "sum":
        return Record(
            rec.streams.sum(axis=0, keepdims=True),
            rec.sample_rate,
            rec.demod_center,
            channels=rec.channels,
            units=rec.units,
        )
    if mode != "average-force":
        raise ValueError("mode must be 'sum' or 'average-force'")
    if len(rec.channels) != rec.streams.shape[0]:
        raise ValueError("force rescaling needs channel metadata on the record")
    n = rec.n_samples
    lab = rec.demod_center + 2.0 * np.pi * np.fft.fftfreq(n, 1.0 / rec.sample_rate)
    acc = np.zeros(n, dtype=complex)
    for ch, y in zip(rec.channels, rec.streams):
        gain = ch.alpha * ch.beta * np.abs(susceptibility(ch.mode, lab))
        acc += np.fft.ifft(np.fft.fft(y) / gain)
    acc /= len(rec.channels)
    return Record(
        acc[None, :],
        rec.sample_rate,
        rec.demod_center,
        channels=rec.channels,
        units="N",
    )


def export_record_csv(rec: Record, path) -> None:
    """Raw-record debug export: time plus I/Q columns per stream."""
    cols = [rec.time]
    header = ["time_s"]
    for i, y in enumerate(rec.streams, start=1):
        cols.extend([y.real, y.imag])
        header.extend([f"y{i}_i_{rec.units}", f"y{i}_q_{rec.units}"])
    data = np.column_stack(cols)
    np.savetxt(path, data, delimiter=",", header=",".join(header), comments="")
