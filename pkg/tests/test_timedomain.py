from dataclasses import replace

import numpy as np
import pytest
from scipy.constants import k as kB

from omsense.estimation import ArrayConfig, force_noise_at
from omsense.mechanics import MechanicalMode, SensorChannel, ToneSignal, output_psd
from omsense.timedomain import (
    Record,
    SimPlan,
    export_record_csv,
    joint_record,
    position_variance,
    simulate,
    welch_psd,
)

PLAN = SimPlan(sample_rate=16384.0, duration=16.0, seed=99, segment_length=1024)


def _zero_temp(cfg):
    chans = tuple(replace(ch, temperature=0.0) for ch in cfg.channels)
    return ArrayConfig(chans, cfg.source, cfg.network, cfg.probe_kind, cfg.grid)


class TestSimPlan:
    def test_segment_power_of_two(self):
        with pytest.raises(ValueError):
            SimPlan(1e4, 1.0, 0, segment_length=1000)

    def test_overlap_range(self):
        with pytest.raises(ValueError):
            SimPlan(1e4, 1.0, 0, overlap=1.0)

    def test_seed_nonnegative(self):
        with pytest.raises(ValueError):
            SimPlan(1e4, 1.0, -1)


class TestSimulate:
    def test_deterministic_under_seed(self, shot_bundle):
        cfg = shot_bundle.array_config("entangled", delta_omega_hz=1422.0)
        plan = SimPlan(16384.0, 1.0, seed=5)
        a = simulate(cfg, plan)
        b = simulate(cfg, plan)
        np.testing.assert_array_equal(a.streams, b.streams)
        c = simulate(cfg, plan, trial=1)
        assert not np.array_equal(a.streams, c.streams)

    def test_pure_shot_noise_floor(self, shot_bundle):
        cfg = _zero_temp(shot_bundle.array_config("classical", delta_omega_hz=1422.0))
        rec = simulate(cfg, PLAN)
        spec = welch_psd(rec, PLAN)
        np.testing.assert_allclose(spec.psd.mean(axis=1), 0.5, rtol=0.02)

    def test_equipartition(self, shot_bundle):
        cfg = shot_bundle.array_config("entangled", delta_omega_hz=1422.0)
        rec = simulate(cfg, PLAN)
        var = position_variance(rec)
        for ch, v in zip(cfg.channels, var):
            target = kB * ch.temperature / (ch.mode.mass * ch.mode.omega0**2)
            assert v == pytest.approx(target, rel=0.03)

    def test_welch_matches_analytic_output_psd(self, shot_bundle):
        # full configuration: per-sensor Welch PSD against the analytic model
        cfg = shot_bundle.array_config("entangled", delta_omega_hz=1422.0)
        rec = simulate(cfg, PLAN)
        spec = welch_psd(rec, PLAN)
        cov = cfg.input_covariance().covariance
        center = np.mean([ch.mode.omega0 for ch in cfg.channels])
        band = np.abs(spec.omega - center) < 2 * np.pi * 3000.0
        n_avg = 2 * PLAN.samples // PLAN.segment_length - 1
        for i, ch in enumerate(cfg.channels):
            model = output_psd(ch, cov[i, i], spec.omega).psd
            rel = spec.psd[i][band] / model[band] - 1
            assert np.sqrt(np.mean(rel**2)) < 0.05
            # per-bin statistical agreement on 95% of bins
            frac = np.mean(np.abs(rel) <= 3.0 / np.sqrt(n_avg))
            assert frac >= 0.95

    def test_sample_rate_guard(self, shot_bundle):
        cfg = shot_bundle.array_config("classical", delta_omega_hz=2641.0)
        plan = SimPlan(sample_rate=4096.0, duration=1.0, seed=0)
        with pytest.raises(ValueError):
            simulate(cfg, plan)


class TestWelch:
    def test_white_noise_parseval(self):
        rng = np.random.default_rng(1)
        fs = 2048.0
        rec = Record(rng.standard_normal(int(fs) * 64)[None, :].astype(complex), fs, 0.0)
        plan = SimPlan(fs, 64.0, seed=0, segment_length=512)
        spec = welch_psd(rec, plan)
        assert np.mean(spec.psd) == pytest.approx(2.0 / fs, rel=0.02)
        assert spec.band_power(spec.omega[0], spec.omega[-1]) == pytest.approx(1.0, rel=0.02)

    def test_sine_tone_power(self):
        fs = 4096.0
        t = np.arange(int(fs) * 16) / fs
        amp = 0.7
        rec = Record((amp * np.sin(2 * np.pi * 321.0 * t)).astype(complex)[None, :], fs, 0.0)
        plan = SimPlan(fs, 16.0, seed=0, segment_length=1024)
        spec = welch_psd(rec, plan)
        peak = np.abs(spec.freq_hz - 321.0) < 10.0
        integrated = np.trapezoid(spec.psd[peak], spec.freq_hz[peak])
        assert integrated == pytest.approx(amp**2 / 2, rel=0.02)

    def test_entangled_sum_floor(self, shot_bundle):
        cfg = _zero_temp(shot_bundle.array_config("entangled", delta_omega_hz=1422.0))
        rec = simulate(cfg, PLAN)
        spec = welch_psd(joint_record(rec, "sum"), PLAN)
        # summed shot noise sits at V x the classical (vacuum) sum
        assert np.mean(spec.psd) == pytest.approx(0.631, rel=0.02)

    def test_record_too_short(self):
        rec = Record(np.zeros((1, 100), dtype=complex), 1e3, 0.0)
        with pytest.raises(ValueError):
            welch_psd(rec, SimPlan(1e3, 0.1, 0, segment_length=256))


class TestJointRecord:
    def test_sum_of_identical_independent_sensors(self, shot_bundle):
        cfg = _zero_temp(shot_bundle.array_config("classical", delta_omega_hz=1422.0))
        rec = simulate(cfg, PLAN)
        single = welch_psd(rec, PLAN).psd.mean()
        summed = welch_psd(joint_record(rec, "sum"), PLAN).psd.mean()
        assert summed == pytest.approx(2 * single, rel=0.03)

    @staticmethod
    def _identical_tone_config(shot_bundle, amplitude):
        # identical sensors so the two transduced tones share a phase;
        # zero temperature isolates the tone above the shot floor
        cfg = shot_bundle.array_config("classical", delta_omega_hz=1422.0)
        mode = cfg.channels[0].mode
        tone = ToneSignal(mode.omega0, amplitude)
        chans = tuple(
            replace(ch, mode=mode, temperature=0.0, signal=tone) for ch in cfg.channels
        )
        return ArrayConfig(chans, cfg.source, cfg.network, "classical", cfg.grid), tone

    def test_in_phase_tones_add_coherently(self, shot_bundle):
        # +6 dB in the summed peak; noise adds to +3 dB, so SNR gains 3 dB
        cfg, tone = self._identical_tone_config(shot_bundle, 5e-14)
        rec = simulate(cfg, PLAN)
        spec1 = welch_psd(rec, PLAN)
        peak = np.abs(spec1.omega - tone.frequency) < 2 * np.pi * 40.0
        p_single = np.trapezoid(spec1.psd[0][peak] - 0.5, spec1.freq_hz[peak])
        spec2 = welch_psd(joint_record(rec, "sum"), PLAN)
        p_sum = np.trapezoid(spec2.psd[peak] - 1.0, spec2.freq_hz[peak])
        assert p_sum == pytest.approx(4 * p_single, rel=0.05)
        # two-line Parseval oracle: each arm carries the same transduced tone
        ch = cfg.channels[0]
        from omsense.mechanics import susceptibility_sq_mag

        expected = ch.alpha_flux * ch.beta**2 * float(
            susceptibility_sq_mag(ch.mode, tone.frequency)
        ) * tone.amplitude**2 / 2
        assert p_single == pytest.approx(expected, rel=0.05)

    def test_doubling_amplitude_quadruples_power(self, shot_bundle):
        powers = []
        for amp in (5e-14, 1e-13):
            cfg, tone = self._identical_tone_config(shot_bundle, amp)
            spec = welch_psd(simulate(cfg, PLAN), PLAN)
            peak = np.abs(spec.omega - tone.frequency) < 2 * np.pi * 40.0
            powers.append(np.trapezoid(spec.psd[0][peak] - 0.5, spec.freq_hz[peak]))
        assert powers[1] == pytest.approx(4 * powers[0], rel=0.02)

    def test_force_rescaled_joint_matches_analytic(self, shot_bundle):
        cfg = shot_bundle.array_config("entangled", delta_omega_hz=1422.0)
        rec = simulate(cfg, PLAN)
        spec = welch_psd(joint_record(rec, "average-force"), PLAN)
        model = force_noise_at(cfg, spec.omega)
        center = np.mean([ch.mode.omega0 for ch in cfg.channels])
        band = np.abs(spec.omega - center) < 2 * np.pi * 3000.0
        rel = spec.psd[band] / model[band] - 1
        assert np.sqrt(np.mean(rel**2)) < 0.05
        assert spec.units == "N^2/Hz"

    def test_needs_two_sensors(self):
        rec = Record(np.zeros((1, 64), dtype=complex), 1e3, 1e6)
        with pytest.raises(ValueError):
            joint_record(rec, "sum")


class TestRecord:
    def test_non_finite_rejected(self):
        data = np.zeros((1, 8), dtype=complex)
        data[0, 3] = np.nan
        with pytest.raises(ValueError):
            Record(data, 1e3, 0.0)

    def test_unstable_mode_rejected(self):
        with pytest.raises(ValueError):
            MechanicalMode(1e7, 0.0, 1e-12)

    def test_csv_export(self, tmp_path, shot_bundle):
        cfg = shot_bundle.array_config("classical", delta_omega_hz=1422.0)
        rec = simulate(cfg, SimPlan(16384.0, 0.01, seed=4))
        path = tmp_path / "record.csv"
        export_record_csv(rec, path)
        header = path.read_text().splitlines()[0]
        assert header.startswith("time_s,y1_i")
