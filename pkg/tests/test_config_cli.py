import json

import numpy as np
import pytest
import yaml

from omsense.cli import main, read_csv
from omsense.config import (
    SchemaError,
    default_config,
    load_config,
    photon_flux,
    render_config,
    validate_config,
)
from omsense.search import loglog_slope

V = 0.631


class TestConfigSchema:
    def test_default_profiles_validate(self):
        for profile in ("shot", "thermal"):
            cfg = validate_config(default_config(profile))
            assert cfg["schema_version"] == 1

    def test_render_parse_round_trip(self):
        cfg = default_config("shot")
        assert validate_config(yaml.safe_load(render_config(cfg))) == validate_config(cfg)

    def test_unknown_key_rejected(self):
        cfg = default_config("shot")
        cfg["array"]["q_factor"] = 1e6
        with pytest.raises(SchemaError, match="unknown key: array.q_factor"):
            validate_config(cfg)

    def test_unknown_section_rejected(self):
        cfg = default_config("shot")
        cfg["lasers"] = {}
        with pytest.raises(SchemaError, match="unknown section"):
            validate_config(cfg)

    def test_missing_version_listed(self):
        with pytest.raises(SchemaError, match="schema_version"):
            validate_config({})

    def test_bad_value_reported(self):
        cfg = default_config("shot")
        cfg["probe"]["efficiency"] = 1.4
        with pytest.raises(SchemaError, match="efficiency"):
            validate_config(cfg)

    def test_empty_file(self, tmp_path):
        path = tmp_path / "empty.yaml"
        path.write_text("")
        with pytest.raises(SchemaError, match="missing key"):
            load_config(path)

    def test_photon_flux_value(self):
        # 50 uW at 1550 nm, frozen from h c / lambda
        assert photon_flux(50.0, 1550.0) == pytest.approx(3.90144e14, rel=1e-5)


class TestCliBasics:
    def test_defaults_subcommand(self, capsys):
        assert main(["defaults", "--profile", "thermal"]) == 0
        out = capsys.readouterr().out
        cfg = yaml.safe_load(out)
        assert cfg["array"]["beta1_per_m"] == pytest.approx(1.271e6)

    def test_schema_error_exit_code(self, tmp_path, capsys):
        bad = tmp_path / "bad.yaml"
        bad.write_text("schema_version: 1\nlasers: {}\n")
        assert main(["psd", "--config", str(bad), "--out", str(tmp_path)]) == 2

    def test_missing_file_exit_code(self, tmp_path):
        assert main(["psd", "--config", str(tmp_path / "nope.yaml"), "--out", str(tmp_path)]) == 2


class TestPsdCommand:
    def test_entangled_floor_and_round_trip(self, tmp_path, capsys):
        # wide grid so the outermost bins are genuinely off-resonant
        cfg = default_config("shot")
        cfg["grid"]["halfspan_hz"] = 20000.0
        cfg_path = tmp_path / "cfg.yaml"
        cfg_path.write_text(render_config(cfg))
        assert main(["psd", "--config", str(cfg_path), "--out", str(tmp_path),
                     "--seed", "3"]) == 0
        cols, data = read_csv(tmp_path / "psd_analytic.csv")
        assert cols[0] == "freq_hz"
        i = cols.index("snl_normalized_joint_psd_entangled")
        j = cols.index("snl_normalized_joint_psd_classical")
        # off-resonant joint floor: 10^(-2 dB/10) for the entangled probe,
        # unity for classical (tiny residual thermal tail at the grid edge)
        assert data[0, i] == pytest.approx(10 ** (-0.2), rel=1e-3)
        assert data[0, j] == pytest.approx(1.0, rel=1e-3)
        # bit-exact serialization round trip
        text1 = (tmp_path / "psd_analytic.csv").read_text()
        from omsense.cli import write_csv

        write_csv(tmp_path / "again.csv", [c[2:] for c in text1.splitlines()[:2]], cols, data)
        _, data2 = read_csv(tmp_path / "again.csv")
        np.testing.assert_array_equal(data, data2)

    def test_zero_power_flat_unity(self, tmp_path):
        cfg = default_config("shot")
        cfg["probe"]["power_uw"] = 0.0
        path = tmp_path / "cfg.yaml"
        path.write_text(render_config(cfg))
        assert main(["psd", "--config", str(path), "--out", str(tmp_path),
                     "--probe", "classical"]) == 0
        _, data = read_csv(tmp_path / "psd_analytic.csv")
        np.testing.assert_allclose(data[:, 1], 1.0)

    def test_deterministic_outputs(self, tmp_path):
        out1, out2 = tmp_path / "a", tmp_path / "b"
        for out in (out1, out2):
            assert main(["psd", "--out", str(out), "--seed", "7",
                         "--engine", "both", "--probe", "entangled"]) == 0
        for name in ("psd_analytic.csv", "psd_montecarlo.csv"):
            assert (out1 / name).read_bytes() == (out2 / name).read_bytes()


class TestSweepCommand:
    def test_power_sweep_slopes_and_single_reference(self, tmp_path):
        cfg = default_config("shot")
        cfg["sweep"].update({"variable": "power", "start": 0.5, "stop": 50.0, "points": 9})
        path = tmp_path / "cfg.yaml"
        path.write_text(render_config(cfg))
        assert main(["sweep", "--config", str(path), "--out", str(tmp_path),
                     "--probe", "classical"]) == 0
        cols, data = read_csv(tmp_path / "sweep_power.csv")
        power = data[:, cols.index("power_uw")]
        smin = data[:, cols.index("smin_n2_per_hz_classical")]
        # shot-limited: amplitude noise scales as 1/alpha_c
        slope = loglog_slope(np.sqrt(power), np.sqrt(smin))
        assert slope == pytest.approx(-1.0, abs=0.1)
        # single-sensor reference matches a direct M=1 computation
        from omsense.config import ConfigBundle
        from omsense.estimation import sbp

        bundle = ConfigBundle(validate_config(cfg))
        rep = sbp(bundle.array_config("classical", power_uw=power[0], single_sensor=True))
        assert data[0, cols.index("smin_n2_per_hz_single_classical")] == pytest.approx(
            rep.s_min, rel=1e-9
        )

    def test_delta_sweep_sbp_decreases(self, tmp_path):
        cfg = default_config("thermal")
        cfg["sweep"].update({"variable": "delta_omega", "start": 100.0, "stop": 2500.0,
                             "points": 7, "log": False})
        path = tmp_path / "cfg.yaml"
        path.write_text(render_config(cfg))
        assert main(["sweep", "--config", str(path), "--out", str(tmp_path),
                     "--probe", "entangled"]) == 0
        cols, data = read_csv(tmp_path / "sweep_delta_omega.csv")
        sbp_col = data[:, cols.index("sbp_hz2_per_n2_entangled")]
        assert np.all(np.diff(sbp_col) < 0)

    def test_degenerate_range_rejected(self, tmp_path):
        cfg = default_config("shot")
        cfg["sweep"].update({"start": 50.0, "stop": 50.0})
        path = tmp_path / "cfg.yaml"
        path.write_text(render_config(cfg))
        assert main(["sweep", "--config", str(path), "--out", str(tmp_path)]) == 2


class TestIncoherentCommand:
    def test_summary_slope_and_time_ratio(self, tmp_path):
        cfg = default_config("shot")
        cfg["array"]["resonance1_hz"] = 5.954e6 - 2641.0 / 2
        cfg["array"]["resonance2_hz"] = 5.954e6 + 2641.0 / 2
        path = tmp_path / "cfg.yaml"
        path.write_text(render_config(cfg))
        assert main(["incoherent", "--config", str(path), "--out", str(tmp_path)]) == 0
        cols, data = read_csv(tmp_path / "incoherent_summary.csv")
        for kind in ("classical", "entangled", "optimal"):
            assert data[0, cols.index(f"efsr_slope_{kind}")] == pytest.approx(-0.25, abs=1e-9)
        ratio = data[0, cols.index("time_ratio_optimal_classical")]
        assert ratio == pytest.approx(0.40, rel=0.15)

    def test_contour_grid(self, tmp_path):
        cfg = default_config("shot")
        cfg["incoherent"]["contour_delta_hz"] = [262.0, 2641.0]
        cfg["incoherent"]["t_points"] = 5
        path = tmp_path / "cfg.yaml"
        path.write_text(render_config(cfg))
        assert main(["incoherent", "--config", str(path), "--out", str(tmp_path),
                     "--probe", "entangled"]) == 0
        cols, data = read_csv(tmp_path / "incoherent_contour.csv")
        assert set(np.unique(data[:, cols.index("delta_omega_hz")])) == {262.0, 2641.0}
        assert data.shape[0] == 2 * 5

    def test_deterministic_montecarlo(self, tmp_path):
        cfg = default_config("shot")
        cfg["incoherent"].update({"trials": 8, "t_start_s": 0.1, "t_stop_s": 1.0,
                                  "t_points": 4})
        cfg["montecarlo"]["duration_s"] = 1.0
        path = tmp_path / "cfg.yaml"
        path.write_text(render_config(cfg))
        outs = []
        for sub in ("a", "b"):
            out = tmp_path / sub
            assert main(["incoherent", "--config", str(path), "--out", str(out),
                         "--seed", "5", "--engine", "both", "--probe", "entangled"]) == 0
            outs.append((out / "incoherent_trace_montecarlo.csv").read_bytes())
        assert outs[0] == outs[1]


class TestValidateCommand:
    def test_default_battery_passes(self, tmp_path, capsys):
        assert main(["validate", "--out", str(tmp_path), "--seed", "2"]) == 0
        report = json.loads(capsys.readouterr().out)
        assert report["pass"] is True
        names = {c["check"] for c in report["checks"]}
        assert {"omega_min_closed_form", "equipartition", "mc_transduced_power"} <= names
        assert (tmp_path / "validate_report.json").exists()

    def test_injected_mismatch_fails(self, tmp_path, capsys):
        code = main(["validate", "--out", str(tmp_path), "--seed", "2",
                     "--inject-beta-mismatch", "0.10"])
        assert code == 3
        report = json.loads(capsys.readouterr().out)
        failed = {c["check"] for c in report["checks"] if not c["pass"]}
        assert "mc_transduced_power" in failed
