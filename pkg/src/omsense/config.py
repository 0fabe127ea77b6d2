"""Run configuration: versioned YAML schema, default profiles and builders.

Every physical quantity carries its unit in the key name.  Unknown sections
or keys are rejected so that typos cannot silently fall back to defaults.

Two default profiles ship with the package.  They share the sensor
parameters and differ only in the transduction calibration:

* ``shot``: the joint minimum at large resonance splittings is
  imprecision-dominated (force-noise and integration-time comparisons);
* ``thermal``: thermal noise dominates the minimum at small splittings
  (bandwidth and sensitivity-bandwidth comparisons).
"""

from __future__ import annotations

import copy
from dataclasses import dataclass

import numpy as np
import yaml
from scipy.constants import c as SPEED_OF_LIGHT, h as PLANCK

from omsense.estimation import ArrayConfig, force_noise_at
from omsense.mechanics import MechanicalMode, SensorChannel, thermal_force_psd_onesided
from omsense.probes import SplitNetwork, SqueezedSource
from omsense.spectra import make_omega_grid
from omsense.timedomain import SimPlan

SCHEMA_VERSION = 1

PROFILES = ("shot", "thermal")

#: transduction calibrations of the shipped profiles (1/m); back-solved so
#: the classical joint noise minimum at 50 uW reproduces the measured
#: regimes: ~9.8 fN/rtHz shot floor at a 1422 Hz splitting ("shot") and a
#: thermal-to-imprecision ratio of ~6.5 at a 262 Hz splitting ("thermal")
PROFILE_BETA_PER_M = {"shot": 5.90e5, "thermal": 1.271e6}


class SchemaError(ValueError):
    """Configuration file does not conform to the schema."""


# section -> key -> (type, default); None default means required
_SCHEMA = {
    "array": {
        "mass_kg": (float, 6.75e-13),
        "resonance1_hz": (float, 5.953e6),
        "resonance2_hz": (float, 5.955e6),
        "gamma1_hz": (float, 200.0),
        "gamma2_hz": (float, 260.0),
        "temperature_k": (float, 295.0),
        "beta1_per_m": (float, PROFILE_BETA_PER_M["shot"]),
        "beta2_per_m": (float, PROFILE_BETA_PER_M["shot"]),
    },
    "probe": {
        "power_uw": (float, 50.0),  # per sensor, at the sensor
        "wavelength_nm": (float, 1550.0),
        "squeezing_db": (float, 2.0),
        "efficiency": (float, 1.0),
    },
    "grid": {
        "points": (int, 8192),
        "halfspan_hz": (float, 0.0),  # 0 = size from the predicted band
    },
    "sweep": {
        "variable": (str, "power"),  # power | delta_omega
        "start": (float, 5.0),
        "stop": (float, 5000.0),
        "points": (int, 25),
        "log": (bool, True),
    },
    "montecarlo": {
        "sample_rate_hz": (float, 16384.0),
        "duration_s": (float, 16.0),
        "segment_length": (int, 1024),
        "overlap": (float, 0.5),
        "trials": (int, 1),
    },
    "incoherent": {
        "t_start_s": (float, 0.02),
        "t_stop_s": (float, 2.0),
        "t_points": (int, 25),
        "contour_delta_hz": (list, []),
        "trials": (int, 0),  # 0 = analytic path only
    },
}

_SWEEP_VARIABLES = ("power", "delta_omega")


def default_config(profile: str = "shot") -> dict:
    """Fully populated configuration dictionary for a shipped profile."""
    if profile not in PROFILES:
        raise SchemaError(f"unknown profile {profile!r}; choose from {PROFILES}")
    cfg = {"schema_version": SCHEMA_VERSION}
    for section, keys in _SCHEMA.items():
        cfg[section] = {k: copy.copy(d) for k, (_, d) in keys.items()}
    beta = PROFILE_BETA_PER_M[profile]
    cfg["array"]["beta1_per_m"] = beta
    cfg["array"]["beta2_per_m"] = beta
    if profile == "thermal":
        # the small-splitting pair studied in the thermal-dominant regime
        cfg["array"]["resonance1_hz"] = 5.953869e6
        cfg["array"]["resonance2_hz"] = 5.954131e6
    return cfg


def render_config(cfg: dict) -> str:
    return yaml.safe_dump(cfg, sort_keys=False, default_flow_style=False)


def validate_config(raw: dict) -> dict:
    """Validate and normalize a parsed configuration; returns a full dict."""
    if not isinstance(raw, dict):
        raise SchemaError("configuration root must be a mapping")
    problems = []
    version = raw.get("schema_version")
    if version is None:
        problems.append("missing key: schema_version")
    elif version != SCHEMA_VERSION:
        problems.append(f"unsupported schema_version {version!r} (expected {SCHEMA_VERSION})")
    for section in raw:
        if section != "schema_version" and section not in _SCHEMA:
            problems.append(f"unknown section: {section}")
    out = {"schema_version": SCHEMA_VERSION}
    for section, keys in _SCHEMA.items():
        given = raw.get(section, {})
        if not isinstance(given, dict):
            problems.append(f"section {section} must be a mapping")
            given = {}
        for key in given:
            if key not in keys:
                problems.append(f"unknown key: {section}.{key}")
        sec = {}
        for key, (typ, default) in keys.items():
            if key in given:
                value = given[key]
                try:
                    if typ is bool and not isinstance(value, bool):
                        raise TypeError
                    if typ is list:
                        value = [float(x) for x in value]
                    else:
                        value = typ(value)
                except (TypeError, ValueError):
                    problems.append(f"bad value for {section}.{key}: {value!r}")
                    value = default
            else:
                value = default
            sec[key] = value
        out[section] = sec
    _check_physics(out, problems)
    if problems:
        raise SchemaError("; ".join(problems))
    return out


def _check_physics(cfg: dict, problems: list) -> None:
    a, p = cfg["array"], cfg["probe"]
    for key in ("mass_kg", "resonance1_hz", "resonance2_hz", "gamma1_hz", "gamma2_hz",
                "beta1_per_m", "beta2_per_m"):
        if a[key] <= 0:
            problems.append(f"array.{key} must be positive")
    if a["temperature_k"] < 0:
        problems.append("array.temperature_k must be >= 0")
    if p["power_uw"] < 0 or p["wavelength_nm"] <= 0:
        problems.append("probe power/wavelength out of range")
    if p["squeezing_db"] < 0:
        problems.append("probe.squeezing_db must be >= 0")
    if not 0.0 <= p["efficiency"] <= 1.0:
        problems.append("probe.efficiency must lie in [0, 1]")
    if cfg["sweep"]["variable"] not in _SWEEP_VARIABLES:
        problems.append(f"sweep.variable must be one of {_SWEEP_VARIABLES}")
    if cfg["sweep"]["points"] < 2:
        problems.append("sweep.points must be >= 2")
    if cfg["sweep"]["start"] >= cfg["sweep"]["stop"]:
        problems.append("sweep range is degenerate (start >= stop)")
    if cfg["incoherent"]["t_start_s"] >= cfg["incoherent"]["t_stop_s"]:
        problems.append("incoherent time range is degenerate")


def load_config(path) -> dict:
    try:
        with open(path, "r") as fh:
            raw = yaml.safe_load(fh)
    except yaml.YAMLError as exc:
        raise SchemaError(f"unparseable YAML: {exc}") from exc
    if raw is None:
        raise SchemaError("empty configuration file; missing key: schema_version")
    return validate_config(raw)


def photon_flux(power_uw: float, wavelength_nm: float) -> float:
    """Photon flux (1/s) of an optical power given in microwatts."""
    energy = PLANCK * SPEED_OF_LIGHT / (wavelength_nm * 1e-9)
    return power_uw * 1e-6 / energy


@dataclass(frozen=True)
class ConfigBundle:
    """Validated configuration plus derived builders used by the CLI."""

    cfg: dict

    def channels(self, delta_omega_hz=None, power_uw=None, beta_scale=1.0):
        a, p = self.cfg["array"], self.cfg["probe"]
        f1, f2 = a["resonance1_hz"], a["resonance2_hz"]
        if delta_omega_hz is not None:
            mean = (f1 + f2) / 2.0
            f1 = mean - delta_omega_hz / 2.0
            f2 = mean + delta_omega_hz / 2.0
        power = p["power_uw"] if power_uw is None else power_uw
        flux = photon_flux(power, p["wavelength_nm"])
        modes = (
            MechanicalMode(2 * np.pi * f1, 2 * np.pi * a["gamma1_hz"], a["mass_kg"]),
            MechanicalMode(2 * np.pi * f2, 2 * np.pi * a["gamma2_hz"], a["mass_kg"]),
        )
        betas = (a["beta1_per_m"] * beta_scale, a["beta2_per_m"] * beta_scale)
        return tuple(
            SensorChannel(mode=m, beta=b, alpha_flux=flux, temperature=a["temperature_k"])
            for m, b in zip(modes, betas)
        )

    def array_config(self, probe_kind, delta_omega_hz=None, power_uw=None,
                     beta_scale=1.0, single_sensor=False) -> ArrayConfig:
        channels = self.channels(delta_omega_hz, power_uw, beta_scale)
        if single_sensor:
            channels = channels[:1]
        p = self.cfg["probe"]
        flux_total = sum(ch.alpha_flux for ch in channels)
        source = SqueezedSource(p["squeezing_db"], flux_total)
        network = SplitNetwork.even(len(channels), p["efficiency"])
        grid = self._grid(channels, probe_kind, source, network)
        return ArrayConfig(channels, source, network, probe_kind, grid)

    def _grid(self, channels, probe_kind, source, network):
        g = self.cfg["grid"]
        omegas = [ch.mode.omega0 for ch in channels]
        center = float(np.mean(omegas))
        gamma_max = max(ch.mode.gamma for ch in channels)
        base = (max(omegas) - min(omegas)) / 2.0 + 12.0 * gamma_max
        if g["halfspan_hz"] > 0:
            half = 2 * np.pi * g["halfspan_hz"]
        else:
            try:
                predicted = self._predicted_band_halfwidth(
                    channels, probe_kind, source, network, center, base)
            except ValueError:  # no transduction; base span suffices
                predicted = 0.0
            half = max(base, 1.5 * predicted)
        return make_omega_grid(center, half, g["points"])

    def _predicted_band_halfwidth(self, channels, probe_kind, source, network, center, base):
        # quadratic-expansion estimate sqrt((1+r)(dOmega^2+Gbar^2))/2 used
        # only to size the grid; r is the thermal-to-imprecision ratio at
        # the band centre
        probe = ArrayConfig(
            channels, source, network, probe_kind,
            make_omega_grid(center, base, 64),
        )
        imp = force_noise_at(probe, center, include_thermal=False)
        thermal = sum(
            thermal_force_psd_onesided(ch.mode, ch.temperature) for ch in channels
        ) / len(channels) ** 2
        r = thermal / imp
        dom = max(ch.mode.omega0 for ch in channels) - min(ch.mode.omega0 for ch in channels)
        gbar2 = float(np.mean([ch.mode.gamma**2 for ch in channels]))
        return np.sqrt((1.0 + r) * (dom**2 + gbar2)) / 2.0

    def sim_plan(self, seed: int, trials=None, duration=None) -> SimPlan:
        mc = self.cfg["montecarlo"]
        return SimPlan(
            sample_rate=mc["sample_rate_hz"],
            duration=mc["duration_s"] if duration is None else duration,
            seed=seed,
            segment_length=mc["segment_length"],
            overlap=mc["overlap"],
            trials=mc["trials"] if trials is None else trials,
        )
