"""Simulation and analysis toolkit for optomechanical force-sensor arrays.

The package models M optomechanical sensors read out in the phase quadrature
and interrogated by classical (coherent) or entangled (split squeezed-mode)
probe light.  It provides an analytic spectral engine (noise budgets, minimum
force noise, 3-dB bandwidth, sensitivity-bandwidth product), a Monte Carlo
time-domain engine that serves as an independent cross-check, and energy-based
detection statistics for incoherent force searches.
"""

from omsense.probes import (
    SqueezedSource,
    SplitNetwork,
    QuadratureNoise,
    variance_from_db,
    probe_noise,
    coherent_noise,
    weighted_sum_variance,
    aligned_variance_factors,
)
from omsense.mechanics import (
    MechanicalMode,
    SensorChannel,
    ToneSignal,
    BandSignal,
    susceptibility,
    derive_beta,
    thermal_force_psd,
    thermal_force_psd_onesided,
    output_psd,
)
from omsense.spectra import SpectrumGrid, make_omega_grid
from omsense.estimation import (
    ArrayConfig,
    MetricsReport,
    force_noise_psd,
    omega_min_closed_form,
    min_force_noise,
    bandwidth_3db,
    three_db_band,
    sbp,
    optimal_probe_bound,
    calibrate_beta,
    eq2_min_force_noise,
    sensitivity_improvement_ratios,
)
from omsense.timedomain import SimPlan, Record, simulate, welch_psd, joint_record
from omsense.search import (
    EnergyTrace,
    energy_estimator,
    analytic_energy_trace,
    montecarlo_energy_trace,
    efsr,
    detectability,
    time_to_resolution_ratio,
)

__version__ = "0.1.0"
