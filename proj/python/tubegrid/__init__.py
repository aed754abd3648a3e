"""Tube-based decentralized voltage control for meshed AC microgrids."""

from ._core import (
    Certificate,
    CertificateBundle,
    ConfigError,
    CplSingularity,
    DisturbanceKind,
    DisturbanceProfile,
    GainSet,
    ModelComparison,
    Network,
    NetworkModel,
    ReferenceSchedule,
    ScenarioResult,
    SimOptions,
    SimReport,
    Trajectory,
    certify,
    compare_models,
    cpl_current,
    cpl_stability_bound,
    design_gains,
    error_gain_requirement,
    load_config_file,
    make_network,
    nominal_voltage_floor,
    run_scenario,
)

__all__ = [
    "Certificate",
    "CertificateBundle",
    "ConfigError",
    "CplSingularity",
    "DisturbanceKind",
    "DisturbanceProfile",
    "GainSet",
    "ModelComparison",
    "Network",
    "NetworkModel",
    "ReferenceSchedule",
    "ScenarioResult",
    "SimOptions",
    "SimReport",
    "Trajectory",
    "certify",
    "compare_models",
    "cpl_current",
    "cpl_stability_bound",
    "design_gains",
    "error_gain_requirement",
    "load_config_file",
    "make_network",
    "nominal_voltage_floor",
    "run_scenario",
]
