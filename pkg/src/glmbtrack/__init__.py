"""GLMB multi-object tracker with joint prediction-update truncated by
Gibbs sampling or deterministic ranked assignment."""

from .core import (
    GaussianMixture,
    GlmbComponent,
    GlmbDensity,
    Label,
    ParticleSet,
    cardinality_distribution,
    empty_density,
    estimate_state,
)
from .filtering import FilterConfig, TrackingModels, joint_step, run_filter
from .scenarios import OspaParams, linear_scenario, nonlinear_scenario, ospa, simulate

__all__ = [
    "FilterConfig",
    "GaussianMixture",
    "GlmbComponent",
    "GlmbDensity",
    "Label",
    "OspaParams",
    "ParticleSet",
    "TrackingModels",
    "cardinality_distribution",
    "empty_density",
    "estimate_state",
    "joint_step",
    "linear_scenario",
    "nonlinear_scenario",
    "ospa",
    "run_filter",
    "simulate",
]
