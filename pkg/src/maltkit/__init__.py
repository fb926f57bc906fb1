"""Metropolis adjusted Langevin trajectories, HMC variants and their analytic checks."""

__version__ = "0.1.0"

from .rng import RngStream
from .targets import (
    Marginal1DPotential,
    TargetModel,
    diagonal_gaussian,
    gaussian_mixture,
    make_target,
    product_target,
    student_t,
)
from .dynamics import PhaseState, StepParams, NoisePair, leapfrog_step, obabo_step, local_energy_error
from .samplers import ChainResult, SamplerConfig, ghmc_run, malt_run, rhmc_run

__all__ = [
    "RngStream", "Marginal1DPotential", "TargetModel", "diagonal_gaussian", "gaussian_mixture", "make_target",
    "product_target", "student_t", "PhaseState", "StepParams", "NoisePair", "leapfrog_step", "obabo_step",
    "local_energy_error", "ChainResult", "SamplerConfig", "ghmc_run", "malt_run", "rhmc_run",
]
