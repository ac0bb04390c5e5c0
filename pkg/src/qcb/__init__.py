"""Kinematical bounds, controllability and pulse optimization for finite-level quantum systems."""

__version__ = "0.1.0"

from .bounds import (
    KinematicalBounds,
    SubspacePartition,
    check_attainment,
    decoupled_bounds,
    kinematical_bounds,
    optimal_unitary,
)
from .controllability import detect_decoupling, is_completely_controllable, lie_closure
from .dynamics import ControlModel, PulseSchedule, propagate, simulate_expectation
from .optimizer import OptimizationConfig, gradient, multi_start, optimize, yield_fraction
from .states import DensityMatrix, Observable, ensemble_decomposition, evolve_state, expectation

__all__ = [
    "ControlModel",
    "DensityMatrix",
    "KinematicalBounds",
    "Observable",
    "OptimizationConfig",
    "PulseSchedule",
    "SubspacePartition",
    "check_attainment",
    "decoupled_bounds",
    "detect_decoupling",
    "ensemble_decomposition",
    "evolve_state",
    "expectation",
    "gradient",
    "is_completely_controllable",
    "kinematical_bounds",
    "lie_closure",
    "multi_start",
    "optimal_unitary",
    "optimize",
    "propagate",
    "simulate_expectation",
    "yield_fraction",
]
