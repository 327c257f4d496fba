"""Lattice simulator for a bilinear Dirac, electromagnetic and proto-gravity field system.

The matter fields psi and phi are independent 4-component complex scalars
("spinplets"); geometry enters through two families of 4x4 matrices
("vectorplets"), gamma_mu and lambda^mu, whose anticommutator traces define
the covariant and contravariant metrics.
"""
from .clifford import (
    ETA,
    MetricTensor,
    Vectorplet,
    boost,
    boost_vectorplet,
    dirac_representation,
    lower_dirac,
    metric_from_pair,
    vectorplet_current,
)
from .errors import SimulationError
from .lattice import Grid, StateSlice, read_snapshot, write_snapshot

__version__ = "0.1.0"

__all__ = [
    "ETA", "Grid", "MetricTensor", "SimulationError", "StateSlice", "Vectorplet", "boost",
    "boost_vectorplet", "dirac_representation", "lower_dirac", "metric_from_pair",
    "read_snapshot", "vectorplet_current", "write_snapshot",
]
