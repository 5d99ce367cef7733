"""Simulation and parameter extraction for single-plasmon interferometry.

The package models a surface plasmon polariton propagating through stripe
waveguides of several lengths inside a Mach-Zehnder interferometer, in
both the classical (laser) and quantum (heralded single photon) regimes.
Synthetic photon-counting scans are generated from ground-truth damping
rates and the extraction pipeline recovers the amplitude damping time T1,
the pure phase damping time T2* and the total phase damping time T2.

Modules:
  channels    qubit damping channels and rate/time conversions
  mzi         interferometer detection-probability models and visibility
  dispersion  group-velocity dispersion, wavepacket spreading, mode overlap
  simkit      synthetic scans (decay, fringe, g2) and their CSV formats
  estimate    decay/fringe/line fits, Monte-Carlo errors, the summary
  cli         the sppdecoh command-line driver
"""

from . import channels, cli, config, dispersion, estimate, mzi, simkit
from ._kernels import BACKEND
from .channels import ChannelParams, DampingTimes, DensityMatrix2
from .errors import (
    ConfigError,
    DegenerateModelError,
    DomainError,
    FileFormatError,
    FitFailureError,
    InsufficientDataError,
    SppDecohError,
)

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "ChannelParams",
    "DampingTimes",
    "DensityMatrix2",
    "ConfigError",
    "DegenerateModelError",
    "DomainError",
    "FileFormatError",
    "FitFailureError",
    "InsufficientDataError",
    "SppDecohError",
    "channels",
    "cli",
    "config",
    "dispersion",
    "estimate",
    "mzi",
    "simkit",
    "__version__",
]
