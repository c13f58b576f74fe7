"""Quasi-periodic Helmholtz and Laplace Green's functions and Ewald lattice sums."""

from qpgreen.errors import (
    ConfigError,
    DomainError,
    OverflowReport,
    QPGreenError,
    SingularInputError,
    ToleranceError,
)
from qpgreen.lattice import BlochContext, Case, Cutoffs, QuasiLattice, build
from qpgreen.specfun import AngularIndex, PhasedArgument, Phase

__version__ = "0.1.0"

__all__ = [
    "AngularIndex",
    "BlochContext",
    "Case",
    "ConfigError",
    "Cutoffs",
    "DomainError",
    "OverflowReport",
    "Phase",
    "PhasedArgument",
    "QPGreenError",
    "QuasiLattice",
    "SingularInputError",
    "ToleranceError",
    "build",
]
