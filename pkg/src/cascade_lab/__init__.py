"""Controllability toolkit for a 1D two-component parabolic cascade system.

Modules: ``grid`` (mesh, quadrature), ``spectral`` (eigen data),
``controllability`` (rank test, minimal time), ``moments`` (control
synthesis), ``pde`` (forward/adjoint solvers), ``counterexample`` and
``cli``.
"""

from .errors import (
    CascadeError,
    ConditioningError,
    ConfigurationError,
    DomainError,
    EllipticityError,
    HorizonTooShort,
    NotApproximatelyControllable,
    NumericalError,
)
from .grid import ControlDomain, GridFunction, Interval, Mesh, build_mesh, differentiate, integrate
from .kernels import BACKEND
from .spectral import Multiplicity, Spectrum, assemble_operator, build_spectrum, eigensolve

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "CascadeError",
    "ConditioningError",
    "ConfigurationError",
    "ControlDomain",
    "DomainError",
    "EllipticityError",
    "GridFunction",
    "HorizonTooShort",
    "Interval",
    "Mesh",
    "Multiplicity",
    "NotApproximatelyControllable",
    "NumericalError",
    "Spectrum",
    "assemble_operator",
    "build_mesh",
    "build_spectrum",
    "differentiate",
    "eigensolve",
    "integrate",
]
