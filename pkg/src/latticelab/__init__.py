"""latticelab: a numerical laboratory for periodically driven semi-infinite
nonlinear lattices.

The package simulates x_n'' = F(x_{n-1}-x_n) - F(x_n-x_{n+1}) with a driven
boundary, tracks the spectrum of the associated Jacobi (Lax) operator, and
independently constructs the observed time-asymptotic states: predicted
spectral densities from band data, one-phase travelling waves for general
force laws, and theta-function g-gap solutions for the Toda lattice.
"""

from .drivers import DriverSpec, harmonics_from_sin_cos, paper_driver
from .errors import (
    AmbiguityError,
    ConfigurationError,
    ContractionError,
    DomainError,
    IntegrationError,
    LatticeLabError,
    NumericsError,
    SolverError,
)
from .forces import ForceLaw, force_law

__version__ = "0.1.0"

__all__ = [
    "DriverSpec",
    "ForceLaw",
    "force_law",
    "harmonics_from_sin_cos",
    "paper_driver",
    "LatticeLabError",
    "ConfigurationError",
    "DomainError",
    "NumericsError",
    "IntegrationError",
    "SolverError",
    "ContractionError",
    "AmbiguityError",
    "__version__",
]
