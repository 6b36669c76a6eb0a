"""Gaussian-beam frames for variable-coefficient wave equations.

A wave field is expanded in a frame of modulated Gaussians indexed by dyadic
frequency shells, each atom is transported along its Hamiltonian ray, and the
resulting parametrix is corrected by a Volterra series.  The hot pair kernels
run under numba with a numpy fallback selected by ``GAUSSFRAME_BACKEND``.
"""

from ._jit import backend, set_backend
from .atoms import CoeffSequence, Frame, GaussianMixture, analyze, frame_ratio, synthesize
from .coeff_field import CoefficientField, constant, identity, make_field, periodic
from .errors import (ConfigError, DivisionDegeneracy, DomainError, GaussFrameError, HorizonExceeded,
                     IndexMismatch, InvalidConfig, NonContraction, NonEllipticField, OutOfBand,
                     SizeOverflow, StepFailure)
from .lattice import LatticeConfig, build_frequency_lattice, enumerate_gamma
from .parametrix import CauchyProblem, volterra_solve

__version__ = "0.1.0"

__all__ = [
    "backend", "set_backend", "CoeffSequence", "Frame", "GaussianMixture", "analyze",
    "frame_ratio", "synthesize", "CoefficientField", "constant", "identity", "make_field",
    "periodic", "LatticeConfig", "build_frequency_lattice", "enumerate_gamma", "CauchyProblem",
    "volterra_solve", "ConfigError", "DivisionDegeneracy", "DomainError", "GaussFrameError",
    "HorizonExceeded", "IndexMismatch", "InvalidConfig", "NonContraction", "NonEllipticField",
    "OutOfBand", "SizeOverflow", "StepFailure",
]
