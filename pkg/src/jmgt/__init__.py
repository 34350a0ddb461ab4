"""Numerical toolkit for the third-order-in-time nonlinear acoustic wave system

    u_t = v,  v_t = w,  tau w_t = Delta u + beta Delta v - w + (B/A) v w + 2 grad u . grad v

on periodic boxes, with per-mode dispersion analysis, radial-quadrature decay
runs, energy functionals and an interpolation-inequality lab.
"""
__version__ = "0.1.0"

from .exceptions import BlowUpError, ConfigurationError, DomainError, ResolutionWarning
from .spectral import CutoffSpec, GridSpec
from .dynamics import Params, StateVector
from .stepping import StepperConfig, evolve

__all__ = ["BlowUpError", "ConfigurationError", "DomainError", "ResolutionWarning",
           "CutoffSpec", "GridSpec", "Params", "StateVector", "StepperConfig", "evolve",
           "__version__"]
