"""Optical nuclear electric resonance (ONER) simulation for diatomic molecules.

The package is organised by physical subsystem:

- :mod:`oner.spin`      spin operators, Zeeman + quadrupole Hamiltonian, levels
- :mod:`oner.nqi`       EFG/NQI tensor algebra, frame rotation, transition amplitudes
- :mod:`oner.optics`    driven two-level system, steady state and pulse trains
- :mod:`oner.vibration` finite-difference vibrational solver and averaging
- :mod:`oner.dynamics`  coupled spin dynamics, Rabi fits and repetition-rate scans
- :mod:`oner.config`    typed scenario configuration
- :mod:`oner.cli`       command line front end
"""

from .errors import (
    ConvergenceError,
    FitError,
    IntegrationError,
    InvalidArgumentError,
    OnerError,
    RegimeError,
    RegimeWarning,
    UnsupportedSpinError,
)

__version__ = "0.1.0"

__all__ = [
    "ConvergenceError",
    "FitError",
    "IntegrationError",
    "InvalidArgumentError",
    "OnerError",
    "RegimeError",
    "RegimeWarning",
    "UnsupportedSpinError",
    "__version__",
]
