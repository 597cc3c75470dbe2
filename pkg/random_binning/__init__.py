# Random Binning Toolkit - phase diagrams, error exponents and simulations
"""
Finite-temperature decoding of Slepian-Wolf codes under random binning:
entropy spectra, phase diagrams, exact bit-error exponents, and an
exact-enumeration simulator to check them against.
"""

__version__ = "0.1.0"

from .models.source import JointSource, MismatchModel
from .schemas import load_source

__all__ = ['JointSource', 'MismatchModel', 'load_source', '__version__']
