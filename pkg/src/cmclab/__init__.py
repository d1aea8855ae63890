"""Numerical laboratory for the CMC doubling of generalized Clifford hypersurfaces."""

from . import assembler, catenoid, clifford, curvature, greens, symmetry
from ._accel import HAVE_NUMBA

__all__ = ["assembler", "catenoid", "clifford", "curvature", "greens", "symmetry", "HAVE_NUMBA"]
__version__ = "0.1.0"
