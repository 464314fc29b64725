"""Squeezing spectra, scattering coefficients and pair entanglement for spin-exchange atomic beams."""

from ._entbeam import *  # noqa: F401,F403
from ._entbeam import EntbeamError, __version__  # noqa: F401
