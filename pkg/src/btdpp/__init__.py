"""Finite-bandwidth spectral projectors of planar Berezin-Toeplitz operators
and exact statistics of their determinantal point processes."""

__version__ = "0.1.0"

from ._backend import BACKEND  # noqa: F401
