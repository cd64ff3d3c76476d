"""Boundary quasi-orthogonality toolkit for planar billiards."""

__version__ = "0.1.0"

from . import dynamics, geometry, modes, qform, scaling, symid  # noqa: F401
