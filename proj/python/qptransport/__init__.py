"""Quasiperiodic Schrödinger operators, Aubry duality and ballistic transport."""

from ._qptransport import *  # noqa: F401,F403
from ._qptransport import __doc__  # noqa: F401

__version__ = "0.1.0"
