"""Structured fixed-order H-infinity synthesis for port-Hamiltonian plants."""

from phsyn._core import *  # noqa: F401,F403
from phsyn._core import __doc__  # noqa: F401

__version__ = "0.1.0"
