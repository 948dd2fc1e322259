"""Damping criteria and optimization for second-order vibrational systems."""

from ._kernels import BACKEND

__version__ = "0.1.0"
