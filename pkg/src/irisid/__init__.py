"""Desk-scale iris identification security system."""

__version__ = "0.1.0"

from .errors import IrisIdError  # noqa: F401
