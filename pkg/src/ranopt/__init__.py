"""Desk-scale closed-loop cellular network optimization twin."""

__version__ = "0.1.0"
