"""Simulator and analysis toolkit for synchronous protocols among rational, possibly duplicating agents."""

__version__ = "0.1.0"
