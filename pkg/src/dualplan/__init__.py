"""Offline toolkit for generating, checking and repairing PDDL from grid scenarios."""

__version__ = "0.1.0"
