"""Graphical area matching between image pairs on Area Graphs."""

__version__ = "0.1.0"
