"""Modelling, simulation and mitigation of screen text leaking through eyeglass reflections."""

__version__ = "0.1.0"
