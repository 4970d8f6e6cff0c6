"""Figures for cvfkit experiment outputs: size curves, threshold
surfaces (raw and logistic-transformed axes), and power curves."""

from .render import FigureError, parse_spec, read_csv, render

__all__ = ["FigureError", "parse_spec", "read_csv", "render"]
