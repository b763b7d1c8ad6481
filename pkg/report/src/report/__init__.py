"""Presentation layer for solver study output.

Consumes only the CSV files written by the solver CLI; nothing here
imports the solver itself.
"""

from .tables import read_study, render_table
from .plots import render_convergence_plot

__all__ = ["read_study", "render_table", "render_convergence_plot"]
