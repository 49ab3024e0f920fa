"""Rendering of simulator CSV outputs into publication-style figures.

Consumes only the documented CSV schemas (`timeseries.csv`, `summary.csv`)
so the simulator itself never needs a plotting dependency.
"""

from .panels import PanelSpec, PlotDataError, load_summary, load_timeseries, plot_sweep, plot_timeseries

__version__ = "0.1.0"
