"""Publication-style panels from omsense CSV files.

This package never recomputes physics: it reads the CSVs written by the
``omsense`` command line and renders them as deterministic vector figures.
"""

from figplots.panels import PanelSpec, render, load_panel_specs

__version__ = "0.1.0"
