"""Post-hoc figure generation for chtumor run directories (read-only)."""

from .figures import FIGURES, PlotJob, render, render_job
from .reader import PlotDataError, load_run

__version__ = "0.1.0"
