"""Post-processing for opinion-queues outputs: trial figures and summary
tables, rendered strictly from the emitted CSV files (no recomputation)."""

from .figures import plot_trial
from .tables import render_tables
from .trace_io import TraceFrame, read_trace

__version__ = "0.1.0"
