"""Figure panels rendered from saltsim's sweep and sensitivity outputs."""

from .io import PlotInputError, load_samples, load_sweep
from .render import PANELS, render, word_color

__version__ = "0.1.0"

__all__ = ["PANELS", "PlotInputError", "load_samples", "load_sweep", "render",
           "word_color"]
