"""Series solutions of the elliptic Calogero-Sutherland model."""

from .elliptic_core import ModelParameters, QSeries, as_lambda
from .errors import (
    ConfigError,
    CutoffInsufficient,
    PoleError,
    ResonanceObstruction,
    WindowOverflow,
)
from .series_algebra import LaurentPoly, TruncationWarning
from .spectrum_recursion import ModeVector, MuVector, SpectralSolution, solve_recursion

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "CutoffInsufficient",
    "LaurentPoly",
    "ModeVector",
    "ModelParameters",
    "MuVector",
    "PoleError",
    "QSeries",
    "ResonanceObstruction",
    "SpectralSolution",
    "TruncationWarning",
    "WindowOverflow",
    "as_lambda",
    "solve_recursion",
]
