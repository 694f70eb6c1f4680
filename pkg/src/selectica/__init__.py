"""Selective confidence intervals after noisy selection.

Three selection problems are covered: the largest of n Gaussian means
(``winners_curse``), the maximal contrast of a design (``max_contrast``) and
the leading lasso coefficient (``lasso_dt``). Each offers an infer-and-widen
interval next to a conditional one, and ``simlab`` compares them on paired
selections.
"""

from .exceptions import (
    DegenerateTruncation,
    EmptySelection,
    InfiniteQuantile,
    InfiniteWidth,
    RootNotBracketed,
    SelecticaError,
    SelectionEventViolated,
    SingularDesign,
)
from .interval import Interval
from .stat_core import RealInterval, RngStream, TruncatedGaussian

__version__ = "0.1.0"

__all__ = [
    "DegenerateTruncation",
    "EmptySelection",
    "InfiniteQuantile",
    "InfiniteWidth",
    "Interval",
    "RealInterval",
    "RngStream",
    "RootNotBracketed",
    "SelecticaError",
    "SelectionEventViolated",
    "SingularDesign",
    "TruncatedGaussian",
]
