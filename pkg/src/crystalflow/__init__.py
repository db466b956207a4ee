"""Crystalline curvature flow of polyrectangles in a periodically layered
medium: calibrability of facets, the eps-scale flow, its effective limit
and the experiment harness."""
from .forcing import ForcingField, InterfaceClass
from .geometry import Polyrectangle

__all__ = ["ForcingField", "InterfaceClass", "Polyrectangle"]
__version__ = "0.1.0"
