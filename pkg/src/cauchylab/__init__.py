"""Numerical certificates for the stability of the Cauchy problem for anisotropic wave equations."""
from .fields import Manufactured, SpaceTimeField, TensorGrid
from .geometry import Ball, Box
from .media import AnisotropicMedium, catalog
from .report import FAIL, PASS, SKIPPED, CheckReport

__all__ = ["Manufactured", "SpaceTimeField", "TensorGrid", "Ball", "Box", "AnisotropicMedium", "catalog",
           "CheckReport", "PASS", "FAIL", "SKIPPED"]
__version__ = "0.1.0"
