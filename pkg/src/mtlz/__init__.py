"""Workbench for multitime Landau-Zener (MTLZ) integrable families."""
__version__ = "0.1.0"
