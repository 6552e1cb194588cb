"""Birman-Schwinger threshold lab: two-body thresholds, resonance
diagnostics, auxiliary analytic bounds and a correlated-Gaussian
three-body solver, with a config-driven experiment runner.
"""
from importlib.metadata import PackageNotFoundError, version

try:
    __version__ = version("artifact")
except PackageNotFoundError:  # running from a source tree
    __version__ = "0.1.0"
