"""Burgers-equation solvers on dense grids, quantized tensor trains and simulated quantum circuits."""

__version__ = "0.1.0"
