"""
n-Radial SLE Laboratory

Numerical cross-validation of Dyson Brownian motion on the circle, n-slit
radial Loewner evolution, the two-path discrete commuting approximation and
the lattice lambda-SAW loop-measure model.
"""

__version__ = "0.1.0"
__author__ = "n-Radial SLE Lab Team"
