"""Bergman tau functions and flat-metric Laplacian determinants.

Two computational routes to the same spectral invariants on hyperelliptic
translation surfaces: an analytic one through period matrices, theta
functions and the Bergman tau function, and a spectral one through cone
heat kernels and finite-element Laplacian spectra.
"""

__version__ = "0.1.0"
