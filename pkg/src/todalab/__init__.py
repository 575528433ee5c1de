"""Numerical laboratory for the Toda hierarchy, its SL(2)-cocycles and m-functions.

Submodules
----------
mobius     2x2 unimodular matrices acting on the Riemann sphere
jacobi     Jacobi matrices, the weighted metric, banded polynomial calculus
cocycle    shift/Toda cocycles, G/H polynomials, zero curvature, omega/lambda
toda       Lax flows, Picard oracle and action-level checks
herglotz   m-functions, M-matrix, reflection coefficients, band sets
canonical  canonical systems, Weyl disks, twisted shifts
battery    experiment suites, JSON reports and CSV data
cli        command line entry point (`todalab run`, `todalab emit`)
"""

__version__ = "0.1.0"
