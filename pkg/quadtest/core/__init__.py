"""
Core package for Quadtest.

This package contains the numerical machinery:
- Basis evaluation and lattice enumeration
- Spectral sums, extremal weights and separation rates
- Test statistics, lower-bound constructions and Monte Carlo simulation
"""
