"""
Models package for Quadtest.

This package contains data models used throughout the Quadtest tool:
- Basis and coefficient specifications
- Active sets, spectral sums and extremal solutions
- Samples, test reports and run configuration
"""
