"""
Quadtest - minimax tests for diagonal quadratic functionals of a regression function.
"""

__version__ = "0.1.0"
