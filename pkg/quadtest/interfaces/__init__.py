"""
Interfaces package for Quadtest: data files and terminal rendering.
"""
