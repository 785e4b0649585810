"""Numerical tools: grids, functionals, solvers and reference constants."""
