"""Hardy-Sobolev numerical lab: least-energy solvers and verification scenarios."""

__version__ = "0.1.0"
