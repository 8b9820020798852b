"""Stokes graphs, odd abelian systems and SL(2, C) monodromy on the punctured sphere."""

__version__ = "0.1.0"
