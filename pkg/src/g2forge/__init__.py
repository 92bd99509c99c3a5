"""Exterior calculus, curvature and G2-structure certification on solvable Lie algebras."""

__version__ = "0.1.0"
