"""Verification lab for order inequalities and squeeze rules on self-adjoint operator sequences."""

__version__ = "0.1.0"
