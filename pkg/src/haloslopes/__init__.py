"""Exact p-adic slope computations for U_p operators on truncated spaces of
locally analytic forms."""

__version__ = "0.1.0"
