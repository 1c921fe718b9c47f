"""Exact p-adic toolkit for SL_2/SL_3 over Q_p: trees, flags, decompositions, control sets."""

__version__ = "0.1.0"
