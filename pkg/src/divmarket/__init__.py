"""Numerical laboratory for drift-controlled diverse market models.

Analytic diversity verdicts via divergence criteria and the Feller boundary
test, cross-validated by a reproducible Monte Carlo SDE simulator.
"""

from . import classify, feller, model, simulate

__all__ = ["classify", "feller", "model", "simulate"]
__version__ = "0.1.0"
