"""Numerical wave-trace invariants for smooth convex plane billiards.

Modules: ``geometry`` (arclength boundary curves), ``billiards``
(periodic orbits), ``specfun`` (Hankel/Bessel), ``layers`` (boundary
integral operators), ``trace`` (regularized traces) and ``waveinv``
(stationary phase and wave invariants).
"""

__version__ = "0.1.0"
