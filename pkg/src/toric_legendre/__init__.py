"""Generalized Legendre transforms on toric polytopes.

The forward map G(alpha) = min_x V(x) + W(x, alpha), its inversion back to V,
region certificates for the mixed Hessian, and a 1-D semiclassical check.
"""

__version__ = "0.1.0"
