"""Quantum-inspired activation filters, shallow-circuit closed forms and
Chebyshev-polynomial networks, with a statevector simulator as the oracle."""

__version__ = "0.1.0"
