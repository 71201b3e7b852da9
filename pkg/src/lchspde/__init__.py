"""PDE solving by linear combination of Hamiltonian simulation on a statevector engine."""

__version__ = "0.1.0"
