"""Dense-matrix simulator for arithmetic on Hamiltonian block encodings."""

__version__ = "0.1.0"
