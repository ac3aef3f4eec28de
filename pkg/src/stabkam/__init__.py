"""Word-algebra KAM flow for LDPC stabilizer Hamiltonians, with an exact-diagonalization oracle."""

__version__ = "0.1.0"
