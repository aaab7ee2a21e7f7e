"""Elastic net subspace clustering with the oracle-guided active-set solver."""
__version__ = "0.1.0"
