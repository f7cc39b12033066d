"""Exact q-series, plane partitions, free fermions and Toda-type matrix factorizations.

Submodules: exactnum, partitions, fock_oracle, operator_matrices, models,
toda_lax, battery and cli.
"""

__version__ = "0.1.0"
