"""Simultaneous lowest-eigenstate search by minimizing Tr(S^-1 H) over non-orthogonal states."""

__version__ = "0.1.0"
