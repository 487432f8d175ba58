"""Numerics for the canonical factorization of functions in disk algebras
defined by a modulus of continuity, and for the closed ideals they generate."""

__version__ = "0.1.0"
