"""Toric Fano orbifolds: dual polytopes, soliton vectors, Guillemin
potentials and a continuity-method Monge-Ampere solver."""

__version__ = "0.1.0"
