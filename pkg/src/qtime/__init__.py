"""Finite-dimensional laboratory for quantum-time formalisms.

Submodules
----------
qcore   dense linear algebra and the state/operator data model
pw      relational clocks: constraint states, conditioning, kernels
bauer   two-time pseudospin lattice: shift group, time operator, drift
dhist   decoherent histories: class operators, decoherence functional
tsvf    two-state vectors, ABL rule, weak values, multi-time states
fpf     fixed points on the two-branch contour, measure of existence
cli     JSON-driven experiment runner (``qtime`` console script)
"""

__version__ = "0.1.0"
