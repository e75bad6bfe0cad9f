"""Numerical toolkit for dilations of contraction matrices.

Dilations, residual parts and unitary asymptotes, intertwining maps,
characteristic functions and functional models, cogenerator calculus,
spectral and similarity diagnostics, and a Markov-semigroup demo on the
dyadic Bernoulli shift.
"""
from .contraction import Contraction, classify, make_contraction
from .dilation import minimal_isometric_dilation, residual_part, unitary_n_dilation
from .errors import DilationError
from .opcore import Ambient, Subspace, TruncatedOperator

__all__ = [
    "Ambient", "Contraction", "DilationError", "Subspace", "TruncatedOperator",
    "classify", "make_contraction", "minimal_isometric_dilation", "residual_part",
    "unitary_n_dilation",
]
__version__ = "0.1.0"
