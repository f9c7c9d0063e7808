"""Truncated quotient modules of the Hardy space on the polydisc."""
__version__ = "0.1.0"

from .errors import *  # noqa: F401,F403
from .lattice import CoeffVector, DiagonalSpace, TruncationGrid, kernel_vector, tail_factor
from .symbols import BlaschkeProduct, InnerSymbol, MPoly
from .quotient import (
    ONE_DIM,
    EtaIdeal,
    OneDimFactor,
    PolyIdeal,
    PrincipalInner,
    QuotientModel,
    RudinFinite,
    TensorQuotient,
    build_submodule,
    compressed_coordinate,
    compressed_multiplier,
    tensor_quotient,
)
from .diagnostics import DCVerdict, ProbeReport, Verdict, doubly_commuting_verdict, rudin_probe, theorem31_matrix_probe, lemma25_block_probe
from .boundaryrep import BRVerdict, boundary_rep_verdict, certificate_polynomial, factorize_homogeneous
from .variety import VarietyModel, a2n_norm, fibre_points
from .parsing import parse_blaschke, parse_inner, parse_polynomial
