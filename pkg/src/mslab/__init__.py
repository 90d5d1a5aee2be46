"""Truncated multiplication operators on the model space of a contraction."""
from .harmonic import AnalyticPoly, CircleFunction, check_purely_contractive, chi, delta_from_u
from .modelspace import ModelSpace, ModelVector, build_model_space, project_Hu, special_vectors
from .symbols import (
    DeltaLinear, SymbolMatrix, build_Su, build_Xmu, commutant_symbol, compress_symbol,
    random_symbol, random_zero_symbol, rank_one, symbol_product,
)
from .invariance import (
    NOT_DETERMINED, defect_decompose, extract_d, invariance_residual, recover_symbol,
    zero_symbol_test,
)
from .crofoot import build_crofoot, mobius_transport, transport_operator
from .symmetry import build_Cu, canonical_symbols, decompose_symmetric, symmetry_residual_symbol

__version__ = "0.1.0"
