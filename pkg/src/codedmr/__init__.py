"""Coded MapReduce simulation with resolvable designs from single parity-check codes."""

from codedmr.design import (
    Block,
    CodewordMatrix,
    DesignParams,
    ResolvableDesign,
    build_design,
    generate_codeword_matrix,
    intersect_blocks,
    validate_design,
)
from codedmr.errors import ParameterError, ProtocolError

__all__ = [
    "Block",
    "CodewordMatrix",
    "DesignParams",
    "ParameterError",
    "ProtocolError",
    "ResolvableDesign",
    "build_design",
    "generate_codeword_matrix",
    "intersect_blocks",
    "validate_design",
]

__version__ = "0.1.0"
