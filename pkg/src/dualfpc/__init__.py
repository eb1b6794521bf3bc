"""A small call-by-value language with recursive types and dual-numbers AD."""

from .admacro import ad_term, ad_type
from .ops import DEFAULT_OPS, OpRegistry, OpSignature, OutOfDomain, register_op
from .program import Program, check_file, closed_term, load_file
from .runtime import Converged, DomainError, FuelExhausted, evaluate, format_value
from .surface import ParseError, SourceFile, parse, parse_term, parse_type, pretty
from .tangent import Backend, Scalar, SparseVec
from .typecheck import Context, TypeCheckError, typecheck

__all__ = [
    "Backend",
    "Context",
    "Converged",
    "DEFAULT_OPS",
    "DomainError",
    "FuelExhausted",
    "OpRegistry",
    "OpSignature",
    "OutOfDomain",
    "ParseError",
    "Program",
    "Scalar",
    "SourceFile",
    "SparseVec",
    "TypeCheckError",
    "ad_term",
    "ad_type",
    "check_file",
    "closed_term",
    "evaluate",
    "format_value",
    "load_file",
    "parse",
    "parse_term",
    "parse_type",
    "pretty",
    "register_op",
    "typecheck",
]

__version__ = "0.1.0"
