"""Exact Lie symmetry analysis for polynomial evolution equations."""

from .expr import (
    EvalError,
    ExpAtom,
    Expr,
    ExprError,
    FuncAtom,
    JetVar,
    Monomial,
    PFrac,
    PPoly,
    Symbol,
    jet,
)
from .parse import Namespace, ParseError, parse

__all__ = [
    "EvalError",
    "ExpAtom",
    "Expr",
    "ExprError",
    "FuncAtom",
    "JetVar",
    "Monomial",
    "Namespace",
    "ParseError",
    "PFrac",
    "PPoly",
    "Symbol",
    "jet",
    "parse",
]

__version__ = "0.1.0"
