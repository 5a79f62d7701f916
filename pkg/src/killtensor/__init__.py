"""Killing tensors of flat and conformally flat tori."""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    BandMismatch,
    BandWarning,
    ConditioningWarning,
    DegreeMismatch,
    DimensionMismatch,
    IndexRangeError,
    IntegratorError,
    InvalidFactor,
    KillTensorError,
    NotTraceFree,
    UnsupportedOperation,
)
from .symalg import SymTensorField, inner, l_mul, lambda_op, standard_decompose, sym_mul  # noqa: E402
from .torusfn import Flat, InverseTrig, TorusScalar, TrigExponent, parse_factor  # noqa: E402
from .kernelsolve import compute_kernel, predicted_dimension, verify_theorem  # noqa: E402

__all__ = [
    "BandMismatch",
    "BandWarning",
    "ConditioningWarning",
    "DegreeMismatch",
    "DimensionMismatch",
    "Flat",
    "IndexRangeError",
    "IntegratorError",
    "InvalidFactor",
    "InverseTrig",
    "KillTensorError",
    "NotTraceFree",
    "SymTensorField",
    "TorusScalar",
    "TrigExponent",
    "UnsupportedOperation",
    "compute_kernel",
    "inner",
    "l_mul",
    "lambda_op",
    "parse_factor",
    "predicted_dimension",
    "standard_decompose",
    "sym_mul",
    "verify_theorem",
]
