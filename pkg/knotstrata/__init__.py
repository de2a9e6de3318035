"""Evaluate cohomology classes of spaces of knots on concrete families, and
the finite-type invariants and chord-diagram complexes they come from."""
from .errors import (
    ConstructionError,
    GenericityError,
    InputError,
    KnotStrataError,
    NonTransverseError,
    UnresolvedEventError,
    UnsupportedDerivativeError,
)
from .schema import Evaluation, RunConfig

__version__ = "0.3.0"
