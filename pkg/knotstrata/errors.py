from __future__ import annotations
from typing import Any, Dict, Optional


class KnotStrataError(Exception):
    """Base class; `exit_code` is what the CLI returns for it."""
    exit_code = 1

    def __init__(self, message: str, *, where: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.where: Dict[str, Any] = dict(where or {})

    def __str__(self) -> str:
        base = super().__str__()
        if not self.where:
            return base
        loc = ", ".join(f"{k}={v}" for k, v in self.where.items())
        return f"{base} ({loc})"


# ---- input side (exit 1) ----
class InputError(KnotStrataError):
    pass


class UnsupportedDerivativeError(KnotStrataError):
    pass


class ConstructionError(KnotStrataError):
    pass


# ---- genericity side (exit 2): caller has to perturb the input ----
class GenericityError(KnotStrataError):
    exit_code = 2


class NonTransverseError(GenericityError):
    pass


class UnresolvedEventError(GenericityError):
    pass
