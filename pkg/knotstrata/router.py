from __future__ import annotations
import re
from typing import Literal, Tuple

from .errors import InputError

CurveFamily = Literal["long", "compact"]

# class letter -> (kind, dimension as a function of n)
_CLASSES = {
    "TT": ("long", lambda n: 3 * n - 8),
    "A": ("compact", lambda n: n - 1),
    "B": ("compact", lambda n: n - 2),
    "C": ("compact", lambda n: 2 * n - 3),
    "D": ("compact", lambda n: 2 * n - 6),
}


def normalize_class(class_hint: str | None) -> str:
    """'tt', 'TT(3)', 'c', 'class-c' ... -> canonical letter(s)."""
    raw = (class_hint or "").strip().upper()
    raw = re.sub(r"^CLASS[-_ ]?", "", raw)
    raw = re.sub(r"\(\s*\d+\s*\)$", "", raw).strip()
    if raw in {"TT", "T"}:
        return "TT"
    if raw in {"A", "B", "C", "D"}:
        return raw
    raise InputError(f"unknown cohomology class {class_hint!r} (expected TT, A, B, C or D)")


def class_signature(class_id: str, n: int) -> Tuple[CurveFamily, int]:
    """(curve kind, cycle dimension) a class of knots in R^n is evaluated on."""
    if not 3 <= n <= 5:
        raise InputError(f"ambient dimension {n} not supported (3..5)")
    kind, dim = _CLASSES[normalize_class(class_id)]
    d = dim(n)
    if d < 0:
        raise InputError(f"class {class_id} has no cycles for n={n}")
    return kind, d
