"""Curve and family files.

A curve file stores the spline samples of one ParamCurve as rows
[t, x1, ..., xn]. A family file either names a built-in scenario with its
parameters (rebuilt on read) or stores sampled frames of a 0- or 1-parameter
family; 1-parameter frames are interpolated by a periodic spline in the loop
parameter.
"""
from __future__ import annotations
from typing import Annotated, Any, Dict, List, Literal, Optional, Tuple, Union

import numpy as np
from pydantic import BaseModel, Discriminator, Field, Tag, TypeAdapter, ValidationError, model_validator
from scipy.interpolate import CubicSpline

from ..curve_model import KnotCycle, ParamCurve
from ..errors import InputError

CURVE_FORMAT = "knotstrata.curve/1"
FAMILY_FORMAT = "knotstrata.family/1"


class CurveFile(BaseModel):
    format: str = CURVE_FORMAT
    kind: Literal["long", "compact"]
    n: int
    window: Optional[Tuple[float, float]] = None
    samples: List[List[float]]
    # direction of the standard line; the window chord when absent
    tail: Optional[List[float]] = None

    @model_validator(mode="after")
    def _rows_match_n(self) -> "CurveFile":
        bad = [i for i, row in enumerate(self.samples) if len(row) != self.n + 1]
        if bad:
            raise ValueError(f"sample {bad[0]} needs 1 + n = {self.n + 1} numbers")
        if self.kind == "compact" and self.window is not None:
            raise ValueError("window is for long knots only")
        return self


class ScenarioFamily(BaseModel):
    format: str = FAMILY_FORMAT
    name: str = ""
    scenario: str
    params: Dict[str, Any] = Field(default_factory=dict)


class SampledFamily(BaseModel):
    format: str = FAMILY_FORMAT
    name: str = ""
    domain: Literal["point", "circle", "so3", "s3", "box"] = "circle"
    grid: List[int] = Field(default_factory=list)
    lower: List[float] = Field(default_factory=list)
    upper: List[float] = Field(default_factory=list)
    frames: List[CurveFile]

    @property
    def dim(self) -> int:
        return len(self.grid)


def _family_tag(data: Any) -> str:
    if isinstance(data, dict):
        return "scenario" if "scenario" in data else "sampled"
    return "scenario" if isinstance(data, ScenarioFamily) else "sampled"


FamilyFile = Annotated[
    Union[Annotated[ScenarioFamily, Tag("scenario")], Annotated[SampledFamily, Tag("sampled")]],
    Discriminator(_family_tag),
]
_FAMILY = TypeAdapter(FamilyFile)


def curve_record(curve: ParamCurve) -> CurveFile:
    samples = np.column_stack([curve.ts, curve.pts]).tolist()
    return CurveFile(kind=curve.kind, n=curve.n, samples=samples,
                     window=tuple(curve.window) if curve.kind == "long" else None,
                     tail=None if curve.tail is None else np.asarray(curve.tail).tolist())


def curve_from_record(rec: CurveFile) -> ParamCurve:
    rows = np.asarray(rec.samples, dtype=float).reshape(-1, rec.n + 1)
    return ParamCurve(rec.kind, rows[:, 0], rows[:, 1:], window=rec.window, tail=rec.tail)


def _validate(model, data: Any, path: str):
    validate = model.validate_python if isinstance(model, TypeAdapter) else model.model_validate
    try:
        return validate(data)
    except ValidationError as e:
        raise InputError(f"{path}: {e.errors()[0]['msg']} at {e.errors()[0]['loc']}", where={"path": path}) from e


def write_curve(path: str, curve: ParamCurve) -> str:
    from . import write_json
    return write_json(path, curve_record(curve).model_dump(exclude_none=True))


def read_curve(path: str) -> ParamCurve:
    from . import read_json
    return curve_from_record(_validate(CurveFile, read_json(path), path))


# ---------------- families ----------------
def family_record(cycle: KnotCycle) -> Union[ScenarioFamily, SampledFamily]:
    if "scenario" in cycle.params:
        params = {k: v for k, v in cycle.params.items() if k != "scenario"}
        return ScenarioFamily(name=cycle.name, scenario=cycle.params["scenario"], params=params)
    if cycle.dim > 1:
        raise InputError("only scenario families or families of dimension <= 1 can be written to a file")
    if cycle.dim == 0:
        return SampledFamily(name=cycle.name, domain="point", frames=[curve_record(cycle.curve(()))])
    frames = [curve_record(cycle.curve(u)) for u in cycle.grid_points()]
    return SampledFamily(name=cycle.name, domain=cycle.domain, grid=[len(frames)], lower=cycle.lower.tolist(),
                         upper=cycle.upper.tolist(), frames=frames)


def _sampled_cycle(rec: SampledFamily) -> KnotCycle:
    curves = [curve_from_record(c) for c in rec.frames]
    if not curves:
        raise InputError("sampled family has no frames")
    first = curves[0]
    if rec.dim == 0:
        if len(curves) != 1:
            raise InputError(f"a family without a grid holds one frame, got {len(curves)}")
        return KnotCycle(0, "point", lambda u: first, kind=first.kind, n=first.n, lower=[], upper=[], name=rec.name)
    if rec.dim != 1:
        raise InputError(f"sampled families must have dimension 0 or 1, got {rec.dim}")
    if rec.grid[0] != len(curves):
        raise InputError(f"grid {rec.grid} does not match {len(curves)} frames")
    for c in curves[1:]:
        if c.kind != first.kind or c.ts.shape != first.ts.shape or np.max(np.abs(c.ts - first.ts)) > 0:
            raise InputError("all frames of a sampled family must share kind and sample parameters")
    lo = float(rec.lower[0]) if rec.lower else 0.0
    hi = float(rec.upper[0]) if rec.upper else 1.0
    F = len(curves)
    taus = lo + (hi - lo) * np.arange(F + 1) / F
    stack = np.stack([c.pts for c in curves] + [curves[0].pts])
    spline = CubicSpline(taus, stack, bc_type="periodic", axis=0)

    def frame(u: np.ndarray) -> ParamCurve:
        tau = lo + np.mod(float(u[0]) - lo, hi - lo)
        return first.with_points(spline(tau))

    return KnotCycle(1, rec.domain, frame, kind=first.kind, n=first.n, lower=[lo], upper=[hi],
                     periodic=[True], grid=(F,), name=rec.name)


def cycle_from_record(rec: Union[ScenarioFamily, SampledFamily]) -> KnotCycle:
    if isinstance(rec, ScenarioFamily):
        from ..scenarios import build_scenario
        cycle = build_scenario(rec.scenario, rec.params)
        cycle.name = rec.name or cycle.name
        return cycle
    return _sampled_cycle(rec)


def write_family(path: str, cycle: KnotCycle) -> str:
    from . import write_json
    return write_json(path, family_record(cycle).model_dump(exclude_none=True))


def read_family(path: str) -> KnotCycle:
    from . import read_json
    return cycle_from_record(_validate(_FAMILY, read_json(path), path))
