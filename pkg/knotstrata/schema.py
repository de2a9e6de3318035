from __future__ import annotations
from typing import List, Dict, Optional, Literal, Tuple
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

ClassName = Literal["TT", "A", "B", "C", "D"]
CountMode = Literal["mod2", "signed"]


class RunConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    newton_tol: float = 1e-10
    dedup_radius: float = 1e-6
    margin_tol: float = 1e-8
    cond_threshold: float = 1e8
    newton_max_iter: int = 60
    fd_step: float = 1e-7
    # family sampling
    frames: int = 2048
    seed_density: int = 8
    max_seeds: int = 400
    event_tol: float = 1e-11
    refine_depth: int = 48
    merge_radius: float = 1e-6
    # polyline points per spline sample while tracking a loop
    track_oversample: int = 4
    threads: int = 1
    rng_seed: int = 20240611
    out_dir: Optional[str] = None
    # None = standard axes e_0 (up) and e_1 (right)
    up: Optional[Tuple[float, ...]] = None
    right: Optional[Tuple[float, ...]] = None

    @field_validator("newton_tol", "dedup_radius", "margin_tol", "cond_threshold", "fd_step", "event_tol", "merge_radius")
    @classmethod
    def _positive(cls, v: float) -> float:
        if not v > 0:
            raise ValueError("tolerances must be > 0")
        return v

    @field_validator("frames", "seed_density", "max_seeds", "refine_depth", "threads", "newton_max_iter",
                     "track_oversample")
    @classmethod
    def _positive_int(cls, v: int) -> int:
        if v < 1:
            raise ValueError("counts must be >= 1")
        return v

    @model_validator(mode="after")
    def _orthonormal_axes(self) -> "RunConfig":
        if self.up is None and self.right is None:
            return self
        if self.up is None or self.right is None:
            raise ValueError("up and right are set together")
        if len(self.up) != len(self.right) or len(self.up) < 2:
            raise ValueError("up and right need the same dimension >= 2")
        uu = sum(x * x for x in self.up)
        rr = sum(x * x for x in self.right)
        ur = sum(x * y for x, y in zip(self.up, self.right))
        if abs(uu - 1) > 1e-9 or abs(rr - 1) > 1e-9 or abs(ur) > 1e-9:
            raise ValueError("up and right must be orthonormal")
        return self


class Crossing(BaseModel):
    model_config = ConfigDict(frozen=True)

    s: float
    t: float
    sign: int
    frame_sign: int
    over: Literal["s", "t"]
    point: Tuple[float, ...] = ()

    @property
    def over_param(self) -> float:
        return self.s if self.over == "s" else self.t

    @property
    def under_param(self) -> float:
        return self.t if self.over == "s" else self.s


class Event(BaseModel):
    model_config = ConfigDict(frozen=True)

    stratum: str
    u: Tuple[float, ...] = ()
    config: Tuple[float, ...] = ()
    residual: float = 0.0
    jacobian_sign: int = 1
    condition_tags: List[str] = Field(default_factory=list)
    multiplicity: int = 1

    def sort_key(self) -> Tuple:
        return (self.stratum, tuple(round(x, 12) for x in self.u), tuple(round(x, 12) for x in self.config))


class TrackedEvent(BaseModel):
    """One elementary change of the crossing braid of a loop."""
    model_config = ConfigDict(frozen=True)

    kind: Literal["triple", "birth", "death", "alignment"]
    tau: float
    params: Tuple[float, ...] = ()
    heights: Tuple[float, ...] = ()
    crossings_before: int = 0
    crossings_after: int = 0


class StratumCount(BaseModel):
    stratum: str
    events: List[Event] = Field(default_factory=list)
    count_total: int = 0
    count_mod2: int = 0
    count_signed: int = 0

    @property
    def n_events(self) -> int:
        return len(self.events)


class GenericityReport(BaseModel):
    frames_checked: int = 0
    non_transverse: List[Dict[str, float]] = Field(default_factory=list)
    vertical_tangents: List[Dict[str, float]] = Field(default_factory=list)
    near_triple: List[Dict[str, float]] = Field(default_factory=list)
    not_closed: bool = False

    @property
    def clean(self) -> bool:
        return not (self.non_transverse or self.vertical_tangents or self.not_closed)


class Evaluation(BaseModel):
    class_id: str
    n: int
    per_stratum: Dict[str, StratumCount] = Field(default_factory=dict)
    total_mod2: int = 0
    total_signed: int = 0
    diagnostics: Dict[str, object] = Field(default_factory=dict)

    def summary_line(self) -> str:
        parts = ", ".join(f"{k}={v.count_total}" for k, v in sorted(self.per_stratum.items()))
        if self.class_id == "TT":
            return f"total_mod2={self.total_mod2} ({parts})"
        return f"|value|={abs(self.total_signed)} ({parts})"
