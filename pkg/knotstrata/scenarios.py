"""Concrete knots and families: fixture knots, the trefoil bead loop, the
great-circle and Hopf-fiber 3-cycles, and a few contractible test loops."""
from __future__ import annotations
import logging
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict
from scipy.interpolate import CubicHermiteSpline
from scipy.spatial.transform import Rotation

from .curve_model import TWO_PI, KnotCycle, ParamCurve, check_embedded
from .errors import ConstructionError, InputError

log = logging.getLogger(__name__)

# ---------------- long trefoil model ----------------
# Hermite spline through design-plane nodes. In the design plane the standard
# line is y = x; each row is point, tangent angle (degrees from `right`), height
# and the arc length of the leg ending at the node. Passages 0, 1, 3, 7, 9, 10
# are the six crossing passages, in order along the knot.
_DESIGN: Tuple[Tuple[Tuple[float, float], float, float, float], ...] = (
    ((0.0, 0.0), 45.0, -1.0, 0.0),
    ((1.75, 2.55), 54.0, 1.0, 3.2),
    ((3.0, 4.4), 0.0, 0.0, 2.4),
    ((4.0, 4.0), -45.0, -1.0, 1.1),
    ((5.3, 1.7), -100.0, -0.5, 2.7),
    ((4.3, -0.7), -150.0, 0.0, 2.6),
    ((2.0, -1.1), 180.0, 0.5, 2.35),
    ((0.0, 0.0), 135.0, 1.0, 2.4),
    ((-0.6, 1.4), 90.0, 0.0, 1.6),
    ((1.75, 2.55), 36.0, -1.0, 2.9),
    ((4.0, 4.0), 45.0, 1.0, 2.7),
)
CROSSING_PASSAGES = (0, 1, 3, 7, 9, 10)
_DESIGN_CENTER = np.array([2.0, 2.0])

PASS = 2.4             # the knotted part is traversed for |t| <= PASS
SUPPORT = 3.2          # standard line for |t| >= SUPPORT
END_SPEED = 2.5        # speed at the first and last passage
PLANAR_SCALE = 0.25
TAIL_ANGLE = np.pi / 4
TAIL_SPEED = float(np.hypot(*_DESIGN_CENTER)) / PASS


def _to_model(v: np.ndarray) -> np.ndarray:
    """Design plane -> model plane: the standard line becomes the x axis."""
    c, s = np.cos(-TAIL_ANGLE), np.sin(-TAIL_ANGLE)
    return np.stack([c * v[..., 0] - s * v[..., 1], s * v[..., 0] + c * v[..., 1]], axis=-1)


def node_params() -> np.ndarray:
    """Parameters of the design nodes: passages spread over [-PASS, PASS] by arc length."""
    arcs = np.cumsum([row[3] for row in _DESIGN])
    return -PASS + 2 * PASS * arcs / arcs[-1]


def _build_spline() -> CubicHermiteSpline:
    ts = node_params()
    arcs = [row[3] for row in _DESIGN]
    speed = sum(arcs) / (2 * PASS)
    pts, vel = [], []
    for i, (point, angle, height, _) in enumerate(_DESIGN):
        a = np.deg2rad(angle)
        v = END_SPEED if i in (0, len(_DESIGN) - 1) else speed
        xy = _to_model(np.asarray(point) - _DESIGN_CENTER)
        dxy = _to_model(v * np.array([np.cos(a), np.sin(a)]))
        pts.append([xy[0], xy[1], height])
        vel.append([dxy[0], dxy[1], 0.0])
    ends = [-SUPPORT, SUPPORT]
    ts = np.concatenate([[ends[0]], ts, [ends[1]]])
    pts = [[TAIL_SPEED * ends[0], 0.0, 0.0]] + pts + [[TAIL_SPEED * ends[1], 0.0, 0.0]]
    vel = [[TAIL_SPEED, 0.0, 0.0]] + vel + [[TAIL_SPEED, 0.0, 0.0]]
    return CubicHermiteSpline(ts, np.array(pts), np.array(vel))


_SPLINE = _build_spline()


def _line_model(t: np.ndarray, order: int) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    if order == 0:
        return np.stack([TAIL_SPEED * t, np.zeros_like(t), np.zeros_like(t)], axis=-1)
    if order == 1:
        return np.broadcast_to(np.array([TAIL_SPEED, 0.0, 0.0]), t.shape + (3,)).copy()
    return np.zeros(t.shape + (3,))


def _model(t: np.ndarray, order: int) -> np.ndarray:
    """(x, y, h) of the unscaled long trefoil and its t-derivatives."""
    t = np.asarray(t, dtype=float)
    out = _line_model(t, order)
    inside = np.abs(t) < SUPPORT
    if np.any(inside):
        out[inside] = _SPLINE(t[inside], order)
    return out


def _world(m: np.ndarray) -> np.ndarray:
    """Model (x, y, h) -> R^3 with `up` first; linear, so it maps derivatives too."""
    c, s = np.cos(TAIL_ANGLE), np.sin(TAIL_ANGLE)
    x, y = m[..., 0] * PLANAR_SCALE, m[..., 1] * PLANAR_SCALE
    return np.stack([m[..., 2], c * x - s * y, s * x + c * y], axis=-1)


def _rotate_up(v: np.ndarray, angle: float) -> np.ndarray:
    if angle == 0.0:
        return v
    c, s = np.cos(angle), np.sin(angle)
    out = np.array(v)
    out[..., 1] = c * v[..., 1] - s * v[..., 2]
    out[..., 2] = s * v[..., 1] + c * v[..., 2]
    return out


def trefoil_model(t, order: int = 0, flatten: float = 1.0) -> np.ndarray:
    """The long trefoil in R^3 (heights scaled by `flatten`), or its derivative."""
    m = _model(np.atleast_1d(np.asarray(t, dtype=float)), order)
    m[..., 2] *= flatten
    out = _world(m)
    return out[0] if np.ndim(t) == 0 else out


def line_world(t, order: int = 0) -> np.ndarray:
    return _world(_line_model(np.atleast_1d(np.asarray(t, dtype=float)), order))


def tail_velocity() -> np.ndarray:
    return line_world(0.0, 1)[0]


def _profile(u: np.ndarray) -> np.ndarray:
    """Knot minus line in model coordinates; vanishes for |u| >= SUPPORT."""
    d = _model(u, 0) - _line_model(u, 0)
    d[np.abs(u) >= SUPPORT] = 0.0
    return d


def long_trefoil(flatten: float = 1.0, samples: int = 321, half_window: float = 4.0) -> ParamCurve:
    return ParamCurve.from_function(lambda ts: trefoil_model(ts, 0, flatten), "long", samples,
                                    window=(-half_window, half_window), tail=tail_velocity())


# ---------------- fixture knots ----------------
def round_circle(radius: float = 1.0, samples: int = 64) -> ParamCurve:
    return ParamCurve.from_function(
        lambda t: np.stack([np.zeros_like(t), radius * np.cos(t), radius * np.sin(t)], axis=-1),
        "compact", samples)


def long_unknot(samples: int = 16) -> ParamCurve:
    return ParamCurve.from_function(
        lambda t: np.stack([np.zeros_like(t), t, np.zeros_like(t)], axis=-1),
        "long", samples, window=(-1.0, 1.0), tail=(0.0, 1.0, 0.0))


def trefoil(samples: int = 256) -> ParamCurve:
    return ParamCurve.from_function(
        lambda t: np.stack([-np.sin(3 * t), np.sin(t) + 2 * np.sin(2 * t), np.cos(t) - 2 * np.cos(2 * t)], axis=-1),
        "compact", samples)


def figure_eight(samples: int = 256) -> ParamCurve:
    return ParamCurve.from_function(
        lambda t: np.stack([np.sin(4 * t), (2 + np.cos(2 * t)) * np.cos(3 * t),
                            (2 + np.cos(2 * t)) * np.sin(3 * t)], axis=-1),
        "compact", samples)


def fixture_knots() -> Dict[str, ParamCurve]:
    tre = trefoil()
    return {
        "unknot": round_circle(),
        "long_unknot": long_unknot(),
        "trefoil": tre,
        "trefoil_mirror": tre.mirror(),
        "figure_eight": figure_eight(),
        "long_trefoil": long_trefoil(),
        "long_trefoil_mirror": long_trefoil().mirror(),
    }


def bump(center: float, width: float, vector) -> Callable[[np.ndarray], np.ndarray]:
    """Gaussian bump displacement, for ParamCurve.perturb."""
    vec = np.asarray(vector, dtype=float)

    def fn(ts: np.ndarray) -> np.ndarray:
        w = np.exp(-((np.asarray(ts, dtype=float) - center) / width) ** 2)
        return w[:, None] * vec[None, :]
    return fn


# ---------------- bead loop ----------------
class Blob(BaseModel):
    """A scaled copy of the trefoil profile riding on the standard line.

    Occupies center +- SUPPORT*scale in the parameter; displaced by
    amplitude * Rot_up(angle) * profile((sigma - center) / scale) with
    heights multiplied by `flatten`.
    """
    model_config = ConfigDict(frozen=True)

    center: float
    scale: float
    amplitude: float
    flatten: float
    angle: float = 0.0
    # sample weight; fractional while two blobs trade samples
    nodes: float = 400.0

    @property
    def half_width(self) -> float:
        return SUPPORT * self.scale

    def displacement(self, sigma: np.ndarray) -> np.ndarray:
        d = _profile((sigma - self.center) / self.scale)
        d[:, 2] *= self.flatten
        return self.amplitude * _rotate_up(_world(d), self.angle)


SIGMA = 14.0          # sampled parameter window is [-SIGMA, SIGMA]
FAR = 12.0            # parking position of the small copy
BASE_DENSITY = 3.0
LARGE_NODES = 1600
SMALL_NODES = 400

PHASES: Tuple[Tuple[str, float, float], ...] = (
    ("enter", 0.0, 0.05),
    ("traverse", 0.05, 0.80),
    ("leave", 0.80, 0.85),
    ("shrink", 0.85, 0.90),
    ("swap", 0.90, 0.95),
    ("grow", 0.95, 1.0),
)


def bead_loop_phases() -> List[Tuple[str, float, float]]:
    return list(PHASES)


def _geom(a: float, b: float, lam: float) -> float:
    return float(np.exp(np.log(a) + lam * (np.log(b) - np.log(a))))


def bead_state(tau: float, eps: float) -> List[Blob]:
    """Blobs of the bead loop at time tau in [0, 1)."""
    tau = float(np.mod(tau, 1.0))
    flat, small = eps ** 2, eps ** 3
    if tau < 0.85:
        s0 = float(np.interp(tau, [0.0, 0.05, 0.80, 0.85], [-FAR, -(SUPPORT + 0.2), SUPPORT + 0.2, FAR]))
        d = trefoil_model(s0, 1, flat)
        planar = d[1:]
        kappa = float(np.linalg.norm(planar) / np.linalg.norm(tail_velocity()[1:]))
        angle = float(np.arctan2(planar[1], planar[0]) - TAIL_ANGLE)
        return [Blob(center=0.0, scale=1.0, amplitude=1.0, flatten=flat, nodes=LARGE_NODES),
                Blob(center=s0, scale=small / kappa, amplitude=small, flatten=1.0, angle=angle, nodes=SMALL_NODES)]
    if tau < 0.90:
        lam = (tau - 0.85) / 0.05
        r = _geom(1.0, small, lam)
        return [Blob(center=0.0, scale=r, amplitude=r, flatten=_geom(flat, 1.0, lam), nodes=LARGE_NODES),
                Blob(center=FAR, scale=small, amplitude=small, flatten=1.0, nodes=SMALL_NODES)]
    if tau < 0.95:
        lam = (tau - 0.90) / 0.05
        moved = (LARGE_NODES - SMALL_NODES) * lam
        return [Blob(center=-FAR * lam, scale=small, amplitude=small, flatten=1.0, nodes=LARGE_NODES - moved),
                Blob(center=FAR * (1 - lam), scale=small, amplitude=small, flatten=1.0, nodes=SMALL_NODES + moved)]
    lam = (tau - 0.95) / 0.05
    r = _geom(small, 1.0, lam)
    return [Blob(center=-FAR, scale=small, amplitude=small, flatten=1.0, nodes=SMALL_NODES),
            Blob(center=0.0, scale=r, amplitude=r, flatten=_geom(1.0, flat, lam), nodes=LARGE_NODES)]


def _nodes(blobs: List[Blob]) -> np.ndarray:
    """Sample parameters, dense inside every blob and moving smoothly with them."""
    def W(x: np.ndarray) -> np.ndarray:
        out = BASE_DENSITY * (x + SIGMA)
        for b in blobs:
            out = out + 0.5 * b.nodes * (1.0 + np.tanh((x - b.center) / b.half_width))
        return out

    count = int(2 * SIGMA * BASE_DENSITY) + int(round(sum(b.nodes for b in blobs)))
    targets = np.linspace(W(np.array(-SIGMA)), W(np.array(SIGMA)), count)
    lo = np.full(count, -SIGMA)
    hi = np.full(count, SIGMA)
    for _ in range(64):
        mid = 0.5 * (lo + hi)
        below = W(mid) < targets
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
    ts = 0.5 * (lo + hi)
    ts[0], ts[-1] = -SIGMA, SIGMA
    return ts


def curve_from_blobs(blobs: List[Blob]) -> ParamCurve:
    ts = _nodes(blobs)
    pts = line_world(ts)
    for b in blobs:
        pts = pts + b.displacement(ts)
    return ParamCurve("long", ts, pts, window=(-SIGMA, SIGMA), tail=tail_velocity())


def _transport_cycle(state: Callable[[float, float], List[Blob]], eps: float, frames: int, check_frames: int,
                     name: str, scenario: str) -> KnotCycle:
    if not 0 < eps <= 0.1:
        raise InputError(f"{name} needs 0 < eps <= 0.1, got {eps}")
    if frames < 512:
        raise InputError(f"{name} needs at least 512 frames, got {frames}")

    def frame(u: np.ndarray) -> ParamCurve:
        return curve_from_blobs(state(float(u[0]), eps))

    cycle = KnotCycle(1, "circle", frame, kind="long", n=3, lower=[0.0], upper=[1.0], periodic=[True],
                      grid=(frames,), name=name, params={"scenario": scenario, "eps": eps, "frames": frames})
    radius = eps ** 3 / 10
    for tau in np.linspace(0.0, 1.0, check_frames, endpoint=False):
        try:
            check_embedded(cycle.curve([tau]), radius)
        except ConstructionError as e:
            raise ConstructionError(f"{name} self-intersects at tau={tau:.4f}; eps too large",
                                    where={**e.where, "tau": float(tau), "eps": eps}) from e
    log.info("%s eps=%g: %d frames, %d samples per frame", name, eps, frames, len(cycle.curve([0.0]).ts))
    return cycle


def trefoil_bead_loop(eps: float = 0.05, frames: int = 2048, check_frames: int = 17) -> KnotCycle:
    """Loop of long knots: a small trefoil rides through a large flattened one,
    then the two trade places by a homotopy that keeps the diagram."""
    return _transport_cycle(bead_state, eps, frames, check_frames, "trefoil_bead_loop", "trefoil_bead")


# ---------------- tube loop ----------------
class TubeBlob(Blob):
    """Small copy laid out in the pointwise planar frame of the unit large knot.

    The bead keeps one frame for the whole copy; here the copy bends with the
    large knot it runs along. On the standard line both agree.
    """

    def displacement(self, sigma: np.ndarray) -> np.ndarray:
        k = _profile((sigma - self.center) / self.scale)
        v = trefoil_model(sigma, 1)[:, 1:]
        T = v / np.linalg.norm(v, axis=1)[:, None]
        N = np.stack([-T[:, 1], T[:, 0]], axis=-1)
        planar = PLANAR_SCALE * (k[:, :1] * T + k[:, 1:2] * N)
        return self.amplitude * np.column_stack([k[:, 2] * self.flatten, planar])


TUBE_PHASES: Tuple[Tuple[str, float, float], ...] = (
    ("enter", 0.0, 0.05),
    ("traverse", 0.05, 0.85),
    ("leave", 0.85, 0.90),
    ("exchange", 0.90, 1.0),
)


def tube_loop_phases() -> List[Tuple[str, float, float]]:
    return list(TUBE_PHASES)


def _smoothstep(x: float) -> float:
    return x * x * (3.0 - 2.0 * x)


def tube_state(tau: float, eps: float) -> List[Blob]:
    """Blobs of the tube loop at time tau in [0, 1).

    The small copy eases through the large knot in its tube; the closing
    homotopy shrinks the large knot while the small one grows, both at once.
    """
    tau = float(np.mod(tau, 1.0))
    flat, small = eps ** 2, eps ** 3
    edge = SUPPORT + 0.2
    if tau < 0.90:
        if tau < 0.05:
            s0 = float(np.interp(tau, [0.0, 0.05], [-FAR, -edge]))
        elif tau < 0.85:
            s0 = -edge + 2 * edge * _smoothstep((tau - 0.05) / 0.80)
        else:
            s0 = float(np.interp(tau, [0.85, 0.90], [edge, FAR]))
        kappa = float(np.linalg.norm(trefoil_model(s0, 1)[1:]) / np.linalg.norm(tail_velocity()[1:]))
        return [Blob(center=0.0, scale=1.0, amplitude=1.0, flatten=flat, nodes=LARGE_NODES),
                TubeBlob(center=s0, scale=small / kappa, amplitude=small, flatten=1.0, nodes=SMALL_NODES)]
    lam = (tau - 0.90) / 0.10
    g = _smoothstep(lam)
    moved = (LARGE_NODES - SMALL_NODES) * lam
    out, grow = _geom(1.0, small, lam), _geom(small, 1.0, lam)
    return [Blob(center=-FAR * g, scale=out, amplitude=out, flatten=_geom(flat, 1.0, lam),
                 nodes=LARGE_NODES - moved),
            Blob(center=FAR * (1 - g), scale=grow, amplitude=grow, flatten=_geom(1.0, flat, lam),
                 nodes=SMALL_NODES + moved)]


def trefoil_tube_loop(eps: float = 0.05, frames: int = 2048, check_frames: int = 17) -> KnotCycle:
    """Second transport of a small trefoil through a large one, along a tube
    around the large knot, closed by a simultaneous exchange."""
    return _transport_cycle(tube_state, eps, frames, check_frames, "trefoil_tube_loop", "trefoil_tube")


# ---------------- 3-cycles ----------------
def _rotvec_canonical(u: np.ndarray) -> np.ndarray:
    return Rotation.from_rotvec(u).as_rotvec()


def great_circle(u, samples: int = 72) -> ParamCurve:
    R = Rotation.from_rotvec(np.asarray(u, dtype=float)).as_matrix()

    def fn(theta: np.ndarray) -> np.ndarray:
        base = np.stack([np.zeros_like(theta), np.cos(theta), np.sin(theta)], axis=0)
        return (R @ base).T
    return ParamCurve.from_function(fn, "compact", samples)


def great_circle_cycle(grid: int = 8, samples: int = 72) -> KnotCycle:
    """All great circles f_R(theta) = R (0, cos theta, sin theta), R in SO(3), over the rotation-vector ball."""
    return KnotCycle(3, "so3", lambda u: great_circle(u, samples), kind="compact", n=3,
                     lower=[-np.pi] * 3, upper=[np.pi] * 3, periodic=[False] * 3, grid=(grid,) * 3,
                     name="great_circles", params={"scenario": "great_circles", "grid": grid},
                     canonical=_rotvec_canonical)


def quaternion_from_chart(u) -> np.ndarray:
    """u -> (cos|u|, sin|u| u/|u|), w first."""
    u = np.asarray(u, dtype=float)
    r = float(np.linalg.norm(u))
    if r < 1e-15:
        return np.array([1.0, 0.0, 0.0, 0.0])
    return np.concatenate([[np.cos(r)], np.sin(r) * u / r])


def _ball_canonical(u: np.ndarray) -> np.ndarray:
    u = np.array(u, dtype=float)
    r = float(np.linalg.norm(u))
    while r > np.pi:
        u = u * (1.0 - TWO_PI / r)
        r = float(np.linalg.norm(u))
    return u


def hopf_fiber(q, samples: int = 72) -> ParamCurve:
    """theta -> (cos theta + i sin theta) q."""
    w0, x0, y0, z0 = np.asarray(q, dtype=float)

    def fn(theta: np.ndarray) -> np.ndarray:
        a, b = np.cos(theta), np.sin(theta)
        return np.stack([a * w0 - b * x0, a * x0 + b * w0, a * y0 - b * z0, a * z0 + b * y0], axis=-1)
    return ParamCurve.from_function(fn, "compact", samples)


def hopf_fiber_cycle(grid: int = 8, samples: int = 72) -> KnotCycle:
    return KnotCycle(3, "s3", lambda u: hopf_fiber(quaternion_from_chart(u), samples), kind="compact", n=4,
                     lower=[-np.pi] * 3, upper=[np.pi] * 3, periodic=[False] * 3, grid=(grid,) * 3,
                     name="hopf_fibers", params={"scenario": "hopf", "grid": grid},
                     canonical=_ball_canonical)


# ---------------- test loops ----------------
def constant_loop(curve: Optional[ParamCurve] = None, frames: int = 32) -> KnotCycle:
    knot = curve if curve is not None else long_trefoil()
    params = {"scenario": "constant", "frames": frames} if curve is None else {}
    return KnotCycle(1, "circle", lambda u: knot, kind=knot.kind, n=knot.n, lower=[0.0], upper=[1.0],
                     periodic=[True], grid=(frames,), name="constant_loop", params=params)


def rotation_loop(frames: int = 64) -> KnotCycle:
    """A planar ellipse spun rigidly about `up`; its projection never crosses itself."""
    def frame(u: np.ndarray) -> ParamCurve:
        phi = TWO_PI * float(u[0])
        c, s = np.cos(phi), np.sin(phi)

        def fn(t: np.ndarray) -> np.ndarray:
            x, y = 2.0 * np.cos(t), np.sin(t)
            return np.stack([np.zeros_like(t), c * x - s * y, s * x + c * y], axis=-1)
        return ParamCurve.from_function(fn, "compact", 64)

    return KnotCycle(1, "circle", frame, kind="compact", n=3, lower=[0.0], upper=[1.0], periodic=[True],
                     grid=(frames,), name="rotation_loop")


def disk_boundary_loop(radius: float = 0.02, frames: int = 64) -> KnotCycle:
    """Boundary of the disk of bumps of size <= radius on a long trefoil, away from its crossings."""
    knot = long_trefoil()

    def frame(u: np.ndarray) -> ParamCurve:
        phi = TWO_PI * float(u[0])
        return knot.perturb(bump(0.0, 0.15, (0.0, radius * np.cos(phi), radius * np.sin(phi))))

    return KnotCycle(1, "circle", frame, kind="long", n=3, lower=[0.0], upper=[1.0], periodic=[True],
                     grid=(frames,), name="disk_boundary_loop",
                     params={"scenario": "disk_boundary", "radius": radius, "frames": frames})


SCENARIOS: Dict[str, Callable[..., KnotCycle]] = {
    "trefoil_bead": trefoil_bead_loop,
    "trefoil_tube": trefoil_tube_loop,
    "great_circles": great_circle_cycle,
    "hopf": hopf_fiber_cycle,
    "constant": constant_loop,
    "disk_boundary": disk_boundary_loop,
}

# class each shipped scenario is evaluated against
SCENARIO_CLASS: Dict[str, str] = {
    "trefoil_bead": "TT",
    "trefoil_tube": "TT",
    "great_circles": "C",
    "hopf": "A",
    "constant": "TT",
    "disk_boundary": "TT",
}


def normalize_scenario(name: str) -> str:
    key = (name or "").strip().lower().replace("-", "_")
    aliases = {"bead": "trefoil_bead", "trefoil_bead_loop": "trefoil_bead", "tube": "trefoil_tube",
               "trefoil_tube_loop": "trefoil_tube", "great_circle": "great_circles",
               "hopf_fibers": "hopf", "hopf_fiber": "hopf"}
    key = aliases.get(key, key)
    if key not in SCENARIOS:
        raise InputError(f"unknown scenario {name!r}; known: {', '.join(sorted(SCENARIOS))}")
    return key


def build_scenario(name: str, params: Optional[dict] = None) -> KnotCycle:
    key = normalize_scenario(name)
    try:
        return SCENARIOS[key](**(params or {}))
    except TypeError as e:
        raise InputError(f"bad parameters for scenario {key}: {e}") from e
