from __future__ import annotations
import itertools
import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Dict, Iterable, List, Literal, Optional, Sequence, Tuple

import numpy as np
from scipy.spatial import cKDTree

from .config import worker_count
from .curve_model import RIGHT, TWO_PI, UP, KnotCycle, ParamCurve, crossings, project_point
from .errors import GenericityError, InputError, NonTransverseError, UnresolvedEventError
from .schema import Crossing, Event, RunConfig, TrackedEvent

log = logging.getLogger(__name__)


# ---------------- configuration points ----------------
class PointSpec:
    """A configuration point: free, anchored at a constant, or a fixed offset of another point."""

    __slots__ = ("mode", "value", "ref", "label")

    def __init__(self, mode: Literal["free", "anchor", "offset"], value: float = 0.0, ref: int = -1, label: str = ""):
        self.mode = mode
        self.value = float(value)
        self.ref = ref
        self.label = label

    @classmethod
    def free(cls, label: str = "") -> "PointSpec":
        return cls("free", label=label)

    @classmethod
    def anchor(cls, value: float, label: str = "") -> "PointSpec":
        return cls("anchor", value, label=label)

    @classmethod
    def offset(cls, ref: int, value: float, label: str = "") -> "PointSpec":
        return cls("offset", value, ref, label=label)


class _Ctx:
    """Lazy f, f' at the configuration points of one candidate solution."""

    def __init__(self, curve: ParamCurve, params: np.ndarray):
        self.curve = curve
        self.params = params
        self._cache: Dict[Tuple[int, int], np.ndarray] = {}

    def f(self, i: int, order: int = 0) -> np.ndarray:
        key = (i, order)
        if key not in self._cache:
            self._cache[key] = self.curve.eval(self.params[i], order)
        return self._cache[key]

    def p(self, i: int, order: int = 0) -> np.ndarray:
        return project_point(self.f(i, order))


class Block:
    """A group of scalar equations g(u, a) = 0."""

    def __init__(self, name: str, size: Callable[[int], int], fn: Callable[[_Ctx], np.ndarray], pairs: Tuple[int, ...] = ()):
        self.name = name
        self.size = size
        self.fn = fn
        self.pairs = pairs


class Ineq:
    """A strict condition; `fn` returns a margin that must be > margin_tol."""

    def __init__(self, name: str, fn: Callable[[_Ctx], float]):
        self.name = name
        self.fn = fn


def _off_right(v: np.ndarray) -> np.ndarray:
    return np.delete(v, RIGHT)


def coincide(i: int, j: int) -> Block:
    return Block(f"p(f({i}))=p(f({j}))", lambda n: n - 1, lambda c: c.p(i) - c.p(j), pairs=(i, j))


def align_diff(i: int, j: int) -> Block:
    """p(f(i)) - p(f(j)) parallel to `right` (n-2 scalars)."""
    return Block(f"p(f({i}))-p(f({j})) || right", lambda n: n - 2, lambda c: _off_right(c.p(i) - c.p(j)))


def align_tangent(i: int) -> Block:
    return Block(f"p(f'({i})) || right", lambda n: n - 2, lambda c: _off_right(c.p(i, 1)))


def coplanar_tangents(i: int, j: int) -> Block:
    """{p f'(i), p f'(j), right} span a plane: the parts orthogonal to `right` are parallel (n-3 scalars)."""
    def fn(c: _Ctx) -> np.ndarray:
        a, b = _off_right(c.p(i, 1)), _off_right(c.p(j, 1))
        return np.array([a[0] * b[k] - a[k] * b[0] for k in range(1, len(a))])
    return Block(f"coplanar(p f'({i}), p f'({j}), right)", lambda n: n - 3, fn)


def above_ineq(i: int, j: int) -> Ineq:
    return Ineq(f"f({i}) above f({j})", lambda c: float(c.f(i)[UP] - c.f(j)[UP]))


def right_of_ineq(i: int, j: int) -> Ineq:
    return Ineq(f"f({i}) right of f({j})", lambda c: float((c.p(i) - c.p(j))[RIGHT]))


def tangent_right_ineq(i: int) -> Ineq:
    return Ineq(f"p f'({i}) points right", lambda c: float(c.p(i, 1)[RIGHT]))


def exterior_angle_coeffs(a: np.ndarray, b: np.ndarray, n: int) -> Tuple[float, float]:
    r = np.zeros(n - 1)
    r[RIGHT] = 1.0
    (lam, mu), *_ = np.linalg.lstsq(np.column_stack([a, b]), r, rcond=None)
    return float(lam), float(mu)


def exterior_angle_ineq(i: int, j: int) -> Ineq:
    """right = lam p f'(i) + mu p f'(j) with min(lam, mu) <= 0; margin is -min(lam, mu)."""
    def fn(c: _Ctx) -> float:
        lam, mu = exterior_angle_coeffs(c.p(i, 1), c.p(j, 1), c.curve.n)
        return -min(lam, mu)
    return Ineq(f"right in exterior angle of p f'({i}), p f'({j})", fn)


def range_ineq(i: int, lo: float, hi: float) -> Ineq:
    return Ineq(f"{lo:.4g} <= a{i} < {hi:.4g}", lambda c: float(min(c.params[i] - lo, hi - c.params[i])))


# ---------------- systems ----------------
class StratumSystem:
    """Square system: #scalar equations == cycle dimension k + number of free points m."""

    def __init__(self, name: str, *, n: int, k: int, kind: Literal["long", "compact"], points: Sequence[PointSpec],
                 equations: Sequence[Block], inequalities: Sequence[Ineq] = (), ordered: bool = True):
        self.name = name
        self.n = n
        self.k = k
        self.kind = kind
        self.points = list(points)
        self.equations = list(equations)
        self.inequalities = list(inequalities)
        self.ordered = ordered
        self.free_idx = [i for i, p in enumerate(self.points) if p.mode == "free"]
        if not self.is_square:
            raise InputError(f"stratum {name} is not square: {self.n_equations} equations, {self.n_unknowns} unknowns")

    @property
    def m(self) -> int:
        return len(self.free_idx)

    @property
    def n_unknowns(self) -> int:
        return self.k + self.m

    @property
    def n_equations(self) -> int:
        return sum(b.size(self.n) for b in self.equations)

    @property
    def is_square(self) -> bool:
        return self.n_equations == self.n_unknowns

    # ---- unknown vector z = (u, free points) ----
    def params(self, z: np.ndarray) -> np.ndarray:
        free = z[self.k:]
        out = np.zeros(len(self.points))
        for slot, i in enumerate(self.free_idx):
            out[i] = free[slot]
        for i, p in enumerate(self.points):
            if p.mode == "anchor":
                out[i] = p.value
        for i, p in enumerate(self.points):
            if p.mode == "offset":
                out[i] = out[p.ref] + p.value
        return out

    def normalize(self, cycle: KnotCycle, z: np.ndarray) -> np.ndarray:
        z = np.array(z, dtype=float)
        if self.k:
            z[: self.k] = cycle.canonical(z[: self.k])
        if self.kind == "compact":
            z[self.k:] = np.mod(z[self.k:], TWO_PI)
        return z

    def residual(self, cycle: KnotCycle, z: np.ndarray) -> np.ndarray:
        ctx = _Ctx(cycle.curve(z[: self.k]), self.params(z))
        if not self.equations:
            return np.zeros(0)
        return np.concatenate([np.atleast_1d(b.fn(ctx)) for b in self.equations])

    def margins(self, cycle: KnotCycle, z: np.ndarray) -> List[Tuple[str, float]]:
        par = self.params(z)
        ctx = _Ctx(cycle.curve(z[: self.k]), par)
        out = [(q.name, q.fn(ctx)) for q in self.inequalities]
        if self.ordered and len(par) > 1:
            gaps = np.diff(par)
            out.append(("ordering", float(gaps.min())))
            if self.kind == "compact":
                out.append(("ordering", float(TWO_PI - (par[-1] - par[0]))))
        return out

    def describe(self) -> str:
        return f"{self.name}: n={self.n} k={self.k} m={self.m} equations={self.n_equations}"


# ---------------- Newton ----------------
def _jacobian(system: StratumSystem, cycle: KnotCycle, z: np.ndarray, F0: np.ndarray, cfg: RunConfig) -> np.ndarray:
    J = np.empty((F0.size, z.size))
    for j in range(z.size):
        h = cfg.fd_step * (1.0 + abs(z[j]))
        zp, zm = np.array(z), np.array(z)
        zp[j] += h
        zm[j] -= h
        J[:, j] = (system.residual(cycle, zp) - system.residual(cycle, zm)) / (2 * h)
    return J


def _newton(system: StratumSystem, cycle: KnotCycle, z0: np.ndarray, cfg: RunConfig) -> Optional[Tuple[np.ndarray, float, np.ndarray]]:
    z = np.array(z0, dtype=float)
    F = system.residual(cycle, z)
    for _ in range(cfg.newton_max_iter):
        nrm = float(np.max(np.abs(F))) if F.size else 0.0
        if nrm < cfg.newton_tol:
            J = _jacobian(system, cycle, z, F, cfg) if F.size else np.zeros((0, 0))
            return z, nrm, J
        J = _jacobian(system, cycle, z, F, cfg)
        try:
            step = np.linalg.solve(J, -F)
        except np.linalg.LinAlgError:
            step = np.linalg.lstsq(J, -F, rcond=None)[0]
        lam = 1.0
        while lam > 1e-4:
            zn = z + lam * step
            Fn = system.residual(cycle, zn)
            if np.linalg.norm(Fn) < np.linalg.norm(F):
                z, F = zn, Fn
                break
            lam *= 0.5
        else:
            return None
    return None


def _close(a: np.ndarray, b: np.ndarray, system: StratumSystem, cycle: KnotCycle, radius: float) -> bool:
    d = np.abs(a - b)
    for k, per in enumerate(cycle.periodic[: system.k]):
        if per:
            span = cycle.upper[k] - cycle.lower[k]
            d[k] = min(d[k], span - d[k])
    if system.kind == "compact":
        d[system.k:] = np.minimum(d[system.k:], TWO_PI - d[system.k:])
    return bool(np.max(d, initial=0.0) < radius)


def solve_square(system: StratumSystem, cycle: KnotCycle, seeds: Iterable[np.ndarray],
                 cfg: Optional[RunConfig] = None, tags: Sequence[str] = ()) -> List[Event]:
    """Damped Newton from every seed; dedup, drop inequality violators, keep the Jacobian sign."""
    cfg = cfg or RunConfig()
    if cycle.dim != system.k:
        raise InputError(f"{system.name} needs a {system.k}-dimensional cycle, got {cycle.dim}")
    seeds = [np.asarray(s, dtype=float) for s in seeds]
    if not seeds:
        raise InputError("solve_square needs at least one seed")

    def run(seed: np.ndarray):
        return _newton(system, cycle, seed, cfg)

    workers = worker_count(cfg)
    if workers > 1 and len(seeds) > 8:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run, seeds))
    else:
        results = [run(s) for s in seeds]

    roots: List[Tuple[np.ndarray, float, np.ndarray]] = []
    dropped = 0
    for res in results:
        if res is None:
            dropped += 1
            continue
        z, nrm, J = res
        z = system.normalize(cycle, z)
        if any(_close(z, r[0], system, cycle, cfg.dedup_radius) for r in roots):
            continue
        roots.append((z, nrm, J))
    log.debug("%s: %d seeds, %d diverged, %d distinct roots", system.name, len(seeds), dropped, len(roots))

    events: List[Event] = []
    for z, nrm, J in roots:
        margins = system.margins(cycle, z)
        worst = min((m for _, m in margins), default=np.inf)
        if worst <= -cfg.margin_tol:
            continue
        if worst <= cfg.margin_tol:
            name = min(margins, key=lambda x: x[1])[0]
            raise GenericityError(f"{system.name}: inequality '{name}' is tied", where={"z": tuple(np.round(z, 10))})
        if J.size:
            cond = np.linalg.cond(J)
            if not np.isfinite(cond) or cond > cfg.cond_threshold:
                raise NonTransverseError(f"{system.name}: near-singular Jacobian at a root",
                                         where={"z": tuple(np.round(z, 10)), "cond": float(cond)})
            jsign = 1 if np.linalg.det(J) > 0 else -1
        else:
            jsign = 1
        events.append(Event(stratum=system.name, u=tuple(float(x) for x in z[: system.k]),
                            config=tuple(float(x) for x in system.params(z)), residual=nrm,
                            jacobian_sign=jsign, condition_tags=list(tags) or [system.name]))
    events.sort(key=Event.sort_key)
    return events


# ---------------- seeding ----------------
def _free_grid(system: StratumSystem, cycle: KnotCycle, density: int) -> np.ndarray:
    m = system.m
    if m == 0:
        return np.zeros((1, 0))
    if system.kind == "compact":
        axis = (np.arange(density) + 0.5) * TWO_PI / density
    else:
        curve = cycle.curve(0.5 * (cycle.lower + cycle.upper))
        t0, t1 = curve.window
        axis = np.linspace(t0, t1, density)
    if system.ordered:
        combos = list(itertools.combinations(axis, m))
    else:
        combos = list(itertools.product(axis, repeat=m))
    return np.array(combos, dtype=float).reshape(-1, m)


def seed_grid(system: StratumSystem, cycle: KnotCycle, density: int = 8, keep: int = 400) -> List[np.ndarray]:
    """Chart grid x configuration grid, pruned per chart point to the seeds with the smallest coincidence residuals.

    Every chart point keeps at least one seed, so the pruning never empties a region of the family.
    """
    charts = cycle.grid_points() if system.k else np.zeros((1, 0))
    configs = _free_grid(system, cycle, density)
    if len(charts) * len(configs) <= keep:
        return [np.concatenate([u, a]) for u in charts for a in configs]
    per = max(1, keep // len(charts))
    seeds: List[np.ndarray] = []
    for u in charts:
        cell = [np.concatenate([u, a]) for a in configs]
        if len(cell) > per:
            scores = np.array([np.linalg.norm(system.residual(cycle, s)) for s in cell])
            cell = [cell[i] for i in np.argsort(scores, kind="stable")[:per]]
        seeds.extend(cell)
    return seeds


def seed_from_crossings(system: StratumSystem, cycle: KnotCycle, frames: Sequence[Sequence[float]],
                        cfg: Optional[RunConfig] = None) -> List[np.ndarray]:
    """Match every coincidence block to a crossing of the projected frame curve.

    A point shared by two blocks (a triple point) takes both crossings' values,
    which must agree to `merge_radius`.
    """
    cfg = cfg or RunConfig()
    pairs = [b.pairs for b in system.equations if b.pairs]
    seeds: List[np.ndarray] = []
    for u in frames:
        u = np.atleast_1d(np.asarray(u, dtype=float))
        try:
            cs = crossings(cycle.curve(u), cfg, oversample=cfg.track_oversample, strict=False)
        except GenericityError:
            continue
        ends = [(c.s, c.t) for c in cs] + [(c.t, c.s) for c in cs]
        for combo in itertools.product(ends, repeat=len(pairs)):
            vals: Dict[int, List[float]] = {}
            for (i, j), (x, y) in zip(pairs, combo):
                vals.setdefault(i, []).append(x)
                vals.setdefault(j, []).append(y)
            if any(max(v) - min(v) > cfg.merge_radius for v in vals.values()):
                continue
            par = {i: float(np.mean(v)) for i, v in vals.items()}
            free = []
            for i in system.free_idx:
                if i not in par:
                    break
                free.append(par[i])
            else:
                if system.ordered and np.any(np.diff(free) <= -cfg.merge_radius):
                    continue
                seeds.append(np.concatenate([u, free]))
    return seeds


# ---------------- counting ----------------
def count(events: Sequence[Event], mode: Literal["mod2", "signed", "total"] = "mod2") -> int:
    if mode == "mod2":
        return sum(e.multiplicity for e in events) % 2
    if mode == "total":
        return sum(e.multiplicity for e in events)
    return sum(e.multiplicity * e.jacobian_sign for e in events)


# ---------------- loop tracking ----------------
def triple_point_system(k: int = 1) -> StratumSystem:
    """Three strands of a knot in R^3 with a common projection point."""
    return StratumSystem("triple", n=3, k=k, kind="long",
                         points=[PointSpec.free("x"), PointSpec.free("y"), PointSpec.free("z")],
                         equations=[coincide(0, 1), coincide(0, 2)])


def alignment_system(k: int = 1) -> StratumSystem:
    """A crossing (b, d) whose strand b has projected tangent parallel to `right`."""
    return StratumSystem("alignment", n=3, k=k, kind="long",
                         points=[PointSpec.free("b"), PointSpec.free("d")],
                         equations=[coincide(0, 1), align_tangent(0)])


class _Frame:
    __slots__ = ("tau", "curve", "crossings", "word", "bits")

    def __init__(self, tau: float, curve: ParamCurve, cs: List[Crossing]):
        self.tau = tau
        self.curve = curve
        self.crossings = cs
        ends = sorted([(c.s, k, c.over == "s") for k, c in enumerate(cs)] + [(c.t, k, c.over == "t") for k, c in enumerate(cs)])
        label: Dict[int, int] = {}
        word = []
        for _, k, is_over in ends:
            label.setdefault(k, len(label))
            word.append((label[k], is_over))
        self.word = tuple(word)
        if ends:
            d = curve.project(np.array([e[0] for e in ends]), 1)
            self.bits = tuple(bool(x) for x in (_off_right_rows(d)[:, 0] > 0))
        else:
            self.bits = ()

    def endpoints(self) -> List[Tuple[float, int, bool]]:
        return sorted([(c.s, k, c.over == "s") for k, c in enumerate(self.crossings)]
                      + [(c.t, k, c.over == "t") for k, c in enumerate(self.crossings)])


def _off_right_rows(d: np.ndarray) -> np.ndarray:
    return np.delete(np.atleast_2d(d), RIGHT, axis=1)


def _same(a: _Frame, b: _Frame) -> bool:
    return a.word == b.word and a.bits == b.bits


class LoopTrack:
    """Result of `track_crossings`: elementary events plus the frames that bracket them."""

    def __init__(self, frames: int):
        self.frames = frames
        # (event, frame just before, frame just after)
        self.records: List[Tuple[TrackedEvent, _Frame, _Frame]] = []
        self.initial_crossings = 0

    @property
    def events(self) -> List[TrackedEvent]:
        return [r[0] for r in self.records]

    @property
    def triple_points(self) -> List[TrackedEvent]:
        return [e for e in self.events if e.kind == "triple"]


def _frame(loop: KnotCycle, tau: float, cfg: RunConfig, oversample: Optional[int] = None) -> _Frame:
    curve = loop.curve([tau])
    return _Frame(tau, curve, crossings(curve, cfg, oversample=oversample or cfg.track_oversample, strict=False))


def track_crossings(loop: KnotCycle, frames: Optional[int] = None, cfg: Optional[RunConfig] = None) -> LoopTrack:
    """Follow the crossing braid of a closed loop of knots in R^3 and bracket every change."""
    cfg = cfg or RunConfig()
    if loop.dim != 1 or loop.n != 3:
        raise InputError("track_crossings needs a 1-parameter loop of knots in R^3")
    loop = loop.aligned(cfg)
    F = frames or cfg.frames
    lo, hi = float(loop.lower[0]), float(loop.upper[0])
    taus = lo + (hi - lo) * np.arange(F) / F

    def build(tau: float) -> _Frame:
        return _frame(loop, tau, cfg)

    workers = worker_count(cfg)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            coarse = list(pool.map(build, taus))
    else:
        coarse = [build(t) for t in taus]
    track = LoopTrack(F)
    track.initial_crossings = len(coarse[0].crossings)

    for i in range(F):
        a = coarse[i]
        b = coarse[(i + 1) % F]
        if i == F - 1:
            b = _Frame(hi, b.curve, b.crossings)
        if _same(a, b):
            continue
        _bisect(loop, a, b, cfg, track, depth=0)
    track.records.sort(key=lambda r: r[0].tau)
    log.debug("tracked %d frames, %d events", F, len(track.events))
    return track


def _bisect(loop: KnotCycle, a: _Frame, b: _Frame, cfg: RunConfig, track: LoopTrack, depth: int) -> None:
    width = b.tau - a.tau
    if width <= cfg.event_tol:
        track.records.extend((ev, a, b) for ev in _classify(loop, a, b, cfg))
        return
    if depth >= cfg.refine_depth:
        raise UnresolvedEventError("events closer than the refinement depth can separate",
                                   where={"tau0": a.tau, "tau1": b.tau})
    mid_tau = 0.5 * (a.tau + b.tau)
    mid = _frame(loop, mid_tau, cfg)
    if not _same(a, mid):
        _bisect(loop, a, mid, cfg, track, depth + 1)
    if not _same(mid, b):
        _bisect(loop, mid, b, cfg, track, depth + 1)


# below this |sin| a crossing counts as part of a tangency of the projection
TANGENT_SIN = 1e-2


def _crossing_sin(curve: ParamCurve, c: Crossing) -> float:
    ds, dt = curve.project(c.s, 1), curve.project(c.t, 1)
    return float(abs(ds[0] * dt[1] - ds[1] * dt[0]) / (np.linalg.norm(ds) * np.linalg.norm(dt)))


def _unmatched(a: _Frame, b: _Frame, radius: float) -> List[Crossing]:
    return [c for c in a.crossings
            if not any(abs(c.s - d.s) < radius and abs(c.t - d.t) < radius for d in b.crossings)]


def _tangency_only(a: _Frame, b: _Frame, cfg: RunConfig) -> bool:
    """Every crossing present on one side only sits in a near-tangency."""
    odd = [(a.curve, c) for c in _unmatched(a, b, cfg.merge_radius)]
    odd += [(b.curve, c) for c in _unmatched(b, a, cfg.merge_radius)]
    return bool(odd) and all(_crossing_sin(curve, c) < TANGENT_SIN for curve, c in odd)


def _count_change(a: _Frame, b: _Frame) -> List[TrackedEvent]:
    na, nb = len(a.crossings), len(b.crossings)
    kind = "birth" if nb > na else "death"
    return [TrackedEvent(kind=kind, tau=0.5 * (a.tau + b.tau), crossings_before=na, crossings_after=nb)]


def _classify(loop: KnotCycle, a: _Frame, b: _Frame, cfg: RunConfig) -> List[TrackedEvent]:
    tau = 0.5 * (a.tau + b.tau)
    if len(a.crossings) != len(b.crossings):
        return _count_change(a, b)
    if a.word != b.word:
        tri = find_triple(a.crossings) or find_triple(b.crossings)
        if tri is None:
            # reordering without a visible triple point: look again on a finer polyline
            fine = 4 * cfg.track_oversample
            a, b = _frame(loop, a.tau, cfg, fine), _frame(loop, b.tau, cfg, fine)
            if _same(a, b):
                log.debug("polyline artefact near tau=%.12f vanished on the finer polyline", tau)
                return []
            if len(a.crossings) != len(b.crossings):
                return _count_change(a, b)
            tri = find_triple(a.crossings) or find_triple(b.crossings)
        if tri is None:
            if _tangency_only(a, b, cfg):
                log.debug("crossing pair at a tangency flickered near tau=%.12f", tau)
                return []
            raise UnresolvedEventError("crossing order changed without a triple point", where={"tau": tau})
        x, y, z = tri
        na, nb = len(a.crossings), len(b.crossings)
        h = tuple(float(a.curve.eval(p)[UP]) for p in (x, y, z))
        return [TrackedEvent(kind="triple", tau=tau, params=(x, y, z), heights=h, crossings_before=na, crossings_after=nb)]
    na, nb = len(a.crossings), len(b.crossings)
    out = []
    ea = a.endpoints()
    for pos, (ba, bb) in enumerate(zip(a.bits, b.bits)):
        if ba != bb:
            x = ea[pos][0]
            out.append(TrackedEvent(kind="alignment", tau=tau, params=(x,), crossings_before=na, crossings_after=nb))
    if not out:
        raise UnresolvedEventError("unclassified change of the crossing braid", where={"tau": tau})
    return out


def find_triple(cs: Sequence[Crossing], radius: float = 1e-6) -> Optional[Tuple[float, float, float]]:
    """Three crossings squeezed into one projection point; returns the strand parameters x<y<z."""
    if len(cs) < 3:
        return None
    P = np.array([c.point for c in cs])
    tree = cKDTree(P)
    best = None
    for i, j in tree.query_pairs(radius):
        for k in tree.query_ball_point(P[i], radius):
            if k in (i, j) or np.linalg.norm(P[k] - P[j]) > radius:
                continue
            vals = sorted([cs[i].s, cs[i].t, cs[j].s, cs[j].t, cs[k].s, cs[k].t])
            strands = [0.5 * (vals[0] + vals[1]), 0.5 * (vals[2] + vals[3]), 0.5 * (vals[4] + vals[5])]
            spread = max(vals[1] - vals[0], vals[3] - vals[2], vals[5] - vals[4])
            gap = min(vals[2] - vals[1], vals[4] - vals[3])
            if spread >= gap:
                continue
            size = np.linalg.norm(P[i] - P[j]) + np.linalg.norm(P[j] - P[k]) + np.linalg.norm(P[k] - P[i])
            if best is None or size < best[0]:
                best = (size, tuple(strands))
    return None if best is None else best[1]
