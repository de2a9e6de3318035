from __future__ import annotations
import logging
from functools import lru_cache
from typing import Callable, List, Literal, Optional, Sequence, Tuple

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.spatial import cKDTree

from .errors import ConstructionError, GenericityError, InputError, UnsupportedDerivativeError
from .schema import Crossing, GenericityReport, RunConfig

log = logging.getLogger(__name__)

TWO_PI = 2.0 * np.pi
UP = 0      # coordinate index of "up"
RIGHT = 0   # index of "right" inside the projection R^{n-1}

CurveKind = Literal["long", "compact"]


# ---------------- points ----------------
def project_point(x: np.ndarray) -> np.ndarray:
    """p: R^n -> R^{n-1}, quotient by `up` (drops the first coordinate)."""
    return np.asarray(x, dtype=float)[..., 1:]


def above(x: Sequence[float], y: Sequence[float], tol: float = 1e-9) -> bool:
    x, y = np.asarray(x, float), np.asarray(y, float)
    if np.linalg.norm(project_point(x) - project_point(y)) > tol:
        return False
    return float(x[UP] - y[UP]) > 0.0


def to_the_right(x: Sequence[float], y: Sequence[float], tol: float = 1e-9) -> bool:
    """p(x) - p(y) is a positive multiple of `right`."""
    d = project_point(np.asarray(x, float)) - project_point(np.asarray(y, float))
    side = np.delete(d, RIGHT)
    return bool(d[RIGHT] > tol and np.all(np.abs(side) <= tol))


# ---------------- axes ----------------
def axis_frame(n: int, cfg: RunConfig) -> Optional[np.ndarray]:
    """Rotation whose rows are cfg.up, cfg.right and an oriented completion; None for the standard axes."""
    if cfg.up is None:
        return None
    up, right = np.asarray(cfg.up, dtype=float), np.asarray(cfg.right, dtype=float)
    if up.size != n:
        raise InputError(f"configured axes live in R^{up.size}, the curves in R^{n}")
    Q, R = np.linalg.qr(np.vstack([up, right, np.eye(n)]).T)
    M = np.array(Q.T)
    M[:2] *= np.sign(np.diag(R)[:2])[:, None]
    if np.linalg.det(M) < 0:
        M[-1] *= -1.0
    return M


def align_axes(curve: "ParamCurve", cfg: RunConfig) -> "ParamCurve":
    """The curve in coordinates where cfg.up is e_0 and cfg.right is e_1."""
    M = axis_frame(curve.n, cfg)
    if M is None:
        return curve
    return ParamCurve(curve.kind, curve.ts, curve.pts @ M.T, window=curve.window,
                      tail=None if curve.tail is None else M @ curve.tail)


# ---------------- curves ----------------
class ParamCurve:
    """A long or compact knot interpolated by a cubic spline.

    Compact knots are 2*pi periodic. Long knots are spline-interpolated on
    `window` and continue linearly with velocity `tail` on both sides; both
    tails lie on the line through f(t0) with direction `tail`.
    """

    __slots__ = ("kind", "n", "ts", "pts", "window", "tail", "_spline")

    def __init__(self, kind: CurveKind, ts: Sequence[float], pts: np.ndarray,
                 window: Optional[Tuple[float, float]] = None, tail: Optional[Sequence[float]] = None):
        ts = np.array(ts, dtype=float)
        pts = np.atleast_2d(np.array(pts, dtype=float))
        if kind not in ("long", "compact"):
            raise InputError(f"unknown curve kind {kind!r}")
        if pts.shape[0] != ts.shape[0] or ts.shape[0] < 4:
            raise InputError("a curve needs at least 4 samples, one point per parameter")
        n = pts.shape[1]
        if not 3 <= n <= 5:
            raise InputError(f"ambient dimension {n} not supported (3..5)")
        if np.any(np.diff(ts) <= 0):
            raise InputError("sample parameters must be strictly increasing")
        self.kind = kind
        self.n = n
        self.ts = ts
        self.pts = pts
        if kind == "compact":
            if ts[0] < 0 or ts[-1] >= TWO_PI:
                raise InputError("compact samples must lie in [0, 2pi)")
            ext_t = np.append(ts, ts[0] + TWO_PI)
            ext_p = np.vstack([pts, pts[:1]])
            self.window = (0.0, TWO_PI)
            self.tail = None
            self._spline = CubicSpline(ext_t, ext_p, bc_type="periodic")
        else:
            t0, t1 = (float(ts[0]), float(ts[-1])) if window is None else (float(window[0]), float(window[1]))
            if abs(t0 - ts[0]) > 1e-12 or abs(t1 - ts[-1]) > 1e-12:
                raise InputError("long-knot window must span the samples exactly")
            v = (pts[-1] - pts[0]) / (t1 - t0) if tail is None else np.asarray(tail, dtype=float)
            if np.linalg.norm(v) == 0:
                raise InputError("long-knot tail direction is zero")
            self.window = (t0, t1)
            self.tail = v
            self._spline = CubicSpline(ts, pts, bc_type=((1, v), (1, v)))
        for a in (self.ts, self.pts):
            a.setflags(write=False)

    # ---- constructors ----
    @classmethod
    def from_function(cls, fn: Callable[[np.ndarray], np.ndarray], kind: CurveKind, samples: int | Sequence[float] = 256,
                      window: Optional[Tuple[float, float]] = None, tail: Optional[Sequence[float]] = None) -> "ParamCurve":
        if isinstance(samples, (int, np.integer)):
            if kind == "compact":
                ts = np.linspace(0.0, TWO_PI, int(samples), endpoint=False)
            else:
                if window is None:
                    raise InputError("long curves need a parameter window")
                ts = np.linspace(window[0], window[1], int(samples))
        else:
            ts = np.asarray(samples, dtype=float)
        pts = np.asarray(fn(ts), dtype=float)
        return cls(kind, ts, pts, window=window, tail=tail)

    # ---- evaluation ----
    def eval(self, t, order: int = 0) -> np.ndarray:
        if order > 3 or order < 0:
            raise UnsupportedDerivativeError(f"derivative order {order} not supported (0..3)")
        t = np.asarray(t, dtype=float)
        if self.kind == "compact":
            return self._spline(np.mod(t, TWO_PI), nu=order)
        t0, t1 = self.window
        inside = np.clip(t, t0, t1)
        out = self._spline(inside, nu=order)
        if order >= 2:
            mask = (t < t0) | (t > t1)
            if np.ndim(t) == 0:
                return np.zeros(self.n) if mask else out
            out[mask] = 0.0
            return out
        if order == 1:
            return out
        return out + (t - inside)[..., None] * self.tail

    def __call__(self, t, order: int = 0) -> np.ndarray:
        return self.eval(t, order)

    def project(self, t, order: int = 0) -> np.ndarray:
        return project_point(self.eval(t, order))

    def line(self, t) -> np.ndarray:
        """The standard linear embedding this long knot coincides with near infinity."""
        t = np.asarray(t, dtype=float)
        return self.pts[0] + (t - self.window[0])[..., None] * self.tail

    # ---- derived curves ----
    def with_points(self, pts: np.ndarray) -> "ParamCurve":
        return ParamCurve(self.kind, self.ts, pts, window=self.window if self.kind == "long" else None,
                          tail=self.tail)

    def perturb(self, bump: Callable[[np.ndarray], np.ndarray]) -> "ParamCurve":
        d = np.asarray(bump(self.ts), dtype=float)
        if self.kind == "long":
            # keep the tails on the standard line
            d[0] = 0.0
            d[-1] = 0.0
        return self.with_points(self.pts + d)

    def mirror(self) -> "ParamCurve":
        pts = np.array(self.pts)
        pts[:, UP] *= -1.0
        tail = None if self.tail is None else np.array(self.tail)
        if tail is not None:
            tail[UP] *= -1.0
        return ParamCurve(self.kind, self.ts, pts, window=self.window if self.kind == "long" else None, tail=tail)

    def reversed(self) -> "ParamCurve":
        if self.kind == "compact":
            ts = np.mod(TWO_PI - self.ts, TWO_PI)
            order = np.argsort(ts)
            return ParamCurve("compact", ts[order], self.pts[order])
        t0, t1 = self.window
        return ParamCurve("long", -self.ts[::-1], self.pts[::-1], window=(-t1, -t0), tail=-self.tail)

    def resample(self, factor: int = 2) -> "ParamCurve":
        ts = _refine_params(self.ts, factor, closed=self.kind == "compact")
        return ParamCurve(self.kind, ts, self.eval(ts), window=self.window if self.kind == "long" else None,
                          tail=self.tail)

    def polyline(self, oversample: int = 4, tail_extent: float = 0.0) -> Tuple[np.ndarray, np.ndarray]:
        ts = _refine_params(self.ts, oversample, closed=self.kind == "compact")
        if self.kind == "long" and tail_extent > 0:
            t0, t1 = self.window
            ts = np.concatenate([[t0 - tail_extent], ts, [t1 + tail_extent]])
        return ts, self.eval(ts)


def _refine_params(ts: np.ndarray, factor: int, closed: bool) -> np.ndarray:
    if factor <= 1:
        return np.array(ts)
    nodes = np.append(ts, ts[0] + TWO_PI) if closed else np.asarray(ts)
    frac = np.arange(factor) / factor
    out = (nodes[:-1, None] + np.diff(nodes)[:, None] * frac[None, :]).ravel()
    return out if closed else np.append(out, nodes[-1])


def project(curve: ParamCurve, t: float) -> np.ndarray:
    """f_1(t) = p(f(t))."""
    return curve.project(t)


# ---------------- crossings ----------------
def _candidate_pairs(lo: np.ndarray, hi: np.ndarray, chunk: int = 1 << 20):
    """Segment pairs whose x-extents overlap, from one sort by left edge.

    Yields index arrays (ii, jj) in bounded chunks; every unordered pair shows
    up once, from the segment that starts further left.
    """
    N = len(lo)
    order = np.argsort(lo[:, 0], kind="stable")
    left = lo[order, 0]
    end = np.searchsorted(left, hi[order, 0], side="right")
    counts = np.maximum(end - np.arange(N) - 1, 0)
    cum = np.concatenate([[0], np.cumsum(counts)])
    k0 = 0
    while k0 < N:
        k1 = int(np.searchsorted(cum, cum[k0] + chunk, side="right")) - 1
        k1 = min(max(k1, k0 + 1), N)
        cs = counts[k0:k1]
        total = int(cs.sum())
        if total:
            rows = np.repeat(np.arange(k0, k1), cs)
            first = np.repeat(np.cumsum(cs) - cs, cs)
            cols = rows + 1 + (np.arange(total) - first)
            yield order[rows], order[cols]
        k0 = k1


def _segment_hits(P: np.ndarray, closed: bool) -> List[Tuple[int, int, float, float]]:
    """All proper intersections of polyline segments i<j (non-adjacent)."""
    A = P[:-1] if not closed else P
    B = P[1:] if not closed else np.roll(P, -1, axis=0)
    D = B - A
    N = len(A)
    lo = np.minimum(A, B)
    hi = np.maximum(A, B)
    hits: List[Tuple[int, int, float, float]] = []
    for ii, jj in _candidate_pairs(lo, hi):
        ok = (lo[ii, 1] <= hi[jj, 1]) & (hi[ii, 1] >= lo[jj, 1])
        ii, jj = ii[ok], jj[ok]
        ii, jj = np.minimum(ii, jj), np.maximum(ii, jj)
        keep = jj > ii + 1
        if closed:
            keep &= ~((ii == 0) & (jj == N - 1))
        ii, jj = ii[keep], jj[keep]
        if ii.size == 0:
            continue
        d1, d2 = D[ii], D[jj]
        w = A[jj] - A[ii]
        den = d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0]
        ok = np.abs(den) > 1e-300
        with np.errstate(divide="ignore", invalid="ignore"):
            a = (w[:, 0] * d2[:, 1] - w[:, 1] * d2[:, 0]) / den
            b = (w[:, 0] * d1[:, 1] - w[:, 1] * d1[:, 0]) / den
        ok &= (a >= 0) & (a < 1) & (b >= 0) & (b < 1)
        for i, j, x, y in zip(ii[ok], jj[ok], a[ok], b[ok]):
            hits.append((int(i), int(j), float(x), float(y)))
    hits.sort()
    return hits


def refine_crossing(curve: ParamCurve, s: float, t: float, tol: float = 1e-13, max_iter: int = 40,
                    reach: Optional[Tuple[float, float]] = None,
                    residual_tol: float = 1e-11) -> Optional[Tuple[float, float, float]]:
    """Newton on p f(s) - p f(t) = 0. Returns (s, t, |sin angle|).

    None when the iteration does not converge, or when it walks further than
    `reach` = (ds, dt) from the seed.
    """
    s0, t0 = s, t
    for _ in range(max_iter):
        F = curve.project(s) - curve.project(t)
        ds, dt = curve.project(s, 1), curve.project(t, 1)
        J = np.column_stack([ds, -dt])
        try:
            step = np.linalg.solve(J, -F)
        except np.linalg.LinAlgError:
            return None
        if not np.all(np.isfinite(step)):
            return None
        s, t = s + step[0], t + step[1]
        if reach is not None and (abs(s - s0) > reach[0] or abs(t - t0) > reach[1]):
            return None
        if np.max(np.abs(step)) < tol:
            break
    if np.linalg.norm(curve.project(s) - curve.project(t)) > residual_tol:
        return None
    ds, dt = curve.project(s, 1), curve.project(t, 1)
    sin = abs(ds[0] * dt[1] - ds[1] * dt[0]) / (np.linalg.norm(ds) * np.linalg.norm(dt))
    return float(s), float(t), float(sin)


# seeds may drift this many polyline segments before a root is rejected
REACH_SEGMENTS = 8


def crossings(curve: ParamCurve, cfg: Optional[RunConfig] = None, oversample: int = 4,
              strict: bool = True) -> List[Crossing]:
    """Double points of the planar projection of a knot in R^3, sorted by (s, t).

    With strict=False tangential crossings and near-triple points are kept
    instead of raising, and polyline hits whose refinement fails are skipped;
    the loop tracker needs them right at an event.
    """
    cfg = cfg or RunConfig()
    if curve.n != 3:
        raise InputError("crossings() needs a knot in R^3")
    closed = curve.kind == "compact"
    extent = 0.0
    if not closed:
        span = float(np.ptp(project_point(curve.pts), axis=0).max())
        extent = 4.0 * span / max(np.linalg.norm(project_point(curve.tail)), 1e-12) + 1.0
    ts, P3 = curve.polyline(oversample, tail_extent=extent)
    P = project_point(P3)
    seg_t = ts if not closed else np.append(ts, ts[0] + TWO_PI)
    out: List[Crossing] = []
    for i, j, a, b in _segment_hits(P, closed):
        hs, ht = seg_t[i + 1] - seg_t[i], seg_t[j + 1] - seg_t[j]
        s0 = seg_t[i] + a * hs
        t0 = seg_t[j] + b * ht
        root = refine_crossing(curve, s0, t0, reach=(REACH_SEGMENTS * hs, REACH_SEGMENTS * ht))
        if root is None:
            if strict:
                raise GenericityError("crossing refinement did not converge", where={"s": s0, "t": t0})
            log.debug("dropped an unrefinable polyline hit near (%.6g, %.6g)", s0, t0)
            continue
        s, t, sin = root
        if closed:
            s, t = s % TWO_PI, t % TWO_PI
        if s > t:
            s, t = t, s
        if strict and sin < 1.0 / cfg.cond_threshold ** 0.5:
            log.warning("tangential crossing near (%.6g, %.6g)", s, t)
            raise GenericityError("tangential crossing of the projection", where={"s": s, "t": t})
        if any(abs(c.s - s) < cfg.merge_radius and abs(c.t - t) < cfg.merge_radius for c in out):
            continue
        out.append(make_crossing(curve, s, t, cfg))
    out.sort(key=lambda c: (c.s, c.t))
    if strict:
        _check_triple_points(out)
    return out


def make_crossing(curve: ParamCurve, s: float, t: float, cfg: RunConfig) -> Crossing:
    fs, ft = curve.eval(s), curve.eval(t)
    dh = float(fs[UP] - ft[UP])
    if abs(dh) <= cfg.margin_tol:
        raise GenericityError("strands meet in space (no over/under)", where={"s": s, "t": t})
    ds, dt = curve.project(s, 1), curve.project(t, 1)
    frame_sign = 1 if ds[0] * dt[1] - ds[1] * dt[0] > 0 else -1
    over = "s" if dh > 0 else "t"
    sign = frame_sign if over == "s" else -frame_sign
    return Crossing(s=s, t=t, sign=sign, frame_sign=frame_sign, over=over,
                    point=tuple(float(x) for x in project_point(fs)))


def _check_triple_points(cs: List[Crossing], tol: float = 1e-9) -> None:
    if len(cs) < 2:
        return
    pts = np.array([c.point for c in cs])
    for i, j in cKDTree(pts).query_pairs(tol):
        raise GenericityError("triple point of the projection",
                              where={"s1": cs[i].s, "t1": cs[i].t, "s2": cs[j].s, "t2": cs[j].t})


# ---------------- embedding checks ----------------
def min_strand_distance(curve: ParamCurve, radius: float, oversample: int = 2) -> float:
    """Smallest distance between two points of the curve closer than `radius` in space
    but more than 4*radius apart along the curve; inf if there is none."""
    ts, P = curve.polyline(oversample)
    seg = np.linalg.norm(np.diff(P, axis=0), axis=1)
    arc = np.concatenate([[0.0], np.cumsum(seg)])
    total = arc[-1] + (np.linalg.norm(P[0] - P[-1]) if curve.kind == "compact" else np.inf)
    best = np.inf
    for i, j in cKDTree(P).query_pairs(radius):
        along = abs(arc[j] - arc[i])
        along = min(along, total - along)
        if along > 4.0 * radius:
            best = min(best, float(np.linalg.norm(P[i] - P[j])))
    return best


def check_embedded(curve: ParamCurve, radius: float) -> None:
    d = min_strand_distance(curve, radius)
    if np.isfinite(d):
        raise ConstructionError("curve comes closer to itself than allowed", where={"distance": d, "radius": radius})


# ---------------- families ----------------
class KnotCycle:
    """A k-parameter family u -> f_u of curves over a chart box of the parameter manifold."""

    def __init__(self, dim: int, domain: str, generator: Callable[[np.ndarray], ParamCurve], *,
                 kind: CurveKind, n: int, lower: Sequence[float], upper: Sequence[float],
                 periodic: Optional[Sequence[bool]] = None, grid: Optional[Sequence[int]] = None,
                 name: str = "", params: Optional[dict] = None,
                 canonical: Optional[Callable[[np.ndarray], np.ndarray]] = None):
        if len(lower) != dim or len(upper) != dim:
            raise InputError("chart bounds must have one entry per cycle dimension")
        self.dim = dim
        self.domain = domain
        self.kind = kind
        self.n = n
        self.lower = np.asarray(lower, dtype=float)
        self.upper = np.asarray(upper, dtype=float)
        self.periodic = tuple(periodic) if periodic is not None else (domain == "circle",) * dim
        self.grid = tuple(grid) if grid is not None else (16,) * dim
        self.name = name
        self.params = dict(params or {})
        self._generator = generator
        self._canonical = canonical
        self._cached = lru_cache(maxsize=4096)(self._build)
        self._axes_applied = False

    def aligned(self, cfg: RunConfig) -> "KnotCycle":
        """The same family in the coordinates of cfg.up / cfg.right; idempotent."""
        if self._axes_applied or axis_frame(self.n, cfg) is None:
            return self
        gen = self._generator
        out = KnotCycle(self.dim, self.domain, lambda u: align_axes(gen(u), cfg), kind=self.kind, n=self.n,
                        lower=self.lower, upper=self.upper, periodic=self.periodic, grid=self.grid,
                        name=self.name, params=self.params, canonical=self._canonical)
        out._axes_applied = True
        return out

    def _build(self, key: Tuple[float, ...]) -> ParamCurve:
        return self._generator(np.asarray(key, dtype=float))

    def curve(self, u: Sequence[float] = ()) -> ParamCurve:
        return self._cached(tuple(float(x) for x in np.atleast_1d(np.asarray(u, dtype=float))) if self.dim else ())

    def partial(self, u: Sequence[float], t: float, axis: int, h: float = 1e-6) -> np.ndarray:
        e = np.zeros(self.dim)
        e[axis] = h
        u = np.asarray(u, dtype=float)
        return (self.curve(u + e).eval(t) - self.curve(u - e).eval(t)) / (2 * h)

    def grid_points(self, density: Optional[Sequence[int]] = None) -> np.ndarray:
        dens = tuple(density) if density is not None else self.grid
        if self.dim == 0:
            return np.zeros((1, 0))
        axes = []
        for k in range(self.dim):
            m = dens[k]
            if self.periodic[k]:
                axes.append(self.lower[k] + (self.upper[k] - self.lower[k]) * np.arange(m) / m)
            else:
                axes.append(np.linspace(self.lower[k], self.upper[k], m))
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=1)

    def wrap(self, u: np.ndarray) -> np.ndarray:
        u = np.array(u, dtype=float)
        for k, per in enumerate(self.periodic):
            if per:
                span = self.upper[k] - self.lower[k]
                u[k] = self.lower[k] + np.mod(u[k] - self.lower[k], span)
        return u

    def canonical(self, u: np.ndarray) -> np.ndarray:
        """Representative of chart point u (periodic axes wrapped, or the chart's own rule)."""
        if self._canonical is not None:
            return np.asarray(self._canonical(np.array(u, dtype=float)), dtype=float)
        return self.wrap(u)


def genericity_report(cycle: KnotCycle, cfg: Optional[RunConfig] = None,
                      density: Optional[Sequence[int]] = None, near_radius: float = 1e-4) -> GenericityReport:
    cfg = cfg or RunConfig()
    rep = GenericityReport()
    pts = cycle.grid_points(density)
    # closedness across periodic chart edges
    for k, per in enumerate(cycle.periodic):
        if not per:
            continue
        u0 = np.array(cycle.lower, dtype=float)
        u1 = np.array(u0)
        u1[k] = cycle.upper[k]
        c0, c1 = cycle.curve(u0), cycle.curve(u1)
        ts = np.linspace(*c0.window, 64) if c0.kind == "long" else np.linspace(0, TWO_PI, 64, endpoint=False)
        if np.max(np.abs(c0.eval(ts) - c1.eval(ts))) > 1e-8:
            rep.not_closed = True
    if cycle.n != 3:
        rep.frames_checked = len(pts)
        return rep
    for u in pts:
        curve = cycle.curve(u)
        rep.frames_checked += 1
        try:
            cs = crossings(curve, cfg)
        except GenericityError as e:
            rep.non_transverse.append({**{f"u{k}": float(x) for k, x in enumerate(u)}, **e.where})
            continue
        for c in cs:
            for par in (c.s, c.t):
                if np.linalg.norm(curve.project(par, 1)) < 1e-8:
                    rep.vertical_tangents.append({**{f"u{k}": float(x) for k, x in enumerate(u)}, "t": par})
        if len(cs) >= 2:
            P = np.array([c.point for c in cs])
            for i, j in cKDTree(P).query_pairs(near_radius):
                rep.near_triple.append({**{f"u{k}": float(x) for k, x in enumerate(u)}, "s": cs[i].s, "t": cs[j].s})
    return rep
