from __future__ import annotations
import logging
from typing import Dict, List, Literal, Optional, Sequence, Tuple

import numpy as np

from .curve_model import UP, KnotCycle, ParamCurve, align_axes, crossings, genericity_report
from .errors import GenericityError, InputError, UnresolvedEventError
from .router import class_signature, normalize_class
from .schema import Crossing, Evaluation, Event, RunConfig, StratumCount
from .strata_engine import (
    LoopTrack,
    PointSpec,
    StratumSystem,
    above_ineq,
    align_diff,
    align_tangent,
    alignment_system,
    coincide,
    coplanar_tangents,
    count,
    exterior_angle_coeffs,
    exterior_angle_ineq,
    range_ineq,
    right_of_ineq,
    seed_from_crossings,
    seed_grid,
    solve_square,
    tangent_right_ineq,
    track_crossings,
    triple_point_system,
)

log = logging.getLogger(__name__)

PI = np.pi


# ---------------- strata ----------------
def tt_strata(n: int) -> Dict[str, StratumSystem]:
    """The three varieties whose intersection parity is the mod 2 Teiblum-Turchin class."""
    if n < 3:
        raise InputError("tt_strata needs n >= 3")
    k = 3 * n - 8
    free = lambda labels: [PointSpec.free(x) for x in labels]
    sa = StratumSystem(
        "Sa", n=n, k=k, kind="long", points=free("abcde"),
        equations=[coincide(0, 3), coincide(4, 2), coincide(4, 1)],
        inequalities=[above_ineq(0, 3), above_ineq(4, 2), above_ineq(4, 1)],
    )
    sb = StratumSystem(
        "Sb", n=n, k=k, kind="long", points=free("abcd"),
        equations=[coincide(0, 2), coincide(1, 3), align_tangent(1)],
        inequalities=[above_ineq(0, 2), above_ineq(3, 1), tangent_right_ineq(1)],
    )
    sc_eqs = [coincide(0, 1), coincide(0, 2)]
    if n > 3:
        sc_eqs.append(coplanar_tangents(0, 1))
    sc = StratumSystem(
        "Sc", n=n, k=k, kind="long", points=free("abc"), equations=sc_eqs,
        inequalities=[above_ineq(0, 1), above_ineq(2, 0), exterior_angle_ineq(0, 1)],
    )
    return {"Sa": sa, "Sb": sb, "Sc": sc}


def compact_strata(class_id: str, n: int) -> Dict[str, StratumSystem]:
    cls = normalize_class(class_id)
    if cls == "TT":
        raise InputError("TT is a class of long knots; use tt_strata")
    _, k = class_signature(cls, n)
    if cls == "A":
        return {"A": StratumSystem(
            "A", n=n, k=k, kind="compact", ordered=False,
            points=[PointSpec.anchor(0.0, "0"), PointSpec.anchor(PI, "pi")],
            equations=[coincide(0, 1)], inequalities=[above_ineq(0, 1)])}
    if cls == "B":
        return {
            "Ba": StratumSystem(
                "Ba", n=n, k=k, kind="compact", ordered=False,
                points=[PointSpec.free("alpha"), PointSpec.offset(0, PI, "alpha+pi")],
                equations=[coincide(0, 1)], inequalities=[above_ineq(0, 1), range_ineq(0, 0.0, PI)]),
            "Bb": StratumSystem(
                "Bb", n=n, k=k, kind="compact", ordered=False,
                points=[PointSpec.anchor(0.0, "0"), PointSpec.anchor(PI, "pi")],
                equations=[align_diff(0, 1)], inequalities=[right_of_ineq(0, 1)]),
        }
    if cls == "C":
        return {
            "Ca": StratumSystem(
                "Ca", n=n, k=k, kind="compact", ordered=False,
                points=[PointSpec.free("alpha"), PointSpec.offset(0, PI, "alpha+pi"),
                        PointSpec.offset(0, PI / 2, "alpha+pi/2"), PointSpec.offset(0, 3 * PI / 2, "alpha+3pi/2")],
                equations=[coincide(0, 1), coincide(2, 3)],
                inequalities=[above_ineq(1, 0), above_ineq(2, 3), range_ineq(0, 0.0, PI / 2)]),
            "Cb": StratumSystem(
                "Cb", n=n, k=k, kind="compact", ordered=False,
                points=[PointSpec.anchor(0.0, "0"), PointSpec.anchor(PI, "pi"),
                        PointSpec.anchor(PI / 2, "pi/2"), PointSpec.anchor(3 * PI / 2, "3pi/2")],
                equations=[coincide(0, 1), align_diff(2, 3)],
                inequalities=[above_ineq(1, 0), right_of_ineq(2, 3)]),
        }
    out = {"Da": StratumSystem(
        "Da", n=n, k=k, kind="compact",
        points=[PointSpec.free(x) for x in ("alpha", "beta", "gamma", "delta")],
        equations=[coincide(0, 2), coincide(1, 3)],
        inequalities=[above_ineq(2, 0), above_ineq(1, 3)])}
    # void for n = 3
    if n > 3:
        out["Db"] = StratumSystem(
            "Db", n=n, k=k, kind="compact",
            points=[PointSpec.anchor(0.0, "0"), PointSpec.free("beta"), PointSpec.free("gamma"), PointSpec.free("delta")],
            equations=[coincide(2, 0), align_diff(3, 1)],
            inequalities=[above_ineq(2, 0), right_of_ineq(3, 1)])
    return out


def all_shipped_systems(n: int) -> List[StratumSystem]:
    systems = list(tt_strata(n).values()) if 3 * n - 8 >= 0 else []
    for cls in ("A", "B", "C", "D"):
        systems.extend(compact_strata(cls, n).values())
    return systems


# ---------------- helpers ----------------
def _check_cycle(cycle: KnotCycle, class_id: str) -> None:
    kind, dim = class_signature(class_id, cycle.n)
    if cycle.kind != kind:
        raise InputError(f"class {class_id} is evaluated on {kind} knots, got a {cycle.kind} cycle")
    if cycle.dim != dim:
        raise InputError(f"class {class_id}({cycle.n}) needs a {dim}-dimensional cycle, got {cycle.dim}",
                         where={"expected": dim, "got": cycle.dim})


def _stratum_count(name: str, events: List[Event]) -> StratumCount:
    return StratumCount(stratum=name, events=events, count_total=count(events, "total"),
                        count_mod2=count(events, "mod2"), count_signed=count(events, "signed"))


def _evaluation(class_id: str, n: int, per: Dict[str, StratumCount], diagnostics: dict) -> Evaluation:
    return Evaluation(class_id=class_id, n=n, per_stratum=per,
                      total_mod2=sum(c.count_total for c in per.values()) % 2,
                      total_signed=sum(c.count_signed for c in per.values()),
                      diagnostics=diagnostics)


def _solve_stratum(system: StratumSystem, cycle: KnotCycle, cfg: RunConfig,
                   unsolved: Optional[List[str]] = None) -> List[Event]:
    seeds = seed_grid(system, cycle, cfg.seed_density, keep=cfg.max_seeds)
    if cycle.n == 3 and cycle.dim == 0:
        seeds += seed_from_crossings(system, cycle, [np.zeros(0)], cfg)
    events = solve_square(system, cycle, seeds, cfg) if seeds else []
    if not events:
        log.warning("%s on %s: no event from %d seeds; raise seed_density or max_seeds if one is expected",
                    system.name, cycle.name or cycle.domain, len(seeds))
        if unsolved is not None:
            unsolved.append(system.name)
    return events


# ---------------- compact classes ----------------
def evaluate_compact(class_id: str, cycle: KnotCycle, cfg: Optional[RunConfig] = None) -> Evaluation:
    cfg = cfg or RunConfig()
    cls = normalize_class(class_id)
    _check_cycle(cycle, cls)
    cycle = cycle.aligned(cfg)
    report = genericity_report(cycle, cfg)
    if report.not_closed:
        raise InputError("cycle does not close up across its periodic chart edges")
    per: Dict[str, StratumCount] = {}
    unsolved: List[str] = []
    for name, system in compact_strata(cls, cycle.n).items():
        events = _solve_stratum(system, cycle, cfg, unsolved)
        log.info("%s on %s: %d events", name, cycle.name or cycle.domain, len(events))
        per[name] = _stratum_count(name, events)
    return _evaluation(cls, cycle.n, per, {"genericity": report.model_dump(), "cycle": cycle.name,
                                           "unsolved_strata": unsolved})


def d3_pairs(knot: ParamCurve, cfg: Optional[RunConfig] = None) -> List[Tuple[Crossing, Crossing]]:
    """Crossing pairs (alpha, gamma), (beta, delta) with alpha<beta<gamma<delta from the basepoint 0,
    f(gamma) above f(alpha) and f(beta) above f(delta)."""
    cfg = cfg or RunConfig()
    cs = crossings(align_axes(knot, cfg), cfg)
    out = []
    for c1 in cs:
        alpha, gamma = c1.s, c1.t
        if c1.over != "t":
            continue
        for c2 in cs:
            beta, delta = c2.s, c2.t
            if c2.over == "s" and alpha < beta < gamma < delta:
                out.append((c1, c2))
    return out


def evaluate_d3_direct(knot: ParamCurve, n: int = 3, cfg: Optional[RunConfig] = None) -> int:
    """Signed count of the Da pattern on a single compact knot in R^3, read off the diagram."""
    if n != 3 or knot.n != 3:
        raise InputError("evaluate_d3_direct works on compact knots in R^3")
    if knot.kind != "compact":
        raise InputError("evaluate_d3_direct needs a compact knot")
    return sum(a.sign * b.sign for a, b in d3_pairs(knot, cfg))


# ---------------- TT ----------------
def evaluate_tt(cycle: KnotCycle, cfg: Optional[RunConfig] = None,
                method: Literal["track", "newton"] = "track", track: Optional[LoopTrack] = None) -> Evaluation:
    """Mod 2 value of the Teiblum-Turchin class on a generic (3n-8)-cycle of long knots.

    Loops of knots in R^3 are counted event by event from the tracked crossing
    braid ("track") or by blind Newton on the full strata from seed_grid
    ("newton"). Higher-dimensional cycles always go through seed_grid.
    """
    cfg = cfg or RunConfig()
    _check_cycle(cycle, "TT")
    cycle = cycle.aligned(cfg)
    systems = tt_strata(cycle.n)
    unsolved: List[str] = []
    if cycle.n != 3:
        per = {name: _stratum_count(name, _solve_stratum(s, cycle, cfg, unsolved)) for name, s in systems.items()}
        return _evaluation("TT", cycle.n, per, {"method": "grid", "cycle": cycle.name, "unsolved_strata": unsolved})
    report = genericity_report(cycle, cfg, density=(min(cfg.frames, 64),))
    if report.not_closed:
        raise InputError("loop does not close up")
    if report.non_transverse:
        raise GenericityError("loop has non-generic frames", where=report.non_transverse[0])
    if method == "newton":
        per = {name: _stratum_count(name, _solve_stratum(s, cycle, cfg, unsolved)) for name, s in systems.items()}
        return _evaluation("TT", 3, per, {"method": "newton", "cycle": cycle.name, "unsolved_strata": unsolved,
                                          "genericity": report.model_dump()})
    track = track or track_crossings(cycle, cfg.frames, cfg)
    per = _tt_from_track(cycle, track, cfg)
    kinds = {k: sum(1 for e in track.events if e.kind == k) for k in ("triple", "birth", "death", "alignment")}
    diagnostics = {"method": method, "cycle": cycle.name, "frames": track.frames, "tracked": kinds,
                   "initial_crossings": track.initial_crossings, "genericity": report.model_dump()}
    return _evaluation("TT", 3, per, diagnostics)


def _polish(system: StratumSystem, cycle: KnotCycle, seed: np.ndarray, cfg: RunConfig) -> Tuple[np.ndarray, float, int]:
    """Newton from a tracked bracket onto the stratum; a tied or singular root propagates as GenericityError."""
    events = solve_square(system, cycle, [seed], cfg)
    if not events:
        raise UnresolvedEventError(f"{system.name} event did not converge from its bracket",
                                   where={"tau": float(seed[0])})
    e = events[0]
    return np.array(e.u + e.config), e.residual, e.jacobian_sign


def _aux(cs: Sequence[Crossing], used: Sequence[float], radius: float) -> List[Crossing]:
    return [c for c in cs if min(abs(c.s - x) for x in used) > radius and min(abs(c.t - x) for x in used) > radius]


def triple_multiplicities(curve: ParamCurve, strands: Tuple[float, float, float], cs: Sequence[Crossing],
                          cfg: RunConfig) -> Dict[str, int]:
    """Sa and Sc multiplicities of a triple point of the projection at strands x<y<z."""
    x, y, z = strands
    hx, hy, hz = (float(curve.eval(p)[UP]) for p in strands)
    out = {"Sa": 0, "Sc": 0}
    if hz <= max(hx, hy):
        return out
    others = _aux(cs, strands, cfg.dedup_radius)
    out["Sa"] = sum(1 for c in others if c.over == "s" and c.s < x and y < c.t < z)
    if hy < hx:
        lam, mu = exterior_angle_coeffs(curve.project(x, 1), curve.project(y, 1), 3)
        margin = -min(lam, mu)
        if abs(margin) <= cfg.margin_tol:
            raise GenericityError("exterior-angle condition is tied at a triple point", where={"x": x, "y": y})
        out["Sc"] = int(margin > 0)
    return out


def alignment_multiplicity(curve: ParamCurve, b: float, d: float, cs: Sequence[Crossing], cfg: RunConfig) -> int:
    """Sb multiplicity of an alignment of p f'(b) at the crossing (b, d)."""
    if not b < d:
        return 0
    if curve.eval(d)[UP] <= curve.eval(b)[UP]:
        return 0
    if curve.project(b, 1)[0] <= 0:
        return 0
    others = _aux(cs, (b, d), cfg.dedup_radius)
    return sum(1 for c in others if c.over == "s" and c.s < b < c.t < d)


def _partner(cs: Sequence[Crossing], x: float) -> Optional[float]:
    best = min(cs, key=lambda c: min(abs(c.s - x), abs(c.t - x)), default=None)
    if best is None:
        return None
    return best.t if abs(best.s - x) <= abs(best.t - x) else best.s


def _tt_from_track(cycle: KnotCycle, track: LoopTrack, cfg: RunConfig) -> Dict[str, StratumCount]:
    found: Dict[str, List[Event]] = {"Sa": [], "Sb": [], "Sc": []}
    tri_sys, al_sys = triple_point_system(), alignment_system()
    for ev, a, b in track.records:
        if ev.kind == "triple":
            z, res, jsign = _polish(tri_sys, cycle, np.array((ev.tau,) + ev.params), cfg)
            curve = cycle.curve(z[:1])
            mult = triple_multiplicities(curve, tuple(z[1:]), a.crossings, cfg)
            for name, m in mult.items():
                if m:
                    found[name].append(Event(stratum=name, u=(float(z[0]),), config=tuple(float(v) for v in z[1:]),
                                             residual=res, jacobian_sign=jsign, multiplicity=m,
                                             condition_tags=[name, "triple"]))
        elif ev.kind == "alignment":
            x = ev.params[0]
            other = _partner(a.crossings, x)
            if other is None:
                continue
            z, res, jsign = _polish(al_sys, cycle, np.array([ev.tau, x, other]), cfg)
            curve = cycle.curve(z[:1])
            m = alignment_multiplicity(curve, float(z[1]), float(z[2]), a.crossings, cfg)
            if m:
                found["Sb"].append(Event(stratum="Sb", u=(float(z[0]),), config=(float(z[1]), float(z[2])),
                                         residual=res, jacobian_sign=jsign, multiplicity=m,
                                         condition_tags=["Sb", "alignment"]))
    return {name: _stratum_count(name, sorted(evs, key=Event.sort_key)) for name, evs in found.items()}
