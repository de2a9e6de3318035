from __future__ import annotations
import logging
from collections import Counter

import numpy as np
import pytest
from scipy.spatial.transform import Rotation

from knotstrata import cocycle_eval
from knotstrata.cocycle_eval import (
    compact_strata,
    d3_pairs,
    evaluate_compact,
    evaluate_d3_direct,
    evaluate_tt,
    tt_strata,
)
from knotstrata.curve_model import KnotCycle
from knotstrata.errors import GenericityError, InputError, UnresolvedEventError
from knotstrata.gauss_diagrams import builtin_formulas, evaluate_formula, project_to_diagram
from knotstrata.persist import canonical_result, dumps
from knotstrata.scenarios import (
    bump,
    constant_loop,
    disk_boundary_loop,
    great_circle,
    great_circle_cycle,
    hopf_fiber_cycle,
    long_trefoil,
    round_circle,
    trefoil_bead_loop,
)
from knotstrata.schema import RunConfig
from knotstrata.strata_engine import seed_grid


# ---------------- strata ----------------
@pytest.mark.parametrize("cls,n,names", [
    ("A", 3, ["A"]),
    ("b", 3, ["Ba", "Bb"]),
    ("C", 4, ["Ca", "Cb"]),
    ("D", 3, ["Da"]),
    ("D", 4, ["Da", "Db"]),
])
def test_compact_strata_names(cls, n, names):
    assert sorted(compact_strata(cls, n)) == names


def test_tt_strata():
    s = tt_strata(3)
    assert sorted(s) == ["Sa", "Sb", "Sc"]
    assert all(x.k == 1 for x in s.values())
    assert tt_strata(4)["Sc"].k == 4
    with pytest.raises(InputError):
        tt_strata(2)
    with pytest.raises(InputError):
        compact_strata("TT", 3)


# ---------------- D(3) on single knots ----------------
@pytest.mark.parametrize("name,expected", [
    ("trefoil", 1), ("trefoil_mirror", 1), ("figure_eight", -1), ("unknot", 0), ("tilted_circle", 0),
])
def test_d3_direct_matches_v2(knots, name, expected):
    knot = great_circle([0.3, -1.1, 0.7]) if name == "tilted_circle" else knots[name]
    cfg = RunConfig()
    v2 = evaluate_formula(builtin_formulas()["v2"], project_to_diagram(knot, 3, cfg))
    assert v2 == expected
    assert evaluate_d3_direct(knot, 3, cfg) == expected


def test_d3_pairs_are_ordered(knots):
    for a, b in d3_pairs(knots["figure_eight"]):
        assert a.s < b.s < a.t < b.t
        assert a.over == "t" and b.over == "s"


def test_d3_direct_rejects_other_inputs(knots):
    with pytest.raises(InputError):
        evaluate_d3_direct(knots["long_trefoil"])
    with pytest.raises(InputError):
        evaluate_d3_direct(knots["trefoil"], n=4)


# ---------------- TT ----------------
def test_constant_loop_is_zero(fast_cfg):
    ev = evaluate_tt(constant_loop(), fast_cfg)
    assert ev.class_id == "TT"
    assert ev.total_mod2 == 0
    assert ev.summary_line() == "total_mod2=0 (Sa=0, Sb=0, Sc=0)"
    assert ev.diagnostics["initial_crossings"] == 3
    assert ev.diagnostics["tracked"]["triple"] == 0


def test_constant_loop_by_newton(fast_cfg):
    ev = evaluate_tt(constant_loop(), fast_cfg, method="newton")
    assert ev.total_mod2 == 0
    assert ev.diagnostics["method"] == "newton"


def test_planar_loop_is_not_generic(fast_cfg):
    with pytest.raises(GenericityError) as exc:
        evaluate_tt(constant_loop(long_trefoil(flatten=0.0), frames=4), fast_cfg)
    assert exc.value.exit_code == 2


def test_class_and_cycle_must_match(fast_cfg):
    with pytest.raises(InputError):
        evaluate_compact("C", constant_loop(), fast_cfg)
    with pytest.raises(InputError, match="2-dimensional"):
        evaluate_compact("A", great_circle_cycle(grid=2), fast_cfg)
    with pytest.raises(InputError):
        evaluate_tt(great_circle_cycle(grid=2), fast_cfg)


# ---------------- 3-cycles ----------------
@pytest.mark.slow
def test_great_circles_class_c(fast_cfg):
    ev = evaluate_compact("C", great_circle_cycle(), fast_cfg)
    assert ev.per_stratum["Ca"].count_total == 0
    assert ev.per_stratum["Cb"].count_total == 1
    assert abs(ev.total_signed) == 1
    assert ev.summary_line() == "|value|=1 (Ca=0, Cb=1)"


@pytest.mark.slow
def test_hopf_fibers_class_a(fast_cfg):
    ev = evaluate_compact("A", hopf_fiber_cycle(), fast_cfg)
    assert ev.n == 4
    assert ev.per_stratum["A"].count_total == 1
    (event,) = ev.per_stratum["A"].events
    assert max(abs(x) for x in event.u) < 1e-6


def test_constant_compact_loop_is_zero_for_b(fast_cfg):
    loop = constant_loop(great_circle([0.3, -1.1, 0.7]), frames=16)
    ev = evaluate_compact("B", loop, fast_cfg)
    assert sorted(ev.per_stratum) == ["Ba", "Bb"]
    assert ev.total_signed == 0
    assert ev.summary_line() == "|value|=0 (Ba=0, Bb=0)"


# ---------------- solver backends ----------------
@pytest.mark.parametrize("make", [lambda: constant_loop(frames=8), lambda: disk_boundary_loop(frames=8)])
def test_track_and_newton_agree(make):
    cfg = RunConfig(frames=8, seed_density=4, max_seeds=48)
    loop = make()
    by_track = evaluate_tt(loop, cfg)
    by_newton = evaluate_tt(loop, cfg, method="newton")
    assert by_newton.diagnostics["method"] == "newton"
    assert by_track.total_mod2 == by_newton.total_mod2 == 0
    assert sorted(by_track.per_stratum) == sorted(by_newton.per_stratum)


def test_polish_propagates_solver_errors(monkeypatch, fast_cfg):
    loop = constant_loop(frames=8)
    system = tt_strata(3)["Sb"]
    seed = np.linspace(0.0, 0.4, 1 + system.m)

    def tied(*args, **kwargs):
        raise GenericityError("tied")
    monkeypatch.setattr(cocycle_eval, "solve_square", tied)
    with pytest.raises(GenericityError, match="tied"):
        cocycle_eval._polish(system, loop, seed, fast_cfg)

    monkeypatch.setattr(cocycle_eval, "solve_square", lambda *args, **kwargs: [])
    with pytest.raises(UnresolvedEventError):
        cocycle_eval._polish(system, loop, seed, fast_cfg)


# ---------------- seeding ----------------
def _flat_circles() -> KnotCycle:
    return KnotCycle(2, "box", lambda u: round_circle(), kind="compact", n=3, lower=[0.0, 0.0], upper=[1.0, 1.0],
                     periodic=[False, False], grid=(2, 2), name="flat_circles")


def test_empty_stratum_is_reported(fast_cfg, caplog, monkeypatch):
    monkeypatch.setattr(logging.getLogger("knotstrata"), "propagate", True)
    with caplog.at_level(logging.WARNING, logger="knotstrata.cocycle_eval"):
        ev = evaluate_compact("A", _flat_circles(), fast_cfg)
    assert ev.total_signed == 0
    assert ev.diagnostics["unsolved_strata"] == ["A"]
    assert "A on flat_circles: no event" in caplog.text


def test_grid_seeds_cover_every_chart_point():
    system = compact_strata("C", 3)["Ca"]
    cycle = great_circle_cycle(grid=3)
    seeds = seed_grid(system, cycle, density=6, keep=54)
    per_chart = Counter(tuple(np.round(s[:3], 12)) for s in seeds)
    assert len(per_chart) == 27
    assert set(per_chart.values()) == {2}
    assert len(seed_grid(system, cycle, density=6, keep=10 ** 6)) == 27 * 6


# ---------------- invariance ----------------
def test_antipodal_stacking_needs_a_vertical_point():
    """Ca asks f(a) over f(a+pi) and f(a+pi/2) over f(a+3pi/2) at once. On a
    great circle f(a+pi) = -f(a), so each stacking needs a vertical point, and
    two orthogonal unit vectors cannot both be vertical."""
    rng = np.random.default_rng(11)
    alphas = np.linspace(0.0, np.pi / 2, 181)
    for u in rng.uniform(-np.pi, np.pi, size=(20, 3)):
        g = great_circle(u)
        assert np.allclose(g.project(alphas + np.pi), -g.project(alphas), atol=1e-6)
        first = np.linalg.norm(g.project(alphas), axis=1)
        second = np.linalg.norm(g.project(alphas + np.pi / 2), axis=1)
        assert np.min(np.maximum(first, second)) >= 1 / np.sqrt(2) - 1e-4


def _warped(loop: KnotCycle) -> KnotCycle:
    def frame(u):
        x = float(u[0])
        return loop.curve([x + 0.05 * np.sin(2 * np.pi * x)])
    return KnotCycle(1, "circle", frame, kind=loop.kind, n=loop.n, lower=[0.0], upper=[1.0], periodic=[True],
                     grid=loop.grid, name=f"warped {loop.name}")


def _wiggled(loop: KnotCycle) -> KnotCycle:
    def frame(u):
        phi = 2 * np.pi * float(u[0])
        return loop.curve(u).perturb(bump(1.6, 0.1, (1e-3 * np.cos(phi), 0.0, 0.0)))
    return KnotCycle(1, "circle", frame, kind=loop.kind, n=loop.n, lower=[0.0], upper=[1.0], periodic=[True],
                     grid=loop.grid, name=f"wiggled {loop.name}")


@pytest.mark.parametrize("make", [
    lambda: disk_boundary_loop(frames=16),
    lambda: disk_boundary_loop(radius=0.03, frames=16),
    lambda: _warped(disk_boundary_loop(frames=16)),
    lambda: _wiggled(disk_boundary_loop(frames=16)),
    lambda: _wiggled(constant_loop(frames=16)),
])
@pytest.mark.parametrize("frames", [32, 64])
def test_homotopic_loops_agree(make, frames, fast_cfg):
    ev = evaluate_tt(make(), fast_cfg.model_copy(update={"frames": frames}))
    assert ev.total_mod2 == 0
    assert ev.diagnostics["tracked"]["triple"] == 0


@pytest.mark.slow
def test_warped_bead_loop_keeps_its_value():
    loop = _warped(trefoil_bead_loop(0.05, 2048))
    assert evaluate_tt(loop, RunConfig(frames=2048)).total_mod2 == 1


def test_reruns_are_byte_identical(fast_cfg):
    def once() -> bytes:
        ev = evaluate_tt(disk_boundary_loop(frames=16), fast_cfg)
        return dumps(canonical_result(ev, fast_cfg, {"scenario": "disk_boundary"}))
    assert once() == once()


@pytest.mark.slow
def test_great_circle_reruns_are_byte_identical(fast_cfg):
    first, second = (dumps(canonical_result(evaluate_compact("C", great_circle_cycle(), fast_cfg), fast_cfg))
                     for _ in range(2))
    assert first == second


@pytest.mark.slow
def test_great_circles_in_turned_axes(fast_cfg):
    turn = Rotation.from_rotvec([0.4, 0.9, -0.3]).as_matrix()
    base = great_circle_cycle()

    def frame(u):
        curve = base.curve(u)
        return curve.with_points(curve.pts @ turn.T)
    turned = KnotCycle(3, "so3", frame, kind="compact", n=3, lower=base.lower, upper=base.upper,
                       periodic=base.periodic, grid=base.grid, name="turned great circles", canonical=base.canonical)
    cfg = fast_cfg.model_copy(update={"up": tuple(turn[:, 0]), "right": tuple(turn[:, 1])})
    ev = evaluate_compact("C", turned, cfg)
    assert ev.summary_line() == "|value|=1 (Ca=0, Cb=1)"
