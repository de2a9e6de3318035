from __future__ import annotations
import numpy as np
import pytest

from knotstrata.cocycle_eval import evaluate_tt
from knotstrata.curve_model import crossings
from knotstrata.errors import InputError
from knotstrata.scenarios import (
    CROSSING_PASSAGES,
    FAR,
    PASS,
    SUPPORT,
    TAIL_ANGLE,
    Blob,
    TubeBlob,
    bead_loop_phases,
    bead_state,
    build_scenario,
    curve_from_blobs,
    disk_boundary_loop,
    great_circle,
    great_circle_cycle,
    hopf_fiber,
    hopf_fiber_cycle,
    line_world,
    long_trefoil,
    node_params,
    normalize_scenario,
    quaternion_from_chart,
    trefoil_bead_loop,
    trefoil_model,
    trefoil_tube_loop,
    tube_loop_phases,
    tube_state,
)
from knotstrata.schema import RunConfig
from knotstrata.strata_engine import track_crossings

EPS = 0.05
# tangent angles from `right` at the six crossing passages, in order
PASSAGE_ANGLES = np.array([np.pi / 4, 3 * np.pi / 10, -np.pi / 4, 3 * np.pi / 4, np.pi / 5, np.pi / 4])


# ---------------- long trefoil model ----------------
@pytest.mark.parametrize("t", list(node_params()) + [SUPPORT, -SUPPORT])
@pytest.mark.parametrize("order", [0, 1])
def test_model_is_c1_at_the_nodes(t, order):
    h = 1e-9
    assert np.allclose(trefoil_model(t - h, order), trefoil_model(t + h, order), atol=1e-6)


def test_node_params_span_the_knotted_part():
    ts = node_params()
    assert ts[0] == pytest.approx(-PASS) and ts[-1] == pytest.approx(PASS)
    assert np.all(np.diff(ts) > 0)


def test_model_runs_into_the_line():
    for t in (-9.0, SUPPORT + 0.5, 11.0):
        assert np.allclose(trefoil_model(t), line_world(t)[0])
        assert np.allclose(trefoil_model(t, 1), line_world(t, 1)[0])
    # the first and last passage sit on the line already
    assert np.allclose(trefoil_model(-PASS), line_world(-PASS)[0])
    assert np.allclose(trefoil_model(PASS), line_world(PASS)[0])


def test_line_points_at_an_eighth_turn_from_right():
    d = line_world(0.0, 1)[0]
    assert d[0] == 0.0
    assert np.arctan2(d[2], d[1]) == pytest.approx(np.pi / 4)


def test_crossing_passages_have_the_designed_angles():
    ts = node_params()[list(CROSSING_PASSAGES)]
    d = trefoil_model(ts, 1)
    assert np.allclose(np.arctan2(d[:, 2], d[:, 1]), PASSAGE_ANGLES, atol=1e-9)


def test_crossing_passages_pair_up():
    ts = node_params()[list(CROSSING_PASSAGES)]
    p = trefoil_model(ts)
    # passages 1-4, 2-5 and 3-6 meet; the heights alternate under/over along the knot
    for i, j in ((0, 3), (1, 4), (2, 5)):
        assert np.allclose(p[i, 1:], p[j, 1:], atol=1e-12)
    assert np.allclose(p[:, 0], [-1.0, 1.0, -1.0, 1.0, -1.0, 1.0])


def test_long_trefoil_crosses_only_at_the_passages():
    ts = node_params()[list(CROSSING_PASSAGES)]
    expected = sorted((ts[i], ts[j]) for i, j in ((0, 3), (1, 4), (2, 5)))
    found = sorted((c.s, c.t) for c in crossings(long_trefoil()))
    assert len(found) == 3
    assert np.allclose(found, expected, atol=5e-3)


def test_flatten_scales_heights_only():
    t = np.linspace(-2.0, 2.0, 9)
    flat = trefoil_model(t, 0, 0.1)
    full = trefoil_model(t)
    assert np.allclose(flat[:, 0], 0.1 * full[:, 0])
    assert np.allclose(flat[:, 1:], full[:, 1:])


# ---------------- bead loop ----------------
def test_phases_cover_the_loop():
    phases = bead_loop_phases()
    assert phases[0][1] == 0.0 and phases[-1][2] == 1.0
    for (_, _, hi), (_, lo, _) in zip(phases, phases[1:]):
        assert hi == lo
    assert [p[0] for p in phases] == ["enter", "traverse", "leave", "shrink", "swap", "grow"]


def test_bead_state_shapes():
    large, small = bead_state(0.4, EPS)
    assert large.scale == 1.0 and large.flatten == pytest.approx(EPS ** 2)
    assert small.amplitude == pytest.approx(EPS ** 3)
    assert -SUPPORT < small.center < SUPPORT
    parked = bead_state(0.0, EPS)[1]
    assert parked.center == -FAR
    assert parked.angle == pytest.approx(0.0, abs=1e-12)


@pytest.mark.parametrize("tau", [0.05, 0.8, 0.85, 0.9, 0.95, 1.0])
def test_bead_loop_is_continuous(tau):
    h = 1e-9
    before = curve_from_blobs(bead_state(tau - h, EPS))
    after = curve_from_blobs(bead_state(tau + h, EPS))
    assert before.ts.shape == after.ts.shape
    assert np.allclose(before.ts, after.ts, atol=1e-4)
    assert np.allclose(before.pts, after.pts, atol=1e-4)


def test_bead_frames_are_long_knots():
    curve = curve_from_blobs(bead_state(0.3, EPS))
    assert curve.kind == "long"
    assert np.all(np.diff(curve.ts) > 0)
    assert np.allclose(curve.ts[[0, -1]], [-14.0, 14.0])
    # outside every blob the frame is the standard line
    assert np.allclose(curve.eval(13.9), line_world(13.9)[0], atol=1e-9)


@pytest.mark.parametrize("kwargs", [dict(eps=0.2), dict(eps=0.0), dict(frames=100)])
def test_bead_loop_arguments(kwargs):
    with pytest.raises(InputError):
        trefoil_bead_loop(**kwargs)


def _records_are_elementary(track) -> None:
    for ev, _, _ in track.records:
        jump = ev.crossings_after - ev.crossings_before
        if ev.kind == "birth":
            assert jump == 2
        elif ev.kind == "death":
            assert jump == -2
        else:
            assert jump == 0, ev


@pytest.fixture(scope="module")
def bead_run():
    loop = trefoil_bead_loop(EPS, 2048)
    cfg = RunConfig(frames=2048)
    return loop, cfg, track_crossings(loop, cfg.frames, cfg)


@pytest.mark.slow
def test_bead_loop_tracks_elementary_events(bead_run):
    _, _, track = bead_run
    _records_are_elementary(track)
    leave = dict((name, hi) for name, _, hi in bead_loop_phases())["leave"]
    assert len([e for e in track.triple_points if e.tau < leave]) == 18


@pytest.mark.slow
def test_bead_loop_value(bead_run):
    loop, cfg, track = bead_run
    ev = evaluate_tt(loop, cfg, track=track)
    assert ev.total_mod2 == 1
    assert [ev.per_stratum[s].count_total for s in ("Sa", "Sb", "Sc")] == [3, 3, 1]


@pytest.mark.slow
def test_bead_loop_value_does_not_depend_on_the_scale():
    loop = trefoil_bead_loop(0.04, 2048)
    assert evaluate_tt(loop, RunConfig(frames=2048)).total_mod2 == 1


# ---------------- tube loop ----------------
def test_tube_phases_cover_the_loop():
    phases = tube_loop_phases()
    assert phases[0][1] == 0.0 and phases[-1][2] == 1.0
    for (_, _, hi), (_, lo, _) in zip(phases, phases[1:]):
        assert hi == lo


def test_tube_copy_bends_with_the_large_knot():
    small = tube_state(0.45, EPS)[1]
    assert isinstance(small, TubeBlob)
    assert -SUPPORT < small.center < SUPPORT
    d = trefoil_model(small.center, 1)
    frozen = Blob(**{**small.model_dump(), "angle": float(np.arctan2(d[2], d[1]) - TAIL_ANGLE)})
    sigma = small.center + small.half_width * np.linspace(-1.0, 1.0, 41)
    bent, rigid = small.displacement(sigma), frozen.displacement(sigma)
    gap = np.max(np.abs(bent - rigid))
    assert 0 < gap < 1e-2 * np.max(np.abs(rigid))
    # on the standard line the tube frame and the frozen frame agree
    parked = bead_state(0.0, EPS)[1]
    sigma = parked.center + parked.half_width * np.linspace(-1.0, 1.0, 41)
    assert np.allclose(TubeBlob(**parked.model_dump()).displacement(sigma), parked.displacement(sigma), atol=1e-15)


@pytest.mark.parametrize("tau", [0.05, 0.85, 0.9, 1.0])
def test_tube_loop_is_continuous(tau):
    h = 1e-9
    before = curve_from_blobs(tube_state(tau - h, EPS))
    after = curve_from_blobs(tube_state(tau + h, EPS))
    assert before.ts.shape == after.ts.shape
    assert np.allclose(before.ts, after.ts, atol=1e-4)
    assert np.allclose(before.pts, after.pts, atol=1e-4)


def test_tube_loop_closes_on_the_bead_start():
    start = curve_from_blobs(bead_state(0.0, EPS))
    for tau in (0.0, 1.0 - 1e-12):
        curve = curve_from_blobs(tube_state(tau, EPS))
        assert np.allclose(curve.ts, start.ts, atol=1e-6)
        assert np.allclose(curve.pts, start.pts, atol=1e-6)


@pytest.mark.parametrize("kwargs", [dict(eps=0.5), dict(frames=64)])
def test_tube_loop_arguments(kwargs):
    with pytest.raises(InputError):
        trefoil_tube_loop(**kwargs)


@pytest.mark.slow
def test_tube_loop_value():
    loop = trefoil_tube_loop(EPS, 2048)
    cfg = RunConfig(frames=2048)
    track = track_crossings(loop, cfg.frames, cfg)
    _records_are_elementary(track)
    assert evaluate_tt(loop, cfg, track=track).total_mod2 == 1


# ---------------- 3-cycles ----------------
def test_great_circles():
    c = great_circle([0.0, 0.0, 0.0])
    assert np.allclose(c.eval(0.0), [0.0, 1.0, 0.0])
    g = great_circle([0.3, -1.1, 0.7])
    assert np.allclose(g.eval(np.pi), -g.eval(0.0), atol=1e-9)
    assert np.allclose(np.linalg.norm(g.pts, axis=1), 1.0)
    cyc = great_circle_cycle(grid=2)
    assert (cyc.dim, cyc.n, cyc.kind) == (3, 3, "compact")
    assert np.allclose(cyc.canonical(np.array([0.0, 0.0, 1.5 * np.pi])), [0.0, 0.0, -0.5 * np.pi])


def test_hopf_fibers():
    assert np.allclose(quaternion_from_chart([0.0, 0.0, 0.0]), [1.0, 0.0, 0.0, 0.0])
    q = quaternion_from_chart([0.4, -0.2, 1.0])
    assert np.linalg.norm(q) == pytest.approx(1.0)
    f = hopf_fiber(q)
    assert f.n == 4
    assert np.allclose(f.eval(0.0), q)
    assert np.allclose(np.linalg.norm(f.pts, axis=1), 1.0)
    cyc = hopf_fiber_cycle(grid=2)
    far = np.array([0.0, 0.0, 1.5 * np.pi])
    near = cyc.canonical(far)
    assert np.allclose(near, [0.0, 0.0, -0.5 * np.pi])
    assert np.allclose(quaternion_from_chart(near), quaternion_from_chart(far))


# ---------------- registry ----------------
def test_scenario_names():
    assert normalize_scenario("Great-Circle") == "great_circles"
    assert normalize_scenario("bead") == "trefoil_bead"
    assert normalize_scenario("Tube") == "trefoil_tube"
    with pytest.raises(InputError, match="unknown scenario"):
        normalize_scenario("torus")


def test_build_scenario():
    cyc = build_scenario("constant", {"frames": 8})
    assert cyc.params == {"scenario": "constant", "frames": 8}
    assert build_scenario("hopf", {"grid": 3}).params["grid"] == 3
    with pytest.raises(InputError, match="bad parameters"):
        build_scenario("constant", {"bogus": 1})


def test_disk_boundary_loop_is_zero():
    loop = disk_boundary_loop(frames=16)
    ev = evaluate_tt(loop, RunConfig(frames=16))
    assert ev.total_mod2 == 0
