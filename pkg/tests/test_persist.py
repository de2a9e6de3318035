from __future__ import annotations
import numpy as np
import orjson
import pytest

from knotstrata.curve_model import KnotCycle
from knotstrata.errors import InputError
from knotstrata.persist import (
    canonical_result,
    content_hash,
    read_curve,
    read_events,
    read_family,
    read_json,
    read_summary,
    write_curve,
    write_family,
    write_json,
    write_results,
)
from knotstrata.persist.families import SampledFamily, curve_record, family_record
from knotstrata.scenarios import constant_loop, round_circle, rotation_loop
from knotstrata.schema import Evaluation, Event, RunConfig, StratumCount


def _evaluation() -> Evaluation:
    sa = [Event(stratum="Sa", u=(0.7,), config=(1.0, 2.0, 3.0, 4.0, 5.0), jacobian_sign=-1),
          Event(stratum="Sa", u=(0.2,), config=(0.5, 1.0, 1.5, 2.0, 2.5))]
    sc = [Event(stratum="Sc", u=(0.4,), config=(0.1, 0.2, 0.3), multiplicity=1)]
    per = {
        "Sa": StratumCount(stratum="Sa", events=sa, count_total=2, count_mod2=0, count_signed=0),
        "Sb": StratumCount(stratum="Sb"),
        "Sc": StratumCount(stratum="Sc", events=sc, count_total=1, count_mod2=1, count_signed=1),
    }
    return Evaluation(class_id="TT", n=3, per_stratum=per, total_mod2=1, total_signed=1)


# ---------------- JSON helpers ----------------
def test_read_json_errors(tmp_path):
    with pytest.raises(InputError, match="no such file"):
        read_json(str(tmp_path / "missing.json"))
    bad = tmp_path / "bad.json"
    bad.write_text("{not json", encoding="utf-8")
    with pytest.raises(InputError, match="malformed JSON"):
        read_json(str(bad))


def test_write_json_is_sorted_and_creates_dirs(tmp_path):
    path = write_json(str(tmp_path / "a" / "b.json"), {"z": 1, "a": np.arange(2)})
    text = open(path, encoding="utf-8").read()
    assert text.index('"a"') < text.index('"z"')
    assert read_json(path) == {"a": [0, 1], "z": 1}


def test_content_hash_ignores_key_order():
    assert content_hash({"a": 1, "b": [1, 2]}) == content_hash({"b": [1, 2], "a": 1})
    assert content_hash({"a": 1}) != content_hash({"a": 2})


# ---------------- curves and families ----------------
def test_curve_round_trip(tmp_path, knots):
    k = knots["long_trefoil"]
    path = write_curve(str(tmp_path / "k.json"), k)
    data = read_json(path)
    assert (data["kind"], data["n"]) == ("long", 3)
    assert data["window"] == list(k.window)
    assert data["samples"][0] == [k.ts[0]] + k.pts[0].tolist()
    back = read_curve(path)
    assert back.kind == "long"
    assert np.allclose(back.pts, k.pts)
    assert np.allclose(back.window, k.window)
    assert np.allclose(back.eval(0.37), k.eval(0.37))


def test_compact_curve_file_has_no_window(tmp_path, knots):
    k = knots["trefoil"]
    path = write_curve(str(tmp_path / "t.json"), k)
    data = read_json(path)
    assert "window" not in data and "tail" not in data
    assert len(data["samples"]) == len(k.ts)
    assert np.allclose(read_curve(path).eval(1.3), k.eval(1.3))


def test_hand_written_curve_file(tmp_path):
    ts = np.linspace(0.0, 2 * np.pi, 8, endpoint=False)
    rows = [[t, 0.0, np.cos(t), np.sin(t)] for t in ts]
    path = tmp_path / "c.json"
    path.write_bytes(orjson.dumps({"kind": "compact", "n": 3, "samples": rows}))
    curve = read_curve(str(path))
    assert curve.n == 3
    assert np.allclose(curve.pts, np.array(rows)[:, 1:])
    line = {"kind": "long", "n": 3, "window": [-1.0, 1.0],
            "samples": [[t, 0.0, t, 0.0] for t in np.linspace(-1.0, 1.0, 5)]}
    path.write_bytes(orjson.dumps(line))
    long = read_curve(str(path))
    assert np.allclose(long.tail, [0.0, 1.0, 0.0])
    assert np.allclose(long.eval(3.0), [0.0, 3.0, 0.0])


@pytest.mark.parametrize("data", [
    {"kind": "spiral", "n": 3, "samples": [[0.0, 0.0, 0.0, 0.0]] * 4},
    {"kind": "compact", "n": 3, "samples": [[0.0, 0.0, 0.0]] * 4},
    {"kind": "compact", "n": 3, "window": [0.0, 1.0], "samples": [[0.1 * i, 0.0, 1.0, 0.0] for i in range(4)]},
    {"kind": "long", "samples": [[0.0, 0.0, 0.0, 0.0]] * 4},
])
def test_bad_curve_file(tmp_path, data):
    path = tmp_path / "c.json"
    path.write_bytes(orjson.dumps(data))
    with pytest.raises(InputError):
        read_curve(str(path))


def test_scenario_family_round_trip(tmp_path):
    path = write_family(str(tmp_path / "f.json"), constant_loop(frames=8))
    assert read_json(path) == {"format": "knotstrata.family/1", "name": "constant_loop",
                               "scenario": "constant", "params": {"frames": 8}}
    cyc = read_family(path)
    assert cyc.name == "constant_loop"
    assert cyc.grid == (8,)


def test_hand_written_scenario_family(tmp_path):
    path = tmp_path / "f.json"
    path.write_bytes(orjson.dumps({"scenario": "great_circles", "params": {"grid": 2}}))
    cyc = read_family(str(path))
    assert (cyc.dim, cyc.domain, cyc.grid) == (3, "so3", (2, 2, 2))


def test_sampled_family_round_trip(tmp_path):
    loop = rotation_loop(frames=8)
    rec = family_record(loop)
    assert isinstance(rec, SampledFamily)
    assert (rec.domain, rec.grid, len(rec.frames)) == ("circle", [8], 8)
    path = write_family(str(tmp_path / "rot.json"), loop)
    assert sorted(read_json(path)) == ["domain", "format", "frames", "grid", "lower", "name", "upper"]
    cyc = read_family(path)
    assert (cyc.dim, cyc.kind, cyc.n) == (1, "compact", 3)
    for tau in (0.0, 0.25, 0.875):
        assert np.allclose(cyc.curve([tau]).pts, loop.curve([tau]).pts, atol=1e-12)
    assert np.allclose(cyc.curve([1.0]).pts, cyc.curve([0.0]).pts)


def test_hand_written_sampled_family(tmp_path, knots):
    frame = curve_record(knots["long_trefoil"]).model_dump(exclude_none=True)
    del frame["format"], frame["tail"]
    path = tmp_path / "loop.json"
    path.write_bytes(orjson.dumps({"domain": "circle", "grid": [3], "frames": [frame] * 3}))
    cyc = read_family(str(path))
    assert (cyc.dim, cyc.kind, cyc.lower.tolist(), cyc.upper.tolist()) == (1, "long", [0.0], [1.0])
    assert np.allclose(cyc.curve([0.4]).pts, knots["long_trefoil"].pts)


def test_single_knot_family(tmp_path):
    knot = round_circle()
    point = KnotCycle(0, "point", lambda u: knot, kind="compact", n=3, lower=[], upper=[], name="circle")
    cyc = read_family(write_family(str(tmp_path / "p.json"), point))
    assert cyc.dim == 0
    assert np.allclose(cyc.curve(()).pts, knot.pts)


def test_unwritable_families(tmp_path):
    torus = KnotCycle(2, "torus", lambda u: round_circle(), kind="compact", n=3, lower=[0.0, 0.0], upper=[1.0, 1.0])
    with pytest.raises(InputError):
        family_record(torus)


def test_malformed_family_files(tmp_path):
    path = tmp_path / "f.json"
    path.write_bytes(orjson.dumps({"type": "bogus"}))
    with pytest.raises(InputError):
        read_family(str(path))
    path.write_bytes(orjson.dumps({"scenario": "nowhere"}))
    with pytest.raises(InputError, match="unknown scenario"):
        read_family(str(path))
    a = {"kind": "compact", "n": 3, "samples": [[t, 0.0, 1.0, 0.0] for t in (0.0, 1.0, 2.0, 3.0)]}
    b = {"kind": "compact", "n": 3, "samples": [[t, 0.0, 1.0, 0.0] for t in (0.0, 1.0, 2.0, 3.5)]}
    path.write_bytes(orjson.dumps({"domain": "circle", "grid": [2], "frames": [a, b]}))
    with pytest.raises(InputError, match="share"):
        read_family(str(path))
    path.write_bytes(orjson.dumps({"domain": "circle", "grid": [3], "frames": [a, a]}))
    with pytest.raises(InputError, match="does not match"):
        read_family(str(path))
    path.write_bytes(orjson.dumps({"domain": "torus", "grid": [1], "frames": [a]}))
    with pytest.raises(InputError):
        read_family(str(path))


# ---------------- results ----------------
def test_canonical_result_orders_events():
    res = canonical_result(_evaluation(), RunConfig(), {"scenario": "x"})
    assert res["format"] == "knotstrata.result/1"
    assert res["summary"] == "total_mod2=1 (Sa=2, Sb=0, Sc=1)"
    us = [e["u"] for e in res["evaluation"]["per_stratum"]["Sa"]["events"]]
    assert us == [[0.2], [0.7]]
    assert res["input_hash"] == content_hash({"scenario": "x"})


def test_write_results_is_deterministic(tmp_path):
    ev, cfg = _evaluation(), RunConfig(frames=64)
    first = write_results(ev, str(tmp_path / "one"), cfg, {"k": 1})
    second = write_results(ev, str(tmp_path / "two"), cfg, {"k": 1})
    for key in ("result", "events", "summary", "config"):
        assert open(first[key], "rb").read() == open(second[key], "rb").read()
    events = read_events(first["events"])
    assert [e.stratum for e in events] == ["Sa", "Sa", "Sc"]
    assert events[0].u == (0.2,)
    assert read_summary(first["summary"]) == {
        "Sa": {"count_mod2": 0, "count_signed": 0, "n_events": 2},
        "Sb": {"count_mod2": 0, "count_signed": 0, "n_events": 0},
        "Sc": {"count_mod2": 1, "count_signed": 1, "n_events": 1},
    }
    assert read_json(first["config"])["frames"] == 64


def test_bad_event_log(tmp_path):
    path = tmp_path / "e.jsonl"
    path.write_text('{"stratum": "Sa"}\n{broken\n', encoding="utf-8")
    with pytest.raises(InputError, match=":2:"):
        read_events(str(path))
