"""Acceptance self-test: known values of every evaluator, printed as a table.

    python -m knotstrata.main [--full]
"""
from __future__ import annotations
import logging
import sys
import time
from typing import Callable, List, Optional, Tuple

from pydantic import BaseModel
from rich.console import Console
from rich.table import Table

from .chord_complex import (
    boundary,
    enumerate_cells,
    homology_table,
    principal_part_odd,
    principal_part_tt,
    verify_cycle,
)
from .cocycle_eval import evaluate_compact, evaluate_d3_direct, evaluate_tt
from .config import load_config
from .errors import KnotStrataError
from .gauss_diagrams import builtin_formulas, evaluate_formula, mirror, parse_gauss, project_to_diagram
from .scenarios import (
    bead_loop_phases,
    constant_loop,
    figure_eight,
    great_circle_cycle,
    hopf_fiber_cycle,
    trefoil,
    trefoil_bead_loop,
    trefoil_tube_loop,
    tube_loop_phases,
)
from .schema import RunConfig
from .strata_engine import track_crossings

log = logging.getLogger(__name__)

TREFOIL_GAUSS = "compact: O1+ U2+ O3+ U1+ O2+ U3+"


class CheckResult(BaseModel):
    name: str
    ok: bool
    detail: str = ""
    seconds: float = 0.0


Check = Tuple[str, Callable[[RunConfig], Tuple[bool, str]]]


# ---------------- checks ----------------
def _gauss_values(cfg: RunConfig) -> Tuple[bool, str]:
    f = builtin_formulas()
    d = parse_gauss(TREFOIL_GAUSS)
    v2, v3, v3m = evaluate_formula(f["v2"], d), evaluate_formula(f["v3"], d), evaluate_formula(f["v3"], mirror(d))
    return (v2 == 1 and v3 == 1 and v3m == -1), f"v2={v2} v3={v3} v3(mirror)={v3m}"


def _projected_values(cfg: RunConfig) -> Tuple[bool, str]:
    f = builtin_formulas()
    tre = project_to_diagram(trefoil(), 3, cfg)
    eight = project_to_diagram(figure_eight(), 3, cfg)
    t2, t3 = evaluate_formula(f["v2"], tre), evaluate_formula(f["v3"], tre)
    e2, e3 = evaluate_formula(f["v2"], eight), evaluate_formula(f["v3"], eight)
    ok = t2 == 1 and abs(t3) == 1 and e2 == -1 and e3 == 0
    return ok, f"trefoil v2={t2} v3={t3}; figure-eight v2={e2} v3={e3}"


def _d3_direct(cfg: RunConfig) -> Tuple[bool, str]:
    knot = trefoil()
    direct = evaluate_d3_direct(knot, 3, cfg)
    v2 = evaluate_formula(builtin_formulas()["v2"], project_to_diagram(knot, 3, cfg))
    return direct == v2, f"D(3)={direct} v2={v2}"


def _chains_low(cfg: RunConfig) -> Tuple[bool, str]:
    (c1,) = enumerate_cells(1, 2)
    (s1,) = enumerate_cells(1, 1)
    star = boundary(c1)
    h1, h2 = homology_table(1), homology_table(2)
    ok = set(star) == {s1} and sum(h1.values()) == 0 and h2.get(5) == 1 and sum(h2.values()) == 1
    return ok, f"d(chord)={len(star)} cell(s); H(p=1)={h1}; H(p=2)={h2}"


def _principal_parts(cfg: RunConfig) -> Tuple[bool, str]:
    tt, odd = verify_cycle(principal_part_tt()), verify_cycle(principal_part_odd())
    return tt and odd, f"tt cycle={tt} odd cycle={odd}"


def _great_circles(cfg: RunConfig) -> Tuple[bool, str]:
    ev = evaluate_compact("C", great_circle_cycle(), cfg)
    ca, cb = ev.per_stratum["Ca"].count_total, ev.per_stratum["Cb"].count_total
    return abs(ev.total_signed) == 1 and ca == 0 and cb == 1, ev.summary_line()


def _hopf(cfg: RunConfig) -> Tuple[bool, str]:
    ev = evaluate_compact("A", hopf_fiber_cycle(), cfg)
    return abs(ev.total_signed) == 1, ev.summary_line()


def _constant(cfg: RunConfig) -> Tuple[bool, str]:
    ev = evaluate_tt(constant_loop(), cfg.model_copy(update={"frames": 32}))
    return ev.total_mod2 == 0, ev.summary_line()


def _transport(loop, phases, cfg: RunConfig) -> Tuple[bool, str]:
    track = track_crossings(loop, cfg.frames, cfg)
    end_transport = dict((n, hi) for n, _, hi in phases)["leave"]
    triples = [e for e in track.triple_points if e.tau < end_transport]
    ev = evaluate_tt(loop, cfg, track=track)
    return ev.total_mod2 == 1 and len(triples) == 18, f"{ev.summary_line()}; triple instants={len(triples)}"


def _bead_loop(cfg: RunConfig) -> Tuple[bool, str]:
    return _transport(trefoil_bead_loop(0.05, max(cfg.frames, 512)), bead_loop_phases(), cfg)


def _tube_loop(cfg: RunConfig) -> Tuple[bool, str]:
    return _transport(trefoil_tube_loop(0.05, max(cfg.frames, 512)), tube_loop_phases(), cfg)


QUICK: List[Check] = [
    ("v2/v3 on the trefoil diagram", _gauss_values),
    ("v2/v3 on projected fixtures", _projected_values),
    ("D(3) by crossing pairs equals v2", _d3_direct),
    ("chord complex p<=2", _chains_low),
    ("principal parts are cycles", _principal_parts),
    ("constant loop: TT = 0", _constant),
]
SLOW: List[Check] = [
    ("great circles: class C", _great_circles),
    ("Hopf fibers: class A", _hopf),
]
FULL: List[Check] = [
    ("trefoil bead loop: TT = 1", _bead_loop),
    ("trefoil tube loop: TT = 1", _tube_loop),
]


def run_selftest(cfg: Optional[RunConfig] = None, level: str = "default") -> List[CheckResult]:
    """level: 'quick' (exact checks), 'default' (+ the 3-cycles) or 'full' (+ the two transport loops)."""
    cfg = cfg or load_config()
    checks = list(QUICK)
    if level in ("default", "full"):
        checks += SLOW
    if level == "full":
        checks += FULL
    out: List[CheckResult] = []
    for name, fn in checks:
        t0 = time.perf_counter()
        try:
            ok, detail = fn(cfg)
        except KnotStrataError as e:
            log.warning("%s failed: %s", name, e)
            ok, detail = False, f"{type(e).__name__}: {e}"
        out.append(CheckResult(name=name, ok=ok, detail=detail, seconds=time.perf_counter() - t0))
    return out


def render(results: List[CheckResult], console: Optional[Console] = None) -> None:
    console = console or Console()
    table = Table(title="knotstrata selftest")
    table.add_column("check")
    table.add_column("result")
    table.add_column("detail", overflow="fold")
    table.add_column("s", justify="right")
    for r in results:
        table.add_row(r.name, "[green]pass[/green]" if r.ok else "[red]FAIL[/red]", r.detail, f"{r.seconds:.2f}")
    console.print(table)


if __name__ == "__main__":
    results = run_selftest(level="full" if "--full" in sys.argv[1:] else "default")
    render(results)
    sys.exit(0 if all(r.ok for r in results) else 1)
