from __future__ import annotations
import logging
import os
from fractions import Fraction
from typing import Any, Dict, List, Optional, Tuple

from .chord_complex import (
    GOLDEN_BOUNDARIES,
    GOLDEN_HOMOLOGY_RANK,
    MAX_COMPLEXITY,
    boundary,
    boundary_chain,
    chain,
    enumerate_cells,
    format_cell,
    homology_table,
    is_boundary,
    parse_cell,
    principal_part_odd,
    principal_part_tt,
    top_degree,
    verify_cycle,
)
from .cocycle_eval import evaluate_compact, evaluate_tt
from .curve_model import KnotCycle, ParamCurve
from .errors import InputError
from .gauss_diagrams import GaussDiagram, evaluate_formula, parse_gauss, project_to_diagram, resolve_formula
from .router import normalize_class
from .scenarios import SCENARIO_CLASS, build_scenario, normalize_scenario
from .schema import Evaluation, RunConfig

log = logging.getLogger(__name__)


# ---------------- helpers ----------------
def _read_text(path_or_text: str) -> str:
    if os.path.exists(path_or_text):
        with open(path_or_text, "r", encoding="utf-8") as f:
            return f.read()
    return path_or_text


def _chain_text(ch) -> str:
    return " + ".join(format_cell(c) for c in ch) if ch else "0"


# ---------------- cocycles ----------------
def evaluate_family(class_hint: str, cycle: KnotCycle, cfg: RunConfig, method: str = "track") -> Evaluation:
    class_id = normalize_class(class_hint)
    if class_id == "TT":
        return evaluate_tt(cycle, cfg, method=method)
    return evaluate_compact(class_id, cycle, cfg)


def run_scenario(name: str, params: Optional[Dict[str, Any]], cfg: RunConfig,
                 class_hint: Optional[str] = None) -> Tuple[KnotCycle, Evaluation]:
    key = normalize_scenario(name)
    cycle = build_scenario(key, params)
    class_id = normalize_class(class_hint or SCENARIO_CLASS[key])
    log.info("scenario %s: evaluating class %s on %s", key, class_id, cycle.name)
    return cycle, evaluate_family(class_id, cycle, cfg)


# ---------------- Gauss diagrams ----------------
def run_invariant(formula: str, gauss: str) -> Fraction:
    """Value of an arrow-diagram formula (name, text or file) on a Gauss diagram (text or file)."""
    f = resolve_formula(_read_text(formula).strip())
    d = parse_gauss(_read_text(gauss))
    return evaluate_formula(f, d)


def extract_diagram(curve: ParamCurve, cfg: RunConfig) -> GaussDiagram:
    if curve.n != 3:
        raise InputError("diagram extraction needs a knot in R^3")
    return project_to_diagram(curve, 3, cfg)


def format_fraction(x: Fraction) -> str:
    return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


# ---------------- chord complex ----------------
def _check(name: str, ok: bool, detail: str = "") -> Dict[str, Any]:
    return {"name": name, "ok": bool(ok), "detail": detail}


def verify_chains(p: int) -> Dict[str, Any]:
    """Cell counts, boundaries compared with the golden equations, d^2 = 0 and homology of one filtration term."""
    if not 1 <= p <= MAX_COMPLEXITY:
        raise InputError(f"complexity p must be in 1..{MAX_COMPLEXITY}, got {p}")
    cells = enumerate_cells(p)
    by_degree: Dict[int, int] = {}
    for c in cells:
        by_degree[c.degree] = by_degree.get(c.degree, 0) + 1
    checks: List[Dict[str, Any]] = []
    boundaries: List[Tuple[str, str]] = []
    if p in GOLDEN_BOUNDARIES:
        for text, faces in GOLDEN_BOUNDARIES[p]:
            cell = parse_cell(text)
            got, expected = boundary(cell), chain(*faces)
            boundaries.append((format_cell(cell), _chain_text(got)))
            checks.append(_check(f"d {format_cell(cell)} = {_chain_text(expected)}", got == expected,
                                 "" if got == expected else f"got {_chain_text(got)}"))
    else:
        boundaries = [(format_cell(c), _chain_text(boundary(c))) for c in enumerate_cells(p, top_degree(p))]
    d2 = all(not boundary_chain(boundary(c)) for c in cells)
    checks.append(_check("d^2 = 0", d2))
    homology = homology_table(p)
    rank = sum(homology.values())
    checks.append(_check(f"total homology rank {GOLDEN_HOMOLOGY_RANK[p]}", rank == GOLDEN_HOMOLOGY_RANK[p],
                         f"got {rank}"))
    report: Dict[str, Any] = {
        "p": p,
        "cells": dict(sorted(by_degree.items())),
        "boundaries": boundaries,
        "d_squared_zero": d2,
        "homology": homology,
        "golden": p in GOLDEN_BOUNDARIES,
    }
    if p == MAX_COMPLEXITY:
        tt, odd = principal_part_tt(), principal_part_odd()
        report["principal_parts"] = {
            "tt": {"chain": _chain_text(tt), "cycle": verify_cycle(tt)},
            "odd": {"chain": _chain_text(odd), "cycle": verify_cycle(odd)},
        }
        checks.append(_check("principal part tt is a cycle", verify_cycle(tt)))
        checks.append(_check("principal part odd is a cycle", verify_cycle(odd)))
        checks.append(_check("principal parts tt + odd is a boundary", is_boundary(tt + odd)))
    report["checks"] = checks
    report["ok"] = all(c["ok"] for c in checks)
    log.debug("p=%d: %d cells, homology %s", p, len(cells), homology)
    return report


def chain_lines(report: Dict[str, Any]) -> List[str]:
    lines = [f"complexity p={report['p']}: cells by degree {report['cells']}"]
    if not report["golden"]:
        lines += [f"d {cell} = {img}" for cell, img in report["boundaries"]]
    ranks = report["homology"]
    lines.append("homology: " + ", ".join(f"H{d}={r}" for d, r in ranks.items()))
    for c in report["checks"]:
        detail = f" ({c['detail']})" if c["detail"] and not c["ok"] else ""
        lines.append(f"{'PASS' if c['ok'] else 'FAIL'} {c['name']}{detail}")
    passed = sum(1 for c in report["checks"] if c["ok"])
    lines.append(f"golden checks: {passed}/{len(report['checks'])} pass")
    return lines
