from __future__ import annotations
import argparse
import logging
import os
import sys
from typing import Any, Dict, List, Optional

import orjson
from dotenv import load_dotenv

from knotstrata.config import load_config
from knotstrata.errors import InputError, KnotStrataError
from knotstrata.gauss_diagrams import format_gauss
from knotstrata.logs import console, setup_logging
from knotstrata.main import render, run_selftest
from knotstrata.persist import content_hash, read_curve, read_family, read_json, write_family, write_results
from knotstrata.pipeline import (
    chain_lines,
    evaluate_family,
    extract_diagram,
    format_fraction,
    run_invariant,
    run_scenario,
    verify_chains,
)
from knotstrata.schema import RunConfig

load_dotenv()

log = logging.getLogger("knotstrata.app")

APP_NAME = "knotstrata"


# -------------------- helpers --------------------
def _json_arg(raw: Optional[str], what: str) -> Dict[str, Any]:
    """Inline JSON object or a path to a JSON file."""
    if not raw:
        return {}
    if os.path.exists(raw):
        data = read_json(raw)
    else:
        try:
            data = orjson.loads(raw)
        except orjson.JSONDecodeError as e:
            raise InputError(f"{what}: not a JSON object or file ({e})") from e
    if not isinstance(data, dict):
        raise InputError(f"{what}: expected a JSON object")
    return data


def _config(args: argparse.Namespace) -> RunConfig:
    overrides = _json_arg(args.config, "--config")
    overrides.update({k: v for k, v in (("threads", args.threads), ("frames", args.frames),
                                          ("out_dir", args.out)) if v is not None})
    return load_config(overrides)


# -------------------- verbs --------------------
def cmd_eval_cocycle(args: argparse.Namespace, cfg: RunConfig) -> int:
    cycle = read_family(args.family)
    if args.n is not None and cycle.n != args.n:
        raise InputError(f"family lives in R^{cycle.n}, not R^{args.n}")
    ev = evaluate_family(args.class_id, cycle, cfg, method=args.method)
    print(ev.summary_line())
    out = cfg.out_dir
    if out:
        write_results(ev, out, cfg, inputs={"family": read_json(args.family), "class": ev.class_id})
    return 0


def cmd_eval_invariant(args: argparse.Namespace, cfg: RunConfig) -> int:
    print(format_fraction(run_invariant(args.formula, args.gauss)))
    return 0


def cmd_diagram(args: argparse.Namespace, cfg: RunConfig) -> int:
    curve = read_curve(args.curve)
    print(format_gauss(extract_diagram(curve, cfg)))
    return 0


def cmd_verify_chains(args: argparse.Namespace, cfg: RunConfig) -> int:
    report = verify_chains(args.p)
    for line in chain_lines(report):
        print(line)
    return 0 if report["ok"] else 1


def cmd_scenario(args: argparse.Namespace, cfg: RunConfig) -> int:
    params = _json_arg(args.params, "--params")
    cycle, ev = run_scenario(args.name, params, cfg, class_hint=args.class_id)
    print(ev.summary_line())
    out = cfg.out_dir
    if out:
        family_path = write_family(os.path.join(out, f"{cycle.name}.family.json"), cycle)
        write_results(ev, out, cfg, inputs={"scenario": args.name, "params": params}, stem=cycle.name)
        log.info("family written to %s (hash %s)", family_path, content_hash(cycle.params))
    return 0


def cmd_selftest(args: argparse.Namespace, cfg: RunConfig) -> int:
    level = "full" if args.full else ("quick" if args.quick else "default")
    results = run_selftest(cfg, level)
    render(results)
    return 0 if all(r.ok for r in results) else 1


# -------------------- parser --------------------
def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--verbose", "-v", action="store_true", help="debug logging")
    common.add_argument("--out", help="directory for result files")
    common.add_argument("--config", help="RunConfig overrides: JSON object or file")
    common.add_argument("--threads", type=int, help="worker threads (also KNOTSTRATA_THREADS)")
    common.add_argument("--frames", type=int, help="frames per loop when tracking")

    p = argparse.ArgumentParser(prog=APP_NAME, description="Evaluate knot-space cocycles and finite-type invariants.")
    sub = p.add_subparsers(dest="verb", required=True)

    ev = sub.add_parser("eval-cocycle", parents=[common], help="evaluate a cohomology class on a family of knots")
    ev.add_argument("--class", dest="class_id", required=True, help="tt, A, B, C or D")
    ev.add_argument("--family", required=True, help="family JSON")
    ev.add_argument("--n", type=int, help="expected ambient dimension")
    ev.add_argument("--method", choices=["track", "newton"], default="track", help="TT on loops only")
    ev.set_defaults(func=cmd_eval_cocycle)

    inv = sub.add_parser("eval-invariant", parents=[common], help="evaluate an arrow-diagram formula")
    inv.add_argument("--formula", required=True, help="v2, v3, formula text or file")
    inv.add_argument("--gauss", required=True, help="Gauss diagram text or file")
    inv.set_defaults(func=cmd_eval_invariant)

    dg = sub.add_parser("diagram", parents=[common], help="Gauss diagrams of curves")
    dg.add_argument("action", choices=["extract"])
    dg.add_argument("--curve", required=True, help="curve JSON")
    dg.set_defaults(func=cmd_diagram)

    vc = sub.add_parser("verify-chains", parents=[common], help="check the chord-diagram complex")
    vc.add_argument("--p", type=int, default=2, help="complexity 1..3")
    vc.set_defaults(func=cmd_verify_chains)

    sc = sub.add_parser("scenario", parents=[common], help="build and evaluate a shipped family")
    sc.add_argument("action", choices=["run"])
    sc.add_argument("name", help="trefoil_bead, trefoil_tube, great_circles, hopf, constant, disk_boundary")
    sc.add_argument("--params", help="scenario parameters: JSON object or file")
    sc.add_argument("--class", dest="class_id", help="override the class evaluated")
    sc.set_defaults(func=cmd_scenario)

    st = sub.add_parser("selftest", parents=[common], help="run the acceptance checks")
    st.add_argument("--quick", action="store_true", help="exact checks only")
    st.add_argument("--full", action="store_true", help="include the bead loop")
    st.set_defaults(func=cmd_selftest)
    return p


def cli(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    setup_logging(logging.DEBUG if args.verbose else logging.WARNING)
    try:
        cfg = _config(args)
        return args.func(args, cfg)
    except KnotStrataError as e:
        console.print(f"error: {e}", style="red", markup=False, highlight=False)
        return e.exit_code


if __name__ == "__main__":
    sys.exit(cli())
