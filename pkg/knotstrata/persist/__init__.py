from __future__ import annotations
import csv
import hashlib
import logging
import os
from typing import Any, Dict, Iterable, List, Optional

import orjson

from ..errors import InputError
from ..schema import Evaluation, Event, RunConfig

log = logging.getLogger(__name__)

JSON_OPTS = orjson.OPT_SORT_KEYS | orjson.OPT_INDENT_2 | orjson.OPT_SERIALIZE_NUMPY
RESULT_FORMAT = "knotstrata.result/1"


def dumps(obj: Any) -> bytes:
    return orjson.dumps(obj, option=JSON_OPTS) + b"\n"


def read_json(path: str) -> Any:
    if not os.path.exists(path):
        raise InputError(f"no such file: {path}")
    try:
        with open(path, "rb") as f:
            return orjson.loads(f.read())
    except orjson.JSONDecodeError as e:
        raise InputError(f"{path}: malformed JSON ({e})", where={"path": path}) from e


def write_json(path: str, obj: Any) -> str:
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "wb") as f:
        f.write(dumps(obj))
    return path


def content_hash(obj: Any) -> str:
    return hashlib.sha256(orjson.dumps(obj, option=orjson.OPT_SORT_KEYS | orjson.OPT_SERIALIZE_NUMPY)).hexdigest()


# ---------------- results ----------------
def _sorted_events(events: Iterable[Event]) -> List[Event]:
    return sorted(events, key=lambda e: e.sort_key())


def canonical_result(evaluation: Evaluation, cfg: RunConfig, inputs: Optional[Dict[str, Any]] = None) -> Dict[str, Any]:
    """Result record with canonically ordered events, the config echo and an input hash."""
    data = evaluation.model_dump(mode="json")
    for name, sc in evaluation.per_stratum.items():
        data["per_stratum"][name]["events"] = [e.model_dump(mode="json") for e in _sorted_events(sc.events)]
    return {
        "format": RESULT_FORMAT,
        "evaluation": data,
        "summary": evaluation.summary_line(),
        "config": cfg.model_dump(mode="json"),
        "input_hash": content_hash(inputs or {}),
    }


def write_results(evaluation: Evaluation, out_dir: str, cfg: RunConfig,
                  inputs: Optional[Dict[str, Any]] = None, stem: str = "result") -> Dict[str, str]:
    """result JSON, JSON-lines event log, CSV summary and a config echo under out_dir."""
    os.makedirs(out_dir, exist_ok=True)
    paths = {
        "result": os.path.join(out_dir, f"{stem}.json"),
        "events": os.path.join(out_dir, f"{stem}.events.jsonl"),
        "summary": os.path.join(out_dir, f"{stem}.summary.csv"),
        "config": os.path.join(out_dir, f"{stem}.config.json"),
    }
    write_json(paths["result"], canonical_result(evaluation, cfg, inputs))
    with open(paths["events"], "wb") as f:
        for name in sorted(evaluation.per_stratum):
            for e in _sorted_events(evaluation.per_stratum[name].events):
                f.write(orjson.dumps(e.model_dump(mode="json"), option=orjson.OPT_SORT_KEYS) + b"\n")
    with open(paths["summary"], "w", encoding="utf-8", newline="") as f:
        w = csv.writer(f)
        w.writerow(["stratum", "count_mod2", "count_signed", "n_events"])
        for name in sorted(evaluation.per_stratum):
            sc = evaluation.per_stratum[name]
            w.writerow([name, sc.count_mod2, sc.count_signed, sc.n_events])
    write_json(paths["config"], cfg.model_dump(mode="json"))
    log.info("wrote %s", paths["result"])
    return paths


def read_events(path: str) -> List[Event]:
    out: List[Event] = []
    with open(path, "rb") as f:
        for i, line in enumerate(f):
            if not line.strip():
                continue
            try:
                out.append(Event.model_validate(orjson.loads(line)))
            except (orjson.JSONDecodeError, ValueError) as e:
                raise InputError(f"{path}:{i + 1}: bad event record ({e})") from e
    return out


def read_summary(path: str) -> Dict[str, Dict[str, int]]:
    with open(path, "r", encoding="utf-8", newline="") as f:
        return {row["stratum"]: {k: int(v) for k, v in row.items() if k != "stratum"} for row in csv.DictReader(f)}


from .families import read_curve, read_family, write_curve, write_family  # noqa: E402

__all__ = [
    "dumps", "read_json", "write_json", "content_hash", "canonical_result", "write_results",
    "read_events", "read_summary", "read_curve", "write_curve", "read_family", "write_family",
]
