from __future__ import annotations
import os
from typing import Any, Dict, Optional
from dotenv import load_dotenv
from pydantic import ValidationError

from .errors import InputError
from .schema import RunConfig

# env name -> RunConfig field
ENV_FIELDS = {
    "KNOTSTRATA_THREADS": "threads",
    "KNOTSTRATA_FRAMES": "frames",
    "KNOTSTRATA_NEWTON_TOL": "newton_tol",
    "KNOTSTRATA_MARGIN_TOL": "margin_tol",
    "KNOTSTRATA_OUT_DIR": "out_dir",
}


def _env_overrides() -> Dict[str, Any]:
    out: Dict[str, Any] = {}
    for env, field in ENV_FIELDS.items():
        raw = (os.getenv(env) or "").strip()
        if raw:
            out[field] = raw
    return out


def load_config(overrides: Optional[Dict[str, Any]] = None, *, use_env: bool = True) -> RunConfig:
    """Defaults < .env / environment < explicit overrides (CLI flags, --config file)."""
    values: Dict[str, Any] = {}
    if use_env:
        load_dotenv()
        values.update(_env_overrides())
    values.update({k: v for k, v in (overrides or {}).items() if v is not None})
    try:
        return RunConfig(**values)
    except ValidationError as e:
        raise InputError(f"invalid run configuration: {e.errors()[0]['msg']}") from e


def worker_count(cfg: RunConfig) -> int:
    return max(1, min(cfg.threads, os.cpu_count() or 1))
