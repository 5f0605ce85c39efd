# Result records: JSON via orjson, convergence and trade-off curves as CSV via pandas.
from __future__ import annotations

import dataclasses
import logging
import math
import sys
from enum import Enum
from pathlib import Path
from typing import Any, Optional, Sequence

import numpy as np
import orjson
import pandas as pd

from app.services.spectral import ExtendedSum

logger = logging.getLogger(__name__)

JSON_OPTIONS = orjson.OPT_SORT_KEYS | orjson.OPT_INDENT_2 | orjson.OPT_SERIALIZE_NUMPY | orjson.OPT_APPEND_NEWLINE
CSV_FLOAT_FORMAT = "%.17g"


def number(x) -> Any:
    """Float for JSON: ±∞ become the strings "inf"/"-inf", NaN becomes null."""
    if x is None:
        return None
    x = float(x)
    if math.isnan(x):
        return None
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return x


def sum_fields(s: ExtendedSum, key: str) -> dict[str, Any]:
    """Flatten an ExtendedSum into `key`, truncation_level, tail_bound and status."""
    return {
        key: number(s.value),
        "truncation_level": int(s.level),
        "tail_bound": number(s.tail_bound),
        "status": s.status.value,
    }


def plain(obj: Any) -> Any:
    """Recursively convert results into JSON-ready builtins."""
    if isinstance(obj, ExtendedSum):
        return {"value": number(obj.value), "status": obj.status.value,
                "level": int(obj.level), "tail_bound": number(obj.tail_bound)}
    if isinstance(obj, Enum):
        return obj.value
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return {f.name: plain(getattr(obj, f.name)) for f in dataclasses.fields(obj)}
    if isinstance(obj, dict):
        return {str(k): plain(v) for k, v in obj.items()}
    if isinstance(obj, np.ndarray):
        return plain(obj.tolist())
    if isinstance(obj, (list, tuple)):
        return [plain(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return number(obj)
    if isinstance(obj, complex):
        return {"re": number(obj.real), "im": number(obj.imag)}
    return obj


def dumps(record: dict) -> bytes:
    """Deterministic bytes: sorted keys, shortest round-trip floats."""
    return orjson.dumps(plain(record), option=JSON_OPTIONS)


def write_json(record: dict, path: Optional[str | Path] = None) -> None:
    data = dumps(record)
    if path is None:
        sys.stdout.buffer.write(data)
        sys.stdout.flush()
        return
    Path(path).write_bytes(data)
    logger.info("record written to %s", path)


# ── CSV tables ────────────────────────────────────────────────────────────────

def curve_frame(levels: np.ndarray, partial: np.ndarray) -> pd.DataFrame:
    """Columns N, partial_sum: the cumulative tilde-sum over M_N."""
    return pd.DataFrame({"N": np.asarray(levels, dtype=np.int64), "partial_sum": np.asarray(partial, dtype=float)})


def tradeoff_frame(solutions: Sequence) -> pd.DataFrame:
    """Columns N, mu, E_N, status: one row per solved budget."""
    return pd.DataFrame({
        "N": [s.budget_N for s in solutions],
        "mu": [s.mu for s in solutions],
        "E_N": [s.error_E.value for s in solutions],
        "status": [s.status.value for s in solutions],
    })


def write_csv(frame: pd.DataFrame, path: str | Path) -> None:
    frame.to_csv(path, index=False, float_format=CSV_FLOAT_FORMAT)
    logger.info("%d rows written to %s", len(frame), path)
