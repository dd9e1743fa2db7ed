"""Deterministic CSV/JSON artifacts with embedded config and content hash."""
from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import os
import tempfile
from fractions import Fraction
from pathlib import Path

import numpy as np

FLOAT_FMT = "%.12g"


def fmt_float(x: float) -> str:
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    s = FLOAT_FMT % x
    return "0" if s == "-0" else s


def clean(obj, rounded: bool = True):
    """Plain JSON value with every float rounded to 12 significant digits
    (kept exact when ``rounded`` is false); non-finite floats and Fractions
    become strings."""
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if not math.isfinite(x):
            return fmt_float(x)
        return float(fmt_float(x)) if rounded else x
    if isinstance(obj, Fraction):
        return str(obj)
    if isinstance(obj, dict):
        return {str(k): clean(v, rounded) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, np.ndarray)):
        return [clean(v, rounded) for v in obj]
    if obj is None or isinstance(obj, str):
        return obj
    if hasattr(obj, "to_dict"):
        return clean(obj.to_dict(), rounded)
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def canonical(obj, rounded: bool = True) -> str:
    return json.dumps(clean(obj, rounded), sort_keys=True, separators=(",", ":"))


def sha256(text: str) -> str:
    return hashlib.sha256(text.encode()).hexdigest()


def json_artifact(config: dict, data) -> str:
    body = clean(data)
    # the config is input, so its floats are kept exact
    doc = {"config": clean(config, False), "config_sha256": sha256(canonical(config, False)),
           "data": body, "sha256": sha256(canonical(body))}
    return json.dumps(doc, sort_keys=True, indent=1) + "\n"


def _cell(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return fmt_float(float(v))
    if v is None:
        return ""
    return str(v)


def csv_artifact(config: dict, columns: list[str], rows) -> str:
    """Two comment lines (config, sha256 of the table) then a fixed-order table."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        if len(row) != len(columns):
            raise ValueError("row width does not match columns")
        w.writerow([_cell(v) for v in row])
    table = buf.getvalue()
    return f"# config: {canonical(config, False)}\n# sha256: {sha256(table)}\n{table}"


def _umask() -> int:
    mask = os.umask(0)
    os.umask(mask)
    return mask


def write_atomic(path: Path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as f:
            f.write(text)
        os.chmod(tmp, 0o666 & ~_umask())
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_all(out: Path, files: dict[str, str]) -> list[Path]:
    paths = []
    for name in sorted(files):
        p = Path(out) / name
        write_atomic(p, files[name])
        paths.append(p)
    return paths
