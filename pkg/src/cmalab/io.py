"""CSV fields, line-JSON reports and INI run configurations."""
from __future__ import annotations

import csv
import dataclasses
import json

import numpy as np

FMT = "%.17g"


def _header(domain) -> str:
    shape = "x".join(str(s) for s in domain.shape)
    return f"# n={domain.n} shape={shape} h={FMT % domain.h} preset={domain.preset}"


def write_field(path, domain, values: np.ndarray, contact: np.ndarray | None = None) -> None:
    """One row per grid node: index coordinates, value (and contact flag)."""
    values = np.asarray(values, dtype=float)
    if values.shape != domain.shape:
        full = np.zeros(domain.shape)
        full[domain.interior_mask] = values
        values = full
    idx = np.indices(domain.shape).reshape(domain.dim, -1).T
    flat = values.ravel()
    cols = [f"i{a}" for a in range(domain.dim)] + ["value"]
    if contact is not None:
        cols.append("contact")
        cflat = np.asarray(contact, dtype=bool).ravel()
    with open(path, "w", newline="") as fh:
        fh.write(_header(domain) + "\n")
        fh.write(",".join(cols) + "\n")
        for r in range(flat.size):
            row = ",".join(str(int(i)) for i in idx[r]) + "," + FMT % flat[r]
            if contact is not None:
                row += f",{int(cflat[r])}"
            fh.write(row + "\n")


def read_field(path, domain=None) -> tuple:
    """Return (full-grid values, metadata); checks the header against ``domain``."""
    with open(path, newline="") as fh:
        first = fh.readline().strip()
        if not first.startswith("#"):
            raise ValueError(f"{path}: missing '# n=... shape=... h=...' header")
        meta = dict(tok.split("=", 1) for tok in first[1:].split())
        shape = tuple(int(s) for s in meta["shape"].split("x"))
        if domain is not None and shape != domain.shape:
            raise ValueError(f"{path}: shape {shape} does not match domain shape {domain.shape}")
        reader = csv.reader(fh)
        cols = next(reader)
        dim = len(shape)
        values = np.zeros(shape)
        contact = np.zeros(shape, dtype=bool) if "contact" in cols else None
        for row in reader:
            if not row:
                continue
            key = tuple(int(x) for x in row[:dim])
            values[key] = float(row[dim])
            if contact is not None:
                contact[key] = row[dim + 1] == "1"
    meta["contact"] = contact
    return values, meta


def _jsonable(obj):
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return {f.name: _jsonable(getattr(obj, f.name)) for f in dataclasses.fields(obj)}
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating, float)):
        return float(FMT % obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def json_line(record) -> str:
    return json.dumps(_jsonable(record), sort_keys=True)


def append_jsonl(path, records) -> None:
    with open(path, "a") as fh:
        for rec in records:
            fh.write(json_line(rec) + "\n")
