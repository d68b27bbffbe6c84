"""Matrix and Fock-state serialisation.

Matrix JSON: ``{"m": int, "n": int, "re": [[...]], "im": [[...]]}``.
Matrix CSV: one line per row, each cell written as two fields ``re,im``.
Fock state: comma separated occupations, ``"0,2,1,0,1"``.
"""

from __future__ import annotations

import csv
import io
import json
from pathlib import Path

import numpy as np

from .core import InputError


def format_float(x):
    return f"{x:.17g}"


def matrix_to_dict(u):
    u = np.asarray(u, dtype=np.complex128)
    return {
        "m": int(u.shape[0]),
        "n": int(u.shape[1]),
        "re": u.real.tolist(),
        "im": u.imag.tolist(),
    }


def matrix_from_dict(obj, where="matrix"):
    if not isinstance(obj, dict):
        raise InputError(f"{where}: expected an object with m, n, re, im")
    for key in ("m", "n", "re", "im"):
        if key not in obj:
            raise InputError(f"{where}: missing field {key!r}")
    m, n = obj["m"], obj["n"]
    if not (isinstance(m, int) and isinstance(n, int)) or m < 1 or n < 1:
        raise InputError(f"{where}: fields 'm' and 'n' must be positive integers")
    try:
        re = np.asarray(obj["re"], dtype=float)
        im = np.asarray(obj["im"], dtype=float)
    except (TypeError, ValueError) as exc:
        raise InputError(f"{where}: fields 're'/'im' must be numeric matrices ({exc})") from None
    for key, part in (("re", re), ("im", im)):
        if part.shape != (m, n):
            raise InputError(f"{where}: field {key!r} has shape {part.shape}, expected {(m, n)}")
    return re + 1j * im


def save_matrix_json(u, path):
    Path(path).write_text(json.dumps(matrix_to_dict(u)))


def load_matrix_json(path):
    try:
        obj = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: not valid JSON ({exc})") from None
    return matrix_from_dict(obj, where=str(path))


def save_matrix_csv(u, path):
    u = np.asarray(u, dtype=np.complex128)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    for row in u:
        cells = []
        for z in row:
            cells.extend([format_float(z.real), format_float(z.imag)])
        writer.writerow(cells)
    Path(path).write_text(buf.getvalue())


def load_matrix_csv(path):
    rows = []
    with open(path, newline="") as fh:
        for lineno, fields in enumerate(csv.reader(fh), start=1):
            if not fields:
                continue
            if len(fields) % 2:
                raise InputError(f"{path}:{lineno}: odd number of fields; cells are re,im pairs")
            try:
                vals = [float(f) for f in fields]
            except ValueError as exc:
                raise InputError(f"{path}:{lineno}: {exc}") from None
            rows.append([complex(a, b) for a, b in zip(vals[::2], vals[1::2])])
    if not rows or len({len(r) for r in rows}) != 1:
        raise InputError(f"{path}: rows must be non-empty and of equal length")
    return np.array(rows, dtype=np.complex128)


def load_matrix(path):
    if str(path).lower().endswith(".csv"):
        return load_matrix_csv(path)
    return load_matrix_json(path)


def format_state(state):
    return ",".join(str(s) for s in state)


def parse_state(text):
    try:
        occ = tuple(int(t) for t in text.split(","))
    except ValueError:
        raise InputError(f"cannot parse Fock state {text!r}") from None
    if any(o < 0 for o in occ):
        raise InputError(f"negative occupation in Fock state {text!r}")
    return occ
