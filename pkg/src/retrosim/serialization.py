"""Lossless text serialisation of results and explicit channel specs.

Floats are written with 17 significant digits, which round-trips every
IEEE double. Matrices are ``{"rows", "cols", "entries"}`` objects with
row-major ``[re, im]`` pairs.
"""

from __future__ import annotations

import json
import math
from fractions import Fraction
from pathlib import Path

import numpy as np

from .channels import POVM, ChoiOperator, Kraus, MeasureAndPrepare, QuantumState
from .errors import ContractViolation, DimensionError


def fmt_float(x: float) -> str:
    text = format(float(x), ".17g")
    # keep a float marker so 0.0 does not read back as an integer
    return text if any(c in text for c in ".en") else text + ".0"


def _encode(obj, indent: str, level: int) -> str:
    pad = indent * (level + 1)
    close = indent * level
    sep = "\n" if indent else ""
    if obj is None or obj is True or obj is False:
        return json.dumps(obj)
    if isinstance(obj, (bool, np.bool_)):
        return json.dumps(bool(obj))
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return fmt_float(obj) if math.isfinite(obj) else "null"
    if isinstance(obj, Fraction):
        return json.dumps(f"{obj.numerator}/{obj.denominator}")
    if isinstance(obj, str):
        return json.dumps(obj, ensure_ascii=False)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {_encode(v, indent, level + 1)}" for k, v in obj.items()]
        return "{" + sep + ("," + sep).join(items) + sep + close + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        # short numeric lists stay on one line
        if all(isinstance(v, (int, float, np.number)) and not isinstance(v, bool) for v in obj):
            return "[" + ", ".join(_encode(v, indent, level + 1) for v in obj) + "]"
        items = [pad + _encode(v, indent, level + 1) for v in obj]
        return "[" + sep + ("," + sep).join(items) + sep + close + "]"
    if isinstance(obj, np.ndarray):
        return _encode(obj.tolist(), indent, level)
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def dumps(obj, indent: int = 2) -> str:
    return _encode(obj, " " * indent, 0) + "\n"


def matrix_to_json(m) -> dict:
    m = np.asarray(m, dtype=complex)
    return {"rows": int(m.shape[0]), "cols": int(m.shape[1]),
            "entries": [[float(z.real), float(z.imag)] for z in m.reshape(-1)]}


def matrix_from_json(obj) -> np.ndarray:
    try:
        rows, cols, entries = int(obj["rows"]), int(obj["cols"]), obj["entries"]
    except (KeyError, TypeError, ValueError) as exc:
        raise ContractViolation(f"matrix needs rows, cols and entries: {exc}") from exc
    if rows < 1 or cols < 1 or len(entries) != rows * cols:
        raise DimensionError(f"{len(entries)} entries do not fill a {rows}x{cols} matrix")
    vals = np.array([complex(float(e[0]), float(e[1])) if isinstance(e, (list, tuple)) else complex(float(e))
                     for e in entries])
    if not np.all(np.isfinite(vals)):
        raise ContractViolation("matrix has non-finite entries")
    return vals.reshape(rows, cols)


def load_spec(path) -> object:
    """Read an explicit-matrix channel file.

    Supported ``kind`` values: ``kraus`` (``operators``), ``measure-prepare``
    (``povm`` and ``states``) and ``choi`` (``matrix``, ``d_out``, ``d_in``).
    """
    obj = json.loads(Path(path).read_text(encoding="utf-8"))
    kind = obj.get("kind")
    if kind == "kraus":
        return Kraus(tuple(matrix_from_json(k) for k in obj["operators"]))
    if kind == "measure-prepare":
        povm = POVM(tuple(matrix_from_json(p) for p in obj["povm"]))
        states = tuple(QuantumState(matrix_from_json(s)) for s in obj["states"])
        return MeasureAndPrepare(povm, states)
    if kind == "choi":
        choi = ChoiOperator(matrix_from_json(obj["matrix"]), int(obj["d_out"]), int(obj["d_in"]),
                            label=str(obj.get("label", "file")))
        return choi.validate()
    raise ContractViolation(f"unknown spec kind {kind!r}")
