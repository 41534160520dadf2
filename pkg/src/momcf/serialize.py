"""Plain-text model files.

MoM model::

    SPECCF 1 <D> <K>
    <pi_1> ... <pi_K>
    <O_11> ... <O_1K>        (D rows)

PLSI model::

    SPECCF-PLSI 1 <D> <K> <N>
    <P[y_1|h_1]> ... <P[y_1|h_K]>    (D rows)
    <P[h_1|u_1]> ... <P[h_K|u_1]>    (N rows)

Values are written with 17 significant digits, which round-trips float64.
"""

from __future__ import annotations

import math
import os
from typing import IO, Iterable

import numpy as np

from .baseline import PlsiModel
from .errors import DimensionMismatch, ModelFormatError, NonFiniteValue, UnsupportedVersion
from .model import MomModel

MAGIC = "SPECCF"
PLSI_MAGIC = "SPECCF-PLSI"
VERSION = 1


def _fmt_row(values: Iterable[float]) -> str:
    return " ".join(f"{float(v):.17g}" for v in values)


def dumps_model(m: MomModel) -> str:
    lines = [f"{MAGIC} {VERSION} {m.d} {m.k}", _fmt_row(m.pi)]
    lines.extend(_fmt_row(row) for row in m.o)
    return "\n".join(lines) + "\n"


def dumps_plsi(m: PlsiModel) -> str:
    d, k = m.p_y_given_h.shape
    n = m.p_h_given_u.shape[0]
    lines = [f"{PLSI_MAGIC} {VERSION} {d} {k} {n}"]
    lines.extend(_fmt_row(row) for row in m.p_y_given_h)
    lines.extend(_fmt_row(row) for row in m.p_h_given_u)
    return "\n".join(lines) + "\n"


def _write(text: str, target):
    if isinstance(target, (str, os.PathLike)):
        with open(target, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        target.write(text)


def _read(source) -> str:
    if isinstance(source, (str, os.PathLike)):
        with open(source, encoding="utf-8") as fh:
            return fh.read()
    return source.read()


def serialize_model(m: MomModel, target: str | os.PathLike | IO[str]):
    _write(dumps_model(m), target)


def serialize_plsi(m: PlsiModel, target: str | os.PathLike | IO[str]):
    _write(dumps_plsi(m), target)


def _header(line: str, magic: str, n_dims: int) -> list[int]:
    parts = line.split()
    if not parts or parts[0] != magic:
        raise ModelFormatError(f"expected header starting with {magic!r}, got {line[:40]!r}")
    if len(parts) < 2:
        raise ModelFormatError("header lacks a version")
    try:
        version = int(parts[1])
    except ValueError:
        raise ModelFormatError(f"bad version field {parts[1]!r}") from None
    if version != VERSION:
        raise UnsupportedVersion(f"model format version {version} is not supported (expected {VERSION})")
    if len(parts) != 2 + n_dims:
        raise ModelFormatError(f"header needs {n_dims} dimensions")
    try:
        dims = [int(p) for p in parts[2:]]
    except ValueError:
        raise ModelFormatError("non-integer dimension in header") from None
    if any(v < 1 for v in dims):
        raise ModelFormatError("dimensions must be positive")
    return dims


def _rows(lines: list[str], count: int, width: int, what: str) -> np.ndarray:
    if len(lines) != count:
        raise DimensionMismatch(f"expected {count} {what} rows, found {len(lines)}")
    out = np.empty((count, width))
    for i, line in enumerate(lines):
        parts = line.split()
        if len(parts) != width:
            raise DimensionMismatch(f"{what} row {i}: expected {width} values, found {len(parts)}")
        try:
            vals = [float(p) for p in parts]
        except ValueError:
            raise ModelFormatError(f"{what} row {i}: unparsable number") from None
        if not all(math.isfinite(v) for v in vals):
            raise NonFiniteValue(f"{what} row {i}: non-finite value")
        out[i] = vals
    return out


def loads_model(text: str) -> MomModel:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise ModelFormatError("empty model file")
    d, k = _header(lines[0], MAGIC, 2)
    if len(lines) < 2:
        raise DimensionMismatch("missing weight row")
    pi = _rows(lines[1:2], 1, k, "weight")[0]
    o = _rows(lines[2:], d, k, "item")
    return MomModel(o, pi)


def loads_plsi(text: str) -> PlsiModel:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise ModelFormatError("empty model file")
    d, k, n = _header(lines[0], PLSI_MAGIC, 3)
    if len(lines) != 1 + d + n:
        raise DimensionMismatch(f"expected {d + n} body rows, found {len(lines) - 1}")
    p_y = _rows(lines[1:1 + d], d, k, "item")
    p_h = _rows(lines[1 + d:], n, k, "user")
    return PlsiModel(p_y, p_h)


def deserialize_model(source) -> MomModel:
    return loads_model(_read(source))


def deserialize_plsi(source) -> PlsiModel:
    return loads_plsi(_read(source))


def write_posteriors(post: np.ndarray, user_keys, target):
    keys = user_keys or [str(u) for u in range(len(post))]
    text = "".join(f"{key}\t{_fmt_row(row)}\n" for key, row in zip(keys, post))
    _write(text, target)
