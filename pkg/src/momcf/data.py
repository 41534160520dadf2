"""Sparse binary interaction matrix, triplet ingestion and dataset statistics."""

from __future__ import annotations

import io
import os
import threading
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Sequence

import numpy as np
import scipy.sparse as sp

from .errors import DataFormatError, EmptyDataError


@dataclass(eq=False)
class InteractionMatrix:
    """Binary user x item matrix in compressed row form.

    ``item_ids[row_offsets[u]:row_offsets[u + 1]]`` holds the strictly
    increasing item indices of user ``u``.  The matrix itself is immutable;
    only ``pass_counter`` changes, once per completed full scan of the rows.
    """

    n_users: int
    n_items: int
    row_offsets: np.ndarray
    item_ids: np.ndarray
    user_keys: list[str] | None = None
    item_keys: list[str] | None = None
    pass_counter: int = 0
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False)

    def __post_init__(self):
        self.row_offsets = np.asarray(self.row_offsets, dtype=np.int64)
        self.item_ids = np.asarray(self.item_ids, dtype=np.int64)
        if self.row_offsets.shape != (self.n_users + 1,):
            raise ValueError("row_offsets must have length n_users + 1")
        if self.row_offsets[0] != 0 or self.row_offsets[-1] != len(self.item_ids):
            raise ValueError("row_offsets must start at 0 and end at nnz")
        if np.any(np.diff(self.row_offsets) < 0):
            raise ValueError("row_offsets must be non-decreasing")
        if len(self.item_ids) and (self.item_ids.min() < 0 or self.item_ids.max() >= self.n_items):
            raise ValueError("item id out of range")
        steps = np.diff(self.item_ids)
        # a step may only be non-positive where a new row begins
        starts = np.zeros(len(self.item_ids), dtype=bool)
        starts[self.row_offsets[:-1][self.row_offsets[:-1] < len(self.item_ids)]] = True
        if np.any((steps <= 0) & ~starts[1:]):
            raise ValueError("item ids within a row must be strictly increasing")
        self.row_offsets.setflags(write=False)
        self.item_ids.setflags(write=False)

    @classmethod
    def from_rows(cls, rows: Sequence[Iterable[int]], n_items: int | None = None) -> InteractionMatrix:
        """Build from per-user item lists; duplicates are collapsed."""
        clean = [np.unique(np.asarray(list(r), dtype=np.int64)) for r in rows]
        offsets = np.zeros(len(clean) + 1, dtype=np.int64)
        offsets[1:] = np.cumsum([len(r) for r in clean])
        ids = np.concatenate(clean) if clean else np.zeros(0, dtype=np.int64)
        if n_items is None:
            n_items = int(ids.max()) + 1 if len(ids) else 0
        return cls(len(clean), int(n_items), offsets, ids)

    @classmethod
    def from_dense(cls, x) -> InteractionMatrix:
        x = np.asarray(x)
        return cls.from_rows([np.flatnonzero(row) for row in x], n_items=x.shape[1])

    @property
    def nnz(self) -> int:
        return int(self.row_offsets[-1])

    @property
    def row_nnz(self) -> np.ndarray:
        return np.diff(self.row_offsets)

    @property
    def empty_rows(self) -> np.ndarray:
        """Indices of users without any interaction."""
        return np.flatnonzero(self.row_nnz == 0)

    def row(self, u: int) -> np.ndarray:
        return self.item_ids[self.row_offsets[u]:self.row_offsets[u + 1]]

    def rows(self) -> Iterator[np.ndarray]:
        """Iterate over all rows; a completed iteration counts as one pass."""
        for u in range(self.n_users):
            yield self.row(u)
        self.record_pass()

    def scan(self) -> sp.csr_matrix:
        """Full-data view for vectorised consumers; counts as one pass."""
        self.record_pass()
        return self.csr()

    def csr(self) -> sp.csr_matrix:
        """CSR view of X with int64 ones; does not count as a pass."""
        data = np.ones(self.nnz, dtype=np.int64)
        return sp.csr_matrix(
            (data, self.item_ids, self.row_offsets), shape=(self.n_users, self.n_items)
        )

    def user_of_entry(self) -> np.ndarray:
        """Row index of every stored entry (COO row array)."""
        return np.repeat(np.arange(self.n_users), self.row_nnz)

    def record_pass(self):
        with self._lock:
            self.pass_counter += 1

    def reset_passes(self):
        with self._lock:
            self.pass_counter = 0

    def to_triplets(self) -> Iterator[str]:
        """Render as tab-separated ``user<TAB>item`` lines."""
        ukeys = self.user_keys or [f"u{u}" for u in range(self.n_users)]
        ikeys = self.item_keys or [f"i{i}" for i in range(self.n_items)]
        for u in range(self.n_users):
            for i in self.row(u):
                yield f"{ukeys[u]}\t{ikeys[i]}\n"


@dataclass(frozen=True)
class DatasetStats:
    n_users: int
    d1s: float
    d2s: float
    d3s: float
    sum_nnz: int
    sum_nnz2: int
    sum_nnz3: int


def compute_stats(x: InteractionMatrix) -> DatasetStats:
    """Mean first, second and third powers of the per-user item counts."""
    if x.n_users < 1:
        raise EmptyDataError("no users")
    n = x.row_nnz.astype(object)  # python ints: exact for any size
    s1, s2, s3 = int(sum(n)), int(sum(n**2)), int(sum(n**3))
    if s1 == 0:
        raise EmptyDataError("all rows are empty; moments are undefined")
    N = x.n_users
    return DatasetStats(N, s1 / N, s2 / N, s3 / N, s1, s2, s3)


def _split(line: str, sep: str | None) -> list[str]:
    if sep is None:
        sep = "\t" if "\t" in line else ","
    return [c.strip() for c in line.split(sep)]


def load_triplets(
    source: str | os.PathLike | Iterable[str],
    user_col: int = 0,
    item_col: int = 1,
    sep: str | None = None,
) -> InteractionMatrix:
    """Read ``user, item[, ...]`` records into an :class:`InteractionMatrix`.

    ``source`` is a path or any iterable of text lines.  Columns are split on
    ``sep`` (tab if the line contains one, comma otherwise, when ``None``).
    Lines starting with ``#`` and blank lines are skipped; extra columns are
    ignored.  Users and items are indexed in first-appearance order and
    repeated (user, item) pairs collapse to a single entry.
    """
    if isinstance(source, (str, os.PathLike)):
        with open(source, encoding="utf-8") as fh:
            return load_triplets(fh, user_col, item_col, sep)
    if isinstance(source, io.TextIOBase) or hasattr(source, "read"):
        source = iter(source)

    need = max(user_col, item_col) + 1
    users: dict[str, int] = {}
    items: dict[str, int] = {}
    per_user: list[set[int]] = []
    for lineno, raw in enumerate(source, start=1):
        line = raw.rstrip("\r\n")
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        cols = _split(line, sep)
        if len(cols) < need:
            raise DataFormatError(f"expected at least {need} columns, got {len(cols)}", lineno)
        ukey, ikey = cols[user_col], cols[item_col]
        if not ukey or not ikey:
            raise DataFormatError("empty user or item key", lineno)
        u = users.setdefault(ukey, len(users))
        if u == len(per_user):
            per_user.append(set())
        per_user[u].add(items.setdefault(ikey, len(items)))
    if not users:
        raise DataFormatError("input contains no interactions")

    x = InteractionMatrix.from_rows([sorted(s) for s in per_user], n_items=len(items))
    x.user_keys = list(users)
    x.item_keys = list(items)
    return x
