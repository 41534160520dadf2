"""Empirical first, pairwise and whitened third-order item moments."""

from __future__ import annotations

from dataclasses import dataclass
from itertools import permutations

import numpy as np
import scipy.sparse as sp

from .data import InteractionMatrix, compute_stats
from .errors import EmptyDataError

ROW_CHUNK = 4096


@dataclass(frozen=True)
class PairwiseMoment:
    """Normalised co-occurrence matrix ``counts / total``.

    ``counts`` keeps the exact integer co-occurrences so that the float matrix
    is produced by a single division and is independent of row order.
    """

    dim: int
    counts: sp.csr_matrix
    total: int
    include_diagonal: bool

    @property
    def matrix(self) -> sp.csr_matrix:
        # divide entrywise: scipy's scalar division multiplies by the reciprocal
        m = self.counts.astype(np.float64).tocsr()
        m.data = m.data / self.total
        return m

    def toarray(self) -> np.ndarray:
        return self.matrix.toarray()


@dataclass(frozen=True)
class WhitenedTriple:
    k: int
    values: np.ndarray


def symmetrize3(t: np.ndarray) -> np.ndarray:
    """Average a K x K x K array over the six index permutations."""
    return sum(np.transpose(t, p) for p in permutations(range(3))) / 6.0


def estimate_m1(x: InteractionMatrix) -> np.ndarray:
    """Item marginal: column counts over the total number of interactions."""
    if x.nnz == 0:
        raise EmptyDataError("all rows are empty")
    x.record_pass()
    counts = np.bincount(x.item_ids, minlength=x.n_items)
    return counts / x.nnz


def estimate_m2(x: InteractionMatrix, include_diagonal: bool = True) -> PairwiseMoment:
    """Pairwise probability matrix ``X^T X / sum_i nnz(x_i)^2``.

    With ``include_diagonal=False`` the self-pairs on the diagonal of
    ``X^T X`` are dropped and the normaliser becomes
    ``sum_i nnz(x_i) (nnz(x_i) - 1)``.
    """
    stats = compute_stats(x)
    xs = x.scan()
    counts = (xs.T @ xs).tocsr()
    total = stats.sum_nnz2
    if not include_diagonal:
        counts.setdiag(0)
        counts.eliminate_zeros()
        total -= stats.sum_nnz
    if total <= 0:
        raise EmptyDataError("no item pairs to estimate the pairwise moment from")
    counts.sort_indices()
    return PairwiseMoment(x.n_items, counts, int(total), include_diagonal)


class _Kahan:
    """Compensated elementwise accumulator."""

    def __init__(self, shape):
        self.sum = np.zeros(shape)
        self._c = np.zeros(shape)

    def add(self, v):
        y = v - self._c
        t = self.sum + y
        self._c = (t - self.sum) - y
        self.sum = t


def estimate_whitened_m3(
    x: InteractionMatrix,
    w: np.ndarray,
    include_diagonal: bool = True,
    chunk: int = ROW_CHUNK,
) -> WhitenedTriple:
    """Whitened third moment ``sum_i (x_i W)^{(x)3} / sum_i nnz(x_i)^3``.

    Never materialises the D^3 moment: each row is projected to ``x_i W``
    first, so a block of rows costs O(nnz K + rows K^3).

    With ``include_diagonal=False`` only triples of three distinct items are
    kept (inclusion-exclusion on the projected rows) and the normaliser is
    ``sum_i nnz(x_i) (nnz(x_i) - 1) (nnz(x_i) - 2)``.
    """
    w = np.asarray(w, dtype=np.float64)
    if w.ndim != 2 or w.shape[0] != x.n_items:
        raise ValueError(f"whitening matrix has shape {w.shape}, expected ({x.n_items}, K)")
    k = w.shape[1]
    if k > x.n_items:
        raise ValueError("K exceeds the number of items")
    stats = compute_stats(x)
    xs = x.scan()

    acc = _Kahan((k, k * k))
    g = np.zeros((x.n_items, k)) if not include_diagonal else None
    for lo in range(0, x.n_users, chunk):
        block = xs[lo:lo + chunk]
        y = np.asarray(block @ w)
        pair = (y[:, :, None] * y[:, None, :]).reshape(len(y), k * k)
        acc.add(y.T @ pair)
        if g is not None:
            g += np.asarray(block.T @ y)
    full = acc.sum.reshape(k, k, k)

    if include_diagonal:
        total = stats.sum_nnz3
    else:
        n = x.row_nnz.astype(object)
        total = int(sum(n * (n - 1) * (n - 2)))
        if total <= 0:
            raise EmptyDataError("no row holds three distinct items")
        colcount = np.bincount(x.item_ids, minlength=x.n_items).astype(np.float64)
        used = colcount > 0
        wu, gu = w[used], g[used]
        # sum over (i, i, j) patterns, in each of the three positions
        b = np.einsum("di,dj,dl->ijl", wu, wu, gu)
        c = np.einsum("d,di,dj,dl->ijl", colcount[used], wu, wu, wu)
        full = full - b - np.transpose(b, (0, 2, 1)) - np.transpose(b, (2, 0, 1)) + 2.0 * c

    return WhitenedTriple(k, symmetrize3(full / total))
