"""Truncated eigendecomposition of the pairwise moment and the whitening map."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import eigsh

from .errors import EigenConvergenceError, RankDeficient, WhiteningError
from .moments import PairwiseMoment

# below this size a dense symmetric solver is cheaper than Lanczos
DENSE_LIMIT = 256


@dataclass(frozen=True)
class WhiteningTransform:
    """``w = eigvecs diag(eigvals)^-1/2`` and ``w_pinv = eigvecs diag(eigvals)^1/2``."""

    eigvals: np.ndarray
    eigvecs: np.ndarray
    w: np.ndarray
    w_pinv: np.ndarray

    @property
    def k(self) -> int:
        return len(self.eigvals)


def _as_operator(m2):
    if isinstance(m2, PairwiseMoment):
        return m2.matrix
    if sp.issparse(m2):
        return m2.tocsr().astype(np.float64)
    return np.asarray(m2, dtype=np.float64)


def canonicalize_signs(vecs: np.ndarray) -> np.ndarray:
    """Flip columns so the entry of largest magnitude is positive."""
    vecs = np.array(vecs, dtype=np.float64)
    idx = np.argmax(np.abs(vecs), axis=0)
    signs = np.sign(vecs[idx, np.arange(vecs.shape[1])])
    signs[signs == 0] = 1.0
    return vecs * signs


def topk_eig(m2, k: int, tol: float = 1e-10, max_iter: int | None = None, seed: int = 42):
    """K algebraically largest eigenpairs of a symmetric (sparse) matrix.

    Small matrices go to a dense symmetric solver; larger ones to implicitly
    restarted Lanczos with a seeded start vector.  Every returned pair
    satisfies ``||M w - nu w|| <= tol * |nu_1|``.

    Returns ``(eigvals, eigvecs)`` with eigenvalues in descending order.

    Raises
    ------
    RankDeficient
        if fewer than ``k`` eigenvalues exceed ``tol * |nu_1|``.
    """
    a = _as_operator(m2)
    d = a.shape[0]
    if a.shape != (d, d):
        raise ValueError("matrix must be square")
    if not 1 <= k <= d:
        raise ValueError(f"K={k} must lie in [1, {d}]")
    if max_iter is None:
        max_iter = 300 * k

    if d <= DENSE_LIMIT or k >= d - 1:
        dense = a.toarray() if sp.issparse(a) else a
        vals, vecs = np.linalg.eigh(dense)
        vals, vecs = vals[::-1][:k], vecs[:, ::-1][:, :k]
    else:
        v0 = np.random.default_rng(seed).standard_normal(d)
        vals, vecs = eigsh(a, k=k, which="LA", tol=tol, maxiter=max_iter * d, v0=v0)
        order = np.argsort(vals)[::-1]
        vals, vecs = vals[order], vecs[:, order]

    top = abs(vals[0])
    achieved = int(np.sum(vals > tol * top)) if top > 0 else 0
    if achieved < k:
        raise RankDeficient(k, achieved)

    vecs = canonicalize_signs(vecs)
    resid = np.linalg.norm(a @ vecs - vecs * vals, axis=0)
    if np.any(resid > tol * top):
        raise EigenConvergenceError(
            f"eigen residual {resid.max():.2e} exceeds {tol:.1e} x |nu_1|"
        )
    return vals, vecs


def build_whitener(eigvals, eigvecs) -> WhiteningTransform:
    """Whitening matrix and the pseudo-inverse of its transpose."""
    eigvals = np.asarray(eigvals, dtype=np.float64)
    eigvecs = np.asarray(eigvecs, dtype=np.float64).reshape(-1, len(eigvals))
    if np.any(eigvals <= 0):
        raise WhiteningError(f"non-positive eigenvalue {eigvals.min():.3e}; whitening undefined")
    root = np.sqrt(eigvals)
    return WhiteningTransform(eigvals, eigvecs, eigvecs / root, eigvecs * root)


def whitening_residuals(wt: WhiteningTransform, m2) -> tuple[float, float]:
    """Max-abs deviation of ``W^T M2 W`` and ``W_pinv^T W`` from the identity."""
    a = _as_operator(m2)
    eye = np.eye(wt.k)
    white = wt.w.T @ (a @ wt.w)
    return float(np.abs(white - eye).max()), float(np.abs(wt.w_pinv.T @ wt.w - eye).max())
