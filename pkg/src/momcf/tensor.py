"""Robust tensor power method for symmetric, orthogonally decomposable tensors."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateComponent

DEFLATION_FLOOR = 1e-12
STEP_TOL = 1e-13


@dataclass(frozen=True)
class TensorEigenpair:
    value: float
    vector: np.ndarray


def _values(t) -> np.ndarray:
    return np.asarray(getattr(t, "values", t), dtype=np.float64)


def tensor_apply(t, v):
    """Return ``(T(v, v, v), T(I, v, v))``."""
    t = _values(t)
    v = np.asarray(v, dtype=np.float64)
    if t.shape != (len(v),) * 3:
        raise ValueError(f"tensor of shape {t.shape} does not match vector of length {len(v)}")
    tv = t @ v @ v
    return float(tv @ v), tv


def _apply_many(flat: np.ndarray, vs: np.ndarray) -> np.ndarray:
    """T(I, v, v) for every column of ``vs`` (K x L), with T flattened to K x K^2."""
    k, n = vs.shape
    outer = (vs[:, None, :] * vs[None, :, :]).reshape(k * k, n)
    return flat @ outer


def _power_iterate(flat, vs, iters):
    for _ in range(iters):
        nxt = _apply_many(flat, vs)
        norms = np.linalg.norm(nxt, axis=0)
        norms[norms == 0] = 1.0
        nxt /= norms
        step = np.linalg.norm(nxt - vs, axis=0).max()
        vs = nxt
        if step < STEP_TOL:
            break
    return vs


def robust_decompose(
    t,
    k: int | None = None,
    restarts: int | None = None,
    iters: int = 100,
    seed: int = 42,
) -> list[TensorEigenpair]:
    """Extract ``k`` eigenpairs by restarted power iteration with deflation.

    Each round draws ``restarts`` random unit starts (default ``50 * k``),
    runs ``iters`` power steps on all of them, keeps the start with the
    largest ``T(v, v, v)``, polishes it with ``iters`` further steps and
    deflates ``T <- T - lambda v(x)v(x)v``.  Candidates with negative
    ``T(v, v, v)`` are never selected.  Start vectors of round ``r`` come from
    a Philox stream keyed on ``(seed, r)``, so results do not depend on how
    restarts are scheduled.
    """
    t = _values(t).copy()
    dim = t.shape[0]
    if t.shape != (dim, dim, dim):
        raise ValueError("expected a cubic three-way tensor")
    k = dim if k is None else k
    if not 1 <= k <= dim:
        raise ValueError(f"cannot extract {k} components from a {dim}-dimensional tensor")
    restarts = 50 * k if restarts is None else restarts

    pairs = []
    for r in range(k):
        gen = np.random.Generator(np.random.Philox(key=[seed, r]))
        starts = gen.standard_normal((restarts, dim)).T
        starts /= np.linalg.norm(starts, axis=0)
        flat = t.reshape(dim, dim * dim)
        cand = _power_iterate(flat, starts, iters)
        scores = np.einsum("il,il->l", _apply_many(flat, cand), cand)
        scores[scores < 0] = -np.inf
        best = int(np.argmax(scores))
        v = _power_iterate(flat, cand[:, [best]], iters)[:, 0]
        lam, _ = tensor_apply(t, v)
        if not lam > DEFLATION_FLOOR:
            raise DegenerateComponent(r, lam if np.isfinite(lam) else float("-inf"))
        pairs.append(TensorEigenpair(lam, v))
        t = t - lam * np.einsum("i,j,l->ijl", v, v, v)
    return pairs


def reconstruct(pairs, dim: int) -> np.ndarray:
    out = np.zeros((dim, dim, dim))
    for p in pairs:
        out += p.value * np.einsum("i,j,l->ijl", p.vector, p.vector, p.vector)
    return out


def frobenius_norm(t) -> float:
    return float(np.sqrt(np.sum(_values(t) ** 2)))


def operator_norm_lower_bound(t, trials: int = 20, iters: int = 100, seed: int = 0) -> float:
    """max |T(v, v, v)| over power-iteration runs from ``trials`` random unit starts."""
    t = _values(t)
    dim = t.shape[0]
    gen = np.random.Generator(np.random.Philox(key=seed))
    starts = gen.standard_normal((trials, dim)).T
    starts /= np.linalg.norm(starts, axis=0)
    flat = t.reshape(dim, dim * dim)
    cand = _power_iterate(flat, starts, iters)
    vals = np.einsum("il,il->l", _apply_many(flat, cand), cand)
    return float(np.abs(vals).max())
