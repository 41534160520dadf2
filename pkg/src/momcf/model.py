"""Recovered mixture parameters, user posteriors and item ranking."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .data import InteractionMatrix
from .errors import DegenerateTopic

PROB_FLOOR = 1e-12


@dataclass(frozen=True)
class MomModel:
    """Item distributions per latent state (columns of ``o``) and state prior ``pi``."""

    o: np.ndarray
    pi: np.ndarray

    @property
    def k(self) -> int:
        return len(self.pi)

    @property
    def d(self) -> int:
        return self.o.shape[0]

    @property
    def n_parameters(self) -> int:
        return (self.d - 1) * self.k + (self.k - 1)


@dataclass(frozen=True)
class RecoveryInfo:
    """Side information from :func:`recover_parameters`."""

    pi_raw_sum: float
    clipped_entries: int

    @property
    def pi_deviation(self) -> float:
        return abs(self.pi_raw_sum - 1.0)


def _floor_normalize(col: np.ndarray) -> np.ndarray:
    col = np.maximum(col / col.sum(), PROB_FLOOR)
    return col / col.sum()


def recover_parameters(wt, pairs, return_info: bool = False):
    """Item distributions ``W_pinv v_k`` and weights ``lambda_k^-2``.

    Each raw column has its sign fixed so it sums to a positive value,
    negative entries are clipped, and the column is normalised to sum 1
    with every entry at least ``PROB_FLOOR``.  Weights are renormalised onto
    the simplex.  Components are returned in descending-weight order.
    """
    lams = np.array([p.value for p in pairs], dtype=np.float64)
    if np.any(lams <= 0):
        raise ValueError("tensor eigenvalues must be positive")
    vecs = np.column_stack([np.atleast_1d(p.vector) for p in pairs])
    raw = wt.w_pinv @ vecs

    cols = []
    clipped = 0
    for j in range(raw.shape[1]):
        col = raw[:, j]
        if col.sum() < 0:
            col = -col
        clipped += int(np.sum(col < 0))
        col = np.maximum(col, 0.0)
        if not col.sum() > 0:
            raise DegenerateTopic(j)
        cols.append(_floor_normalize(col))
    o = np.column_stack(cols)

    pi_raw = lams**-2.0
    pi = pi_raw / pi_raw.sum()
    order = np.argsort(-pi, kind="stable")
    model = MomModel(o[:, order], pi[order])
    if return_info:
        return model, RecoveryInfo(float(pi_raw.sum()), clipped)
    return model


def _log_scores(x: InteractionMatrix, log_o: np.ndarray) -> np.ndarray:
    xs = x.scan()
    return np.asarray(xs @ log_o)


def compute_posteriors(x: InteractionMatrix, m: MomModel) -> np.ndarray:
    """``P[h | u]`` for every user, by Bayes rule in log space (one data pass).

    Users without interactions get the prior ``pi``.
    """
    if x.n_items != m.d:
        raise ValueError(f"data has {x.n_items} items, model has {m.d}")
    s = _log_scores(x, np.log(m.o)) + np.log(m.pi)
    return np.exp(s - logsumexp(s, axis=1, keepdims=True))


def posterior_for(history, m: MomModel) -> np.ndarray:
    items = np.unique(np.asarray(list(history), dtype=np.int64))
    if len(items) and (items.min() < 0 or items.max() >= m.d):
        raise IndexError("history item out of range")
    s = np.log(m.pi) + np.log(m.o[items]).sum(axis=0)
    return np.exp(s - logsumexp(s))


def predict_scores(history, m: MomModel, posterior: np.ndarray | None = None) -> np.ndarray:
    """``P[y | user]`` over all items, mixing item distributions by the user posterior."""
    if posterior is None:
        posterior = posterior_for(history, m)
    return m.o @ posterior


def rank_items(scores, tau: int, exclude=()) -> list[int]:
    """Top-``tau`` item indices by descending score, ties to the lower index."""
    if tau < 1:
        raise ValueError("tau must be at least 1")
    scores = np.asarray(scores, dtype=np.float64)
    idx = np.arange(len(scores))
    keep = np.ones(len(scores), dtype=bool)
    excl = np.asarray(list(exclude), dtype=np.int64)
    keep[excl] = False
    idx = idx[keep]
    order = np.lexsort((idx, -scores[idx]))
    return idx[order[:tau]].tolist()


def recommend_top(history, m: MomModel, tau: int, exclude_seen: bool = True,
                  posterior: np.ndarray | None = None) -> list[int]:
    history = list(history)
    scores = predict_scores(history, m, posterior)
    return rank_items(scores, tau, history if exclude_seen else ())
