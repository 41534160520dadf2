"""PLSI fitted by expectation maximisation, the iterative comparator."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .data import InteractionMatrix
from .errors import UnknownUser
from .model import PROB_FLOOR

TINY = np.finfo(np.float64).tiny


@dataclass
class PlsiModel:
    """``p_y_given_h`` is D x K (columns sum to 1), ``p_h_given_u`` is N x K (rows sum to 1)."""

    p_y_given_h: np.ndarray
    p_h_given_u: np.ndarray
    loglik_trace: list[float] = field(default_factory=list)
    user_keys: list[str] | None = None

    @property
    def n_iterations(self) -> int:
        return len(self.loglik_trace) - 1

    @property
    def n_parameters(self) -> int:
        d, k = self.p_y_given_h.shape
        n = self.p_h_given_u.shape[0]
        return (d - 1) * k + n * (k - 1)


def _loglik(p_entry: np.ndarray) -> float:
    return float(np.sum(np.log(np.maximum(p_entry, TINY))))


def plsi_train(
    x: InteractionMatrix,
    k: int,
    seed: int = 42,
    rel_tol: float = 1e-3,
    max_iter: int = 200,
) -> PlsiModel:
    """Standard PLSI EM on binary interactions.

    Both conditionals start from seeded Dirichlet(1) draws.  Iteration stops
    once ``L_t - L_{t-1} < rel_tol * |L_{t-1}|`` or after ``max_iter``
    iterations.  The probability floor is applied to the returned item
    distributions only, so the likelihood trace is a pure EM trace.
    """
    if k < 1:
        raise ValueError("k must be at least 1")
    rng = np.random.default_rng(seed)
    n, d = x.n_users, x.n_items
    p_y = rng.dirichlet(np.ones(d), size=k).T
    p_h = rng.dirichlet(np.ones(k), size=n)
    users, items = x.user_of_entry(), x.item_ids

    def entry_joint(py, ph):
        return py[items] * ph[users]

    joint = entry_joint(p_y, p_h)
    trace = [_loglik(joint.sum(axis=1))]
    for _ in range(max_iter):
        # E-step: responsibility of each state for each observed (u, y)
        q = joint / np.maximum(joint.sum(axis=1, keepdims=True), TINY)
        # M-step: expected counts
        y_counts = np.column_stack([np.bincount(items, weights=q[:, j], minlength=d) for j in range(k)])
        h_counts = np.column_stack([np.bincount(users, weights=q[:, j], minlength=n) for j in range(k)])
        p_y = y_counts / np.maximum(y_counts.sum(axis=0), TINY)
        row_tot = h_counts.sum(axis=1, keepdims=True)
        # users without interactions keep their initial mixture
        p_h = np.where(row_tot > 0, h_counts / np.maximum(row_tot, TINY), p_h)

        joint = entry_joint(p_y, p_h)
        trace.append(_loglik(joint.sum(axis=1)))
        if trace[-1] - trace[-2] < rel_tol * abs(trace[-2]):
            break

    p_y = np.maximum(p_y, PROB_FLOOR)
    p_y /= p_y.sum(axis=0)
    return PlsiModel(p_y, p_h, trace, x.user_keys)


def plsi_predict(u, m: PlsiModel) -> np.ndarray:
    """Item distribution for a training user (index, or key when keys are known)."""
    if m.user_keys is not None and not isinstance(u, (int, np.integer)):
        try:
            u = m.user_keys.index(u)
        except ValueError:
            raise UnknownUser(u) from None
    if not isinstance(u, (int, np.integer)) or not 0 <= u < m.p_h_given_u.shape[0]:
        raise UnknownUser(u)
    return m.p_y_given_h @ m.p_h_given_u[u]
