"""Top-tau ranking metrics over held-out interactions."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Hashable, Mapping, Sequence

import numpy as np

from .data import InteractionMatrix

DEFAULT_TAUS = (5, 10, 20, 40, 60, 80, 100, 200, 300, 400, 500)


@dataclass(frozen=True)
class RankingMetrics:
    tau_list: tuple[int, ...]
    precision: tuple[float, ...]
    recall: tuple[float, ...]
    map: tuple[float, ...]
    n_users_evaluated: int
    n_users_skipped: int

    def to_tsv(self) -> str:
        lines = ["tau\tprecision\trecall\tmap"]
        for row in zip(self.tau_list, self.precision, self.recall, self.map):
            lines.append("{}\t{:.6f}\t{:.6f}\t{:.6f}".format(*row))
        return "\n".join(lines) + "\n"


def user_metrics(recs: Sequence, relevant: set, tau: int) -> tuple[float, float, float]:
    """Precision, recall and average precision of one ranked list at cutoff ``tau``.

    AP is normalised by ``min(tau, |relevant|)`` so a perfect ranking scores 1.
    """
    hits = 0
    ap_terms = []
    for rank, item in enumerate(recs[:tau], start=1):
        if item in relevant:
            hits += 1
            ap_terms.append(hits / rank)
    return hits / tau, hits / len(relevant), math.fsum(ap_terms) / min(tau, len(relevant))


def ranking_metrics(
    recommendations: Mapping[Hashable, Sequence],
    test: Mapping[Hashable, set],
    tau_list: Sequence[int] = DEFAULT_TAUS,
) -> RankingMetrics:
    """Mean Precision@tau, Recall@tau and MAP@tau over users with test activity.

    Users whose test set is missing or empty are skipped and counted.
    """
    taus = tuple(int(t) for t in tau_list)
    if any(t <= 0 for t in taus):
        raise ValueError("every tau must be positive")
    users = [u for u in recommendations if test.get(u)]
    skipped = len(recommendations) - len(users)
    cols = {t: ([], [], []) for t in taus}
    for u in users:
        recs, rel = list(recommendations[u]), set(test[u])
        for t in taus:
            for acc, val in zip(cols[t], user_metrics(recs, rel, t)):
                acc.append(val)

    def mean(vals):
        return math.fsum(vals) / len(vals) if vals else 0.0

    return RankingMetrics(
        taus,
        tuple(mean(cols[t][0]) for t in taus),
        tuple(mean(cols[t][1]) for t in taus),
        tuple(mean(cols[t][2]) for t in taus),
        len(users),
        skipped,
    )


def holdout_split(x: InteractionMatrix, test_fraction: float = 0.5, seed: int = 0):
    """Move a random share of every user's items into a test set.

    Users with a single item keep it for training.  Returns
    ``(train, test)`` where ``test`` maps user index to a set of item indices.
    """
    rng = np.random.default_rng(seed)
    train_rows, test = [], {}
    for u in range(x.n_users):
        row = x.row(u)
        n_test = int(round(test_fraction * len(row))) if len(row) > 1 else 0
        n_test = min(n_test, len(row) - 1)
        mask = np.zeros(len(row), dtype=bool)
        mask[rng.choice(len(row), size=n_test, replace=False)] = True
        train_rows.append(row[~mask])
        if n_test:
            test[u] = set(row[mask].tolist())
    train = InteractionMatrix.from_rows(train_rows, n_items=x.n_items)
    train.user_keys, train.item_keys = x.user_keys, x.item_keys
    return train, test


def random_rankings(train: InteractionMatrix, tau: int, seed: int = 0,
                    exclude_seen: bool = True) -> dict[int, list[int]]:
    """Uniformly random top-``tau`` lists; the sanity baseline for ranking metrics."""
    rng = np.random.default_rng(seed)
    out = {}
    for u in range(train.n_users):
        order = rng.permutation(train.n_items)
        if exclude_seen:
            order = order[~np.isin(order, train.row(u))]
        out[u] = order[:tau].tolist()
    return out
