"""Planted latent-state models: sampling, exact moments and recovery scoring."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from .data import InteractionMatrix

USER_PRIORS = ("single", "shared", "dirichlet")


@dataclass(frozen=True)
class PlantedModel:
    """Ground truth for synthetic data.

    ``user_prior`` selects how ``P[h | u]`` is formed for each user:

    * ``"single"`` - one state per user, drawn from ``pi_true``; every item
      of that user comes from the same item distribution.
    * ``"shared"`` - ``P[h | u] = pi_true`` for all users, with a fresh state
      per item.  Items are then i.i.d. draws from ``o_true @ pi_true`` and
      the pairwise moment is rank one, so the mixture is not identifiable.
    * ``"dirichlet"`` - ``P[h | u] ~ Dirichlet(concentration * pi_true)``,
      fresh state per item.

    ``n_items_per_user`` is a fixed count or an inclusive ``(lo, hi)`` range.
    """

    o_true: np.ndarray
    pi_true: np.ndarray
    user_prior: str = "single"
    n_items_per_user: int | tuple[int, int] = (3, 10)
    concentration: float = 1.0

    def __post_init__(self):
        o = np.asarray(self.o_true, dtype=np.float64)
        pi = np.asarray(self.pi_true, dtype=np.float64)
        if o.ndim != 2 or o.shape[1] != len(pi):
            raise ValueError("o_true must be D x K with K = len(pi_true)")
        if np.any(o < 0) or not np.allclose(o.sum(axis=0), 1.0, atol=1e-12):
            raise ValueError("columns of o_true must be probability vectors")
        if np.any(pi <= 0) or abs(pi.sum() - 1.0) > 1e-12:
            raise ValueError("pi_true must be a positive probability vector")
        if self.user_prior not in USER_PRIORS:
            raise ValueError(f"user_prior must be one of {USER_PRIORS}")
        object.__setattr__(self, "o_true", o)
        object.__setattr__(self, "pi_true", pi)

    @property
    def d(self) -> int:
        return self.o_true.shape[0]

    @property
    def k(self) -> int:
        return len(self.pi_true)

    @property
    def nu_range(self) -> tuple[int, int]:
        n = self.n_items_per_user
        return (n, n) if isinstance(n, (int, np.integer)) else (int(n[0]), int(n[1]))


def random_planted(d: int, k: int, seed: int = 0, concentration: float = 1.0,
                   pi=None, **kwargs) -> PlantedModel:
    """Item distributions drawn from a symmetric Dirichlet; ``pi`` uniform unless given."""
    rng = np.random.default_rng(seed)
    o = rng.dirichlet(np.full(d, concentration), size=k).T
    o /= o.sum(axis=0)
    pi = np.full(k, 1.0 / k) if pi is None else np.asarray(pi, dtype=np.float64)
    return PlantedModel(o, pi / pi.sum(), **kwargs)


def separable_planted(d: int, k: int, seed: int = 0, pi=None, uniform: bool = False,
                      sizes=None, **kwargs) -> PlantedModel:
    """States with disjoint, contiguous item supports.

    Supports have (nearly) equal size unless ``sizes`` is given.  With
    ``uniform=True`` each state is uniform on its support; otherwise weights
    within a support are Dirichlet(2).
    """
    rng = np.random.default_rng(seed)
    o = np.zeros((d, k))
    if sizes is None:
        blocks = np.array_split(np.arange(d), k)
    else:
        if len(sizes) != k or sum(sizes) > d:
            raise ValueError("need k support sizes summing to at most d")
        blocks = np.split(np.arange(sum(sizes)), np.cumsum(sizes)[:-1])
    for j, block in enumerate(blocks):
        if uniform:
            o[block, j] = 1.0 / len(block)
        else:
            o[block, j] = rng.dirichlet(np.full(len(block), 2.0))
    pi = np.full(k, 1.0 / k) if pi is None else np.asarray(pi, dtype=np.float64)
    return PlantedModel(o, pi / pi.sum(), **kwargs)


def population_m1(p: PlantedModel) -> np.ndarray:
    return p.o_true @ p.pi_true


def population_m2(p: PlantedModel) -> np.ndarray:
    """Exact ``sum_k pi_k mu_k mu_k^T``."""
    return (p.o_true * p.pi_true) @ p.o_true.T


def population_whitened_m3(p: PlantedModel, w: np.ndarray) -> np.ndarray:
    """Exact ``sum_k pi_k (W^T mu_k)^(x)3`` without forming the D^3 moment."""
    proj = w.T @ p.o_true
    return np.einsum("k,ik,jk,lk->ijl", p.pi_true, proj, proj, proj)


def _user_stream(seed: int, u: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=[seed, u]))


def _cdf(probs: np.ndarray) -> np.ndarray:
    cdf = np.cumsum(probs)
    return cdf / cdf[-1]


def _sample_user(p: PlantedModel, gen: np.random.Generator, state_cdfs: np.ndarray) -> np.ndarray:
    lo, hi = p.nu_range
    n_u = int(gen.integers(lo, hi + 1))
    # drawing a state then an item is drawing from the user's item mixture
    if p.user_prior == "single":
        h = min(int(np.searchsorted(_cdf(p.pi_true), gen.random(), side="right")), p.k - 1)
        cdf = state_cdfs[h]
    elif p.user_prior == "shared":
        cdf = _cdf(p.o_true @ p.pi_true)
    else:
        cdf = _cdf(p.o_true @ gen.dirichlet(p.concentration * p.pi_true * p.k))

    chosen: list[int] = []
    seen: set[int] = set()
    budget = 100 * n_u
    while len(chosen) < n_u and budget > 0:
        batch = min(budget, 2 * (n_u - len(chosen)) + 4)
        budget -= batch
        draws = np.searchsorted(cdf, gen.random(batch), side="right")
        for y in np.minimum(draws, p.d - 1).tolist():
            if y not in seen:
                seen.add(y)
                chosen.append(y)
                if len(chosen) == n_u:
                    break
    return np.array(sorted(chosen), dtype=np.int64)


def sample_dataset(p: PlantedModel, n_users: int, seed: int = 0) -> InteractionMatrix:
    """Draw ``n_users`` binary rows from the planted model.

    Each user gets ``n_u`` distinct items: duplicate draws are redrawn, up to
    ``100 * n_u`` draws in total, after which the user keeps what it has.
    User ``u`` draws from its own Philox stream keyed on ``(seed, u)``.
    """
    if n_users < 1:
        raise ValueError("n_users must be at least 1")
    if p.nu_range[1] > p.d:
        raise ValueError(f"n_u up to {p.nu_range[1]} exceeds the {p.d} available items")
    cdfs = np.array([_cdf(col) for col in p.o_true.T])
    rows = [_sample_user(p, _user_stream(seed, u), cdfs) for u in range(n_users)]
    return InteractionMatrix.from_rows(rows, n_items=p.d)


@dataclass(frozen=True)
class RecoveryReport:
    """Errors after matching estimated components to planted ones.

    ``perm[k]`` is the estimated component matched to planted component ``k``.
    """

    perm: np.ndarray
    mu_errors: np.ndarray
    pi_errors: np.ndarray

    @property
    def max_mu_error(self) -> float:
        return float(self.mu_errors.max())

    @property
    def max_pi_error(self) -> float:
        return float(self.pi_errors.max())


def _cosine(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    a = a / np.linalg.norm(a, axis=0)
    b = b / np.linalg.norm(b, axis=0)
    return a.T @ b


def align_and_error(truth: PlantedModel, est) -> RecoveryReport:
    """Match components by cosine similarity, then measure L2 / absolute errors.

    Uses an optimal assignment for K <= 10 and greedy matching beyond.
    """
    o_hat, pi_hat = np.asarray(est.o), np.asarray(est.pi)
    if o_hat.shape != truth.o_true.shape:
        raise ValueError(f"estimate has shape {o_hat.shape}, truth {truth.o_true.shape}")
    sim = _cosine(truth.o_true, o_hat)
    k = truth.k
    if k <= 10:
        rows, cols = linear_sum_assignment(-sim)
        perm = cols[np.argsort(rows)]
    else:
        perm = np.full(k, -1)
        free = np.ones(k, dtype=bool)
        for flat in np.argsort(-sim, axis=None, kind="stable"):
            i, j = divmod(int(flat), k)
            if perm[i] < 0 and free[j]:
                perm[i] = j
                free[j] = False
    mu_err = np.linalg.norm(truth.o_true - o_hat[:, perm], axis=0)
    pi_err = np.abs(truth.pi_true - pi_hat[perm])
    return RecoveryReport(np.asarray(perm), mu_err, pi_err)
