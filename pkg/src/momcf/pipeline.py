"""End-to-end parameter extraction: three passes over the data."""

from __future__ import annotations

import time
from contextlib import contextmanager
from dataclasses import dataclass, field

import numpy as np

from .data import InteractionMatrix, compute_stats
from .model import MomModel, compute_posteriors, recover_parameters
from .moments import estimate_m2, estimate_whitened_m3
from .tensor import robust_decompose
from .whitening import build_whitener, topk_eig, whitening_residuals


@dataclass
class FitResult:
    model: MomModel
    posteriors: np.ndarray
    eigvals: np.ndarray
    tensor_values: np.ndarray
    diagnostics: dict = field(default_factory=dict)


class _Stopwatch:
    def __init__(self):
        self.stages: dict[str, float] = {}

    @contextmanager
    def stage(self, name):
        t0 = time.perf_counter()
        try:
            yield
        finally:
            self.stages[name] = time.perf_counter() - t0


class StageError(Exception):
    """Wraps a module error with the name of the pipeline stage that raised it."""

    def __init__(self, stage, error):
        super().__init__(f"{stage}: {error}")
        self.stage = stage
        self.error = error


def fit(
    x: InteractionMatrix,
    k: int,
    eig_tol: float = 1e-10,
    restarts: int | None = None,
    iters: int = 100,
    seed: int = 42,
    include_diagonal: bool = True,
) -> FitResult:
    """Estimate item distributions, state weights and user posteriors.

    Reads the data exactly three times: pairwise moment, whitened third
    moment, posteriors.
    """
    clock = _Stopwatch()
    t_start = time.perf_counter()
    passes_before = x.pass_counter

    def run(name, fn, *args, **kwargs):
        with clock.stage(name):
            try:
                return fn(*args, **kwargs)
            except Exception as exc:  # noqa: BLE001 - re-raised with context
                raise StageError(name, exc) from exc

    stats = run("stats", compute_stats, x)
    m2 = run("estimate_m2", estimate_m2, x, include_diagonal=include_diagonal)
    vals, vecs = run("topk_eig", topk_eig, m2, k, tol=eig_tol, seed=seed)
    wt = run("build_whitener", build_whitener, vals, vecs)
    m3 = run("estimate_whitened_m3", estimate_whitened_m3, x, wt.w,
             include_diagonal=include_diagonal)
    pairs = run("robust_decompose", robust_decompose, m3, k, restarts=restarts,
                iters=iters, seed=seed)
    model, info = run("recover_parameters", recover_parameters, wt, pairs, return_info=True)
    post = run("compute_posteriors", compute_posteriors, x, model)
    total = time.perf_counter() - t_start

    white_res, pinv_res = whitening_residuals(wt, m2)
    diagnostics = {
        "n_users": x.n_users,
        "n_items": x.n_items,
        "nnz": x.nnz,
        "empty_users": int(len(x.empty_rows)),
        "k": k,
        "include_diagonal": include_diagonal,
        "passes": x.pass_counter - passes_before,
        "d1s": stats.d1s,
        "d2s": stats.d2s,
        "d3s": stats.d3s,
        "spectrum": vals.tolist(),
        "tensor_eigenvalues": [p.value for p in pairs],
        "pi_sum_deviation": info.pi_deviation,
        "clipped_entries": info.clipped_entries,
        "whitening_residual": white_res,
        "pinv_residual": pinv_res,
        "stage_seconds": clock.stages,
        "total_seconds": total,
    }
    return FitResult(model, post, vals, np.array([p.value for p in pairs]), diagnostics)
