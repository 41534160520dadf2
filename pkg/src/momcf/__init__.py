"""Method-of-moments collaborative filtering for implicit feedback."""

import os

# thread count for the BLAS backend; must be set before numpy loads
if os.environ.get("MOMCF_THREADS"):
    for _var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        os.environ.setdefault(_var, os.environ["MOMCF_THREADS"])

from .data import DatasetStats, InteractionMatrix, compute_stats, load_triplets  # noqa: E402
from .errors import (  # noqa: E402
    DegenerateComponent,
    DegenerateTopic,
    MomError,
    RankDeficient,
)
from .model import MomModel, compute_posteriors, predict_scores, recommend_top  # noqa: E402
from .pipeline import fit  # noqa: E402

__all__ = [
    "DatasetStats",
    "DegenerateComponent",
    "DegenerateTopic",
    "InteractionMatrix",
    "MomError",
    "MomModel",
    "RankDeficient",
    "compute_posteriors",
    "compute_stats",
    "fit",
    "load_triplets",
    "predict_scores",
    "recommend_top",
]

__version__ = "0.1.0"
