"""Sample-size thresholds and parameter-error bounds for the moment estimator.

All logarithms are natural.  The asymptotic thresholds are evaluated with an
implied constant of 1, so ``n2``/``n3`` are order-of-magnitude figures.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import BoundsInputError


@dataclass(frozen=True)
class BoundInputs:
    sigma1: float
    sigmaK: float
    d2s: float
    d3s: float
    k: int
    n: int
    delta: float = 0.05
    pi_max: float = 1.0
    pi_min: float = 1.0
    c1: float = 1.0
    c2: float = 1.0

    def validate(self):
        if not 0 < self.sigmaK <= self.sigma1:
            raise BoundsInputError("sigmaK", "need 0 < sigmaK <= sigma1")
        if not 0 < self.delta < 1:
            raise BoundsInputError("delta", "need 0 < delta < 1")
        if not 0 < self.pi_min <= self.pi_max <= 1:
            raise BoundsInputError("pi_min", "need 0 < pi_min <= pi_max <= 1")
        for name in ("d2s", "d3s", "c1", "c2"):
            if not getattr(self, name) > 0:
                raise BoundsInputError(name, "must be positive")
        if self.k < 1:
            raise BoundsInputError("k", "must be at least 1")
        if self.n < 1:
            raise BoundsInputError("n", "must be at least 1")


@dataclass(frozen=True)
class BoundReport:
    epsilon: float
    n1: float
    n2: float
    n3: float
    mu_bound: float
    pi_bound: float
    n: int

    @property
    def n_required(self) -> float:
        return max(self.n1, self.n2, self.n3)

    @property
    def satisfied(self) -> bool:
        return self.n >= self.n_required

    def as_rows(self) -> list[tuple[str, str]]:
        return [
            ("epsilon", f"{self.epsilon:.6g}"),
            ("n1", f"{self.n1:.6g}"),
            ("n2 (order of magnitude)", f"{self.n2:.6g}"),
            ("n3 (order of magnitude)", f"{self.n3:.6g}"),
            ("n_required", f"{self.n_required:.6g}"),
            ("n", str(self.n)),
            ("satisfied", "yes" if self.satisfied else "no"),
            ("mu_bound", f"{self.mu_bound:.6g}"),
            ("pi_bound", f"{self.pi_bound:.6g}"),
        ]


def epsilon(delta: float) -> float:
    return 1.0 + math.sqrt(math.log(1.0 / delta) / 2.0)


def compute_bounds(inp: BoundInputs) -> BoundReport:
    """Evaluate the user-count thresholds and the error bounds at ``inp.n`` users.

    ``n1`` drops its log-log term when the inner logarithm is not positive
    (the constraint is vacuous there).
    """
    inp.validate()
    eps = epsilon(inp.delta)
    s1, sk, d2, d3, k = inp.sigma1, inp.sigmaK, inp.d2s, inp.d3s, inp.k

    inner = math.log((k / inp.c1) * math.sqrt(inp.pi_max / inp.pi_min))
    n1 = inp.c2 * (math.log(k) + (math.log(inner) if inner > 0 else 0.0))
    n2 = (eps / (d2 * sk)) ** 2
    n3 = k**2 * (10 / (d2 * sk**2.5) + 2 * math.sqrt(2) / (d3 * sk**1.5)) ** 2 * eps**2

    root_n = math.sqrt(inp.n)
    mu = (
        160 * math.sqrt(s1) / (d2 * sk**2.5)
        + 32 * math.sqrt(2 * s1) / (d3 * sk**1.5)
        + 4 * math.sqrt(s1) / (d2 * sk)
    ) * eps / root_n
    pi = (200 / sk**2.5 + 40 * math.sqrt(2) / sk**1.5) * eps / (d3 * root_n)
    return BoundReport(eps, n1, n2, n3, mu, pi, inp.n)
