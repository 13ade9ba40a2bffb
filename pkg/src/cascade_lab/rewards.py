"""Closed-form reward analytics and robustness of competitive rewards."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np

from .enumeration import enumerate_metrics
from .model import Binary, Competitive, SignalModel

__all__ = [
    "BETA_CEILING",
    "BetaSweepResult",
    "RewardBudget",
    "condorcet_scheme",
    "max_total_reward",
    "expected_total_reward_formula",
    "reward_budget",
    "cjt_accuracy",
    "default_beta_grid",
    "beta_sweep",
    "max_effective_beta",
]

BETA_CEILING = 1e6


def _check_odds(model: SignalModel) -> float:
    if not model.Q > 1:
        raise ValueError(f"odds Q must exceed 1, got {model.Q!r}")
    return model.Q


def condorcet_scheme(model: SignalModel) -> Competitive:
    """Competitive rewards that make rational choices independent (beta = Q)."""
    return Competitive(_check_odds(model))


def max_total_reward(model: SignalModel) -> float:
    """Upper bound on the total reward paid out per option: ``Q / (Q - 1)``."""
    Q = _check_odds(model)
    return Q / (Q - 1.0)


def expected_total_reward_formula(n: int, model: SignalModel) -> float:
    """Closed-form expected total reward, ``(Q - 2**n (1-q)**n) / (Q - 1)``.

    The expression is evaluated as published.  It does not coincide with the
    expected sum of rewards actually paid to correct choosers (for ``n = 1`` it
    gives ``2 - 2(1-q)`` rather than ``q``); compare with
    :func:`cascade_lab.enumeration.expected_total_reward_exact`.
    """
    if int(n) != n or n < 1:
        raise ValueError(f"group size must be a positive integer, got {n!r}")
    Q = _check_odds(model)
    q = model.q
    return (Q - 2.0**n * (1.0 - q) ** n) / (Q - 1.0)


@dataclass(frozen=True)
class RewardBudget:
    max_total: float
    expected_total_closed_form: float


def reward_budget(n: int, model: SignalModel) -> RewardBudget:
    return RewardBudget(max_total_reward(model), expected_total_reward_formula(n, model))


def cjt_accuracy(n: int, q: float) -> float:
    """Probability that a majority of ``n`` independent voters of accuracy ``q`` is correct."""
    if int(n) != n or n < 1 or n % 2 == 0:
        raise ValueError(f"n must be an odd positive integer, got {n!r}")
    if not (0.5 < q < 1.0):
        raise ValueError(f"q must lie in (0.5, 1), got {q!r}")
    n = int(n)
    return math.fsum(math.comb(n, k) * q**k * (1.0 - q) ** (n - k) for k in range(n // 2 + 1, n + 1))


def default_beta_grid(lo: float = 0.5, hi: float = 8.0, steps: int = 60) -> Tuple[float, ...]:
    return tuple(float(b) for b in np.geomspace(lo, hi, steps))


@dataclass(frozen=True)
class BetaSweepResult:
    betas: Tuple[float, ...]
    collective: Tuple[float, ...]
    individual: Tuple[float, ...]
    n: int
    model: SignalModel

    @property
    def argmax_beta(self) -> float:
        return self.betas[int(np.argmax(self.collective))]


def beta_sweep(
    n: int,
    model: SignalModel,
    beta_grid: Optional[Sequence[float]] = None,
    threads: Optional[int] = None,
) -> BetaSweepResult:
    betas = tuple(float(b) for b in (default_beta_grid() if beta_grid is None else beta_grid))
    if not betas:
        raise ValueError("beta grid must be nonempty")
    if any(b <= 0 for b in betas):
        raise ValueError("beta values must be positive")
    if any(b2 <= b1 for b1, b2 in zip(betas, betas[1:])):
        raise ValueError("beta grid must be strictly increasing")
    metrics = [enumerate_metrics(n, Competitive(b), model, threads=threads) for b in betas]
    return BetaSweepResult(
        betas=betas,
        collective=tuple(m.collective_accuracy for m in metrics),
        individual=tuple(m.individual_accuracy for m in metrics),
        n=n,
        model=model,
    )


def max_effective_beta(
    n: int,
    model: SignalModel,
    tol: float = 1e-6,
    threads: Optional[int] = None,
    ceiling: float = BETA_CEILING,
) -> float:
    """Largest beta above Q whose collective accuracy still matches binary rewards.

    Solves ``acc(beta) = acc(1)`` by doubling an upper bracket from ``2Q`` and then
    bisecting in ``log(beta)``.  Returns ``math.inf`` when competitive rewards
    still beat binary rewards at ``ceiling``.
    """
    if int(n) != n or n < 3 or n % 2 == 0:
        raise ValueError(f"n must be an odd integer >= 3, got {n!r}")
    if not tol > 0:
        raise ValueError(f"tol must be positive, got {tol!r}")
    Q = _check_odds(model)
    baseline = enumerate_metrics(n, Binary(), model, threads=threads).collective_accuracy

    def gap(beta: float) -> float:
        return enumerate_metrics(n, Competitive(beta), model, threads=threads).collective_accuracy - baseline

    if not gap(Q) > 0:
        raise ValueError(f"competitive rewards at beta=Q do not beat binary rewards for n={n}, q={model.q}")
    lo, hi = Q, 2.0 * Q
    g_hi = gap(hi)
    while g_hi > 0:
        if hi >= ceiling:
            return math.inf
        lo, hi = hi, min(2.0 * hi, ceiling)
        g_hi = gap(hi)
    if abs(g_hi) <= tol:
        return hi

    while True:
        mid = math.sqrt(lo * hi)
        g_mid = gap(mid)
        if abs(g_mid) <= tol or not (lo < mid < hi):
            return mid
        if g_mid > 0:
            lo = mid
        else:
            hi = mid
