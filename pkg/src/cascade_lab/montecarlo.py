"""Seeded Monte Carlo simulation of sequential rational choice.

Randomness comes from the counter-based Philox generator.  Trials are grouped
in fixed blocks of ``CHUNK`` consecutive trial indices; block ``j`` draws from
the Philox stream keyed by the seed with counter offset ``j``, and trial ``t``
consumes exactly ``n`` uniforms from row ``t % CHUNK`` of its block.  A trial's
draws therefore depend only on ``(seed, t)``, never on scheduling.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from .agent import threshold_step_array
from .enumeration import default_threads
from .model import DecisionSequence, RewardScheme, SignalModel, WorldState, resolve_beta
from .numerics import compensated_sum, inv_norm_cdf_array

__all__ = [
    "CHUNK",
    "SimulationRun",
    "EstimateWithError",
    "MonteCarloMetrics",
    "SimulatedSequence",
    "simulate_sequence",
    "estimate_metrics",
]

CHUNK = 8192
_U64 = (1 << 64) - 1


@dataclass(frozen=True)
class SimulationRun:
    seed: int
    trials: int
    n: int
    scheme: RewardScheme
    model: SignalModel
    world: int = 1

    def __post_init__(self):
        if not (0 <= int(self.seed) <= _U64):
            raise ValueError(f"seed must be a 64-bit unsigned integer, got {self.seed!r}")
        if int(self.trials) < 1:
            raise ValueError(f"trials must be >= 1, got {self.trials!r}")
        if int(self.n) < 1:
            raise ValueError(f"group size must be >= 1, got {self.n!r}")
        WorldState(self.world)


@dataclass(frozen=True)
class EstimateWithError:
    mean: float
    standard_error: float
    trials: int


@dataclass(frozen=True)
class MonteCarloMetrics:
    collective_accuracy: EstimateWithError
    individual_accuracy: EstimateWithError
    mean_n_a: EstimateWithError
    total_reward: EstimateWithError
    outcome_counts: Tuple[int, ...]
    seed: int
    trials: int

    def as_rows(self):
        return [
            ("collective_accuracy", self.collective_accuracy),
            ("individual_accuracy", self.individual_accuracy),
            ("mean_n_a", self.mean_n_a),
            ("total_reward", self.total_reward),
        ]


@dataclass(frozen=True)
class SimulatedSequence:
    sequence: DecisionSequence
    rewards: Tuple[float, ...]
    signals: Tuple[float, ...]
    thresholds: Tuple[float, ...]


def _uniforms(seed: int, block: int, rows: int, n: int) -> np.ndarray:
    gen = np.random.Generator(np.random.Philox(key=seed, counter=[0, 0, 0, block]))
    # random() returns k * 2**-53; shifting by half a step keeps u strictly inside (0, 1)
    return gen.random((rows, n)) + 2.0**-54


def _simulate_block(u: np.ndarray, x: int, model: SignalModel, beta: float, keep_trace: bool = False):
    trials, n = u.shape
    eps = model.epsilon
    inv_eps = 1.0 / eps
    half_var = 0.5 * eps * eps
    log_beta = math.log(beta)

    thr = np.zeros(trials)
    n_a = np.zeros(trials, dtype=np.int64)
    n_correct = np.zeros(trials, dtype=np.int64)
    reward = np.zeros(trials)
    trace = [] if keep_trace else None
    for i in range(n):
        delta = x + eps * inv_norm_cdf_array(u[:, i])
        pick_a = delta > thr
        c = np.where(pick_a, 1, -1)
        prior = np.where(pick_a, n_a, i - n_a)
        correct = c == x
        if beta == 1.0:
            pay = correct.astype(np.float64)
        else:
            pay = np.where(correct, np.power(beta, -prior.astype(np.float64)), 0.0)
        if keep_trace:
            trace.append((delta.copy(), thr.copy(), c.copy(), pay.copy()))
        reward += pay
        n_correct += correct
        if i + 1 < n:
            thr = threshold_step_array(thr, c, inv_eps, half_var, log_beta)
        n_a += pick_a
    return n_a, n_correct, reward, trace


def simulate_sequence(
    n: int,
    scheme: RewardScheme,
    model: SignalModel,
    world=1,
    seed: int = 0,
    trial: int = 0,
) -> SimulatedSequence:
    """Simulate one group of ``n`` agents; identical to trial ``trial`` of an estimate run."""
    x = world.x if isinstance(world, WorldState) else WorldState(world).x
    if n < 1:
        raise ValueError(f"group size must be >= 1, got {n!r}")
    block, row = divmod(int(trial), CHUNK)
    u = _uniforms(int(seed), block, row + 1, n)[row : row + 1]
    _, _, _, trace = _simulate_block(u, x, model, resolve_beta(scheme, model), keep_trace=True)
    return SimulatedSequence(
        sequence=DecisionSequence(int(t[2][0]) for t in trace),
        rewards=tuple(float(t[3][0]) for t in trace),
        signals=tuple(float(t[0][0]) for t in trace),
        thresholds=tuple(float(t[1][0]) for t in trace),
    )


def _block_stats(run: SimulationRun, beta: float, block: int):
    start = block * CHUNK
    rows = min(CHUNK, run.trials - start)
    u = _uniforms(run.seed, block, rows, run.n)
    n_a, n_correct, reward, _ = _simulate_block(u, run.world, run.model, beta)
    n = run.n
    values = {
        "collective_accuracy": (2 * n_correct > n).astype(np.float64),
        "individual_accuracy": n_correct / n,
        "mean_n_a": n_a.astype(np.float64),
        "total_reward": reward,
    }
    sums = {k: (compensated_sum(v), compensated_sum(v * v)) for k, v in values.items()}
    return sums, np.bincount(n_a, minlength=n + 1)


def estimate_metrics(run: SimulationRun, threads: Optional[int] = None) -> MonteCarloMetrics:
    """Sample means and standard errors over ``run.trials`` simulated groups.

    Collective accuracy counts groups whose strict majority is correct.
    """
    beta = resolve_beta(run.scheme, run.model)
    blocks = range((run.trials + CHUNK - 1) // CHUNK)
    threads = default_threads() if threads is None else max(1, int(threads))
    if threads > 1 and len(blocks) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(lambda b: _block_stats(run, beta, b), blocks))
    else:
        parts = [_block_stats(run, beta, b) for b in blocks]

    t = run.trials
    estimates = {}
    for key in parts[0][0]:
        s1 = math.fsum(p[0][key][0] for p in parts)
        s2 = math.fsum(p[0][key][1] for p in parts)
        mean = s1 / t
        var = max(0.0, (s2 - s1 * mean) / (t - 1)) if t > 1 else 0.0
        estimates[key] = EstimateWithError(mean, math.sqrt(var / t), t)
    counts = np.sum([p[1] for p in parts], axis=0)
    return MonteCarloMetrics(
        outcome_counts=tuple(int(c) for c in counts),
        seed=run.seed,
        trials=t,
        **estimates,
    )
