"""Exact group statistics by enumerating every decision sequence.

The 2**n sequence tree is cut at a fixed depth into independent subtrees.
Each subtree is expanded level by level with numpy, carrying the next agent's
threshold and ``log P(S | x = +1)``, ``log P(S | x = -1)`` for every node.  Nodes at a
level are kept ordered by ``n_A`` so that per-count sums are contiguous
slices.  Per-subtree sums are compensated and combined with ``math.fsum`` in
subtree order, so results do not depend on the number of worker threads.
"""

from __future__ import annotations

import math
import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import lru_cache
from typing import Dict, List, Optional, Tuple

import numpy as np

from .agent import threshold_step_array
from .model import RewardScheme, SignalModel, resolve_beta
from .numerics import compensated_sum, log_norm_cdf_array

__all__ = [
    "MAX_N",
    "WARN_N",
    "EnumerationCeilingError",
    "OutcomeDistribution",
    "SocialResponseMatrix",
    "GroupMetrics",
    "EnumerationResult",
    "enumerate_sequences",
    "enumerate_metrics",
    "outcome_distribution",
    "social_response_matrix",
    "expected_total_reward_exact",
    "default_threads",
]

MAX_N = 31
WARN_N = 25
DEFAULT_SPLIT_DEPTH = 6
# keeps each subtree at or below 2**19 leaves
MAX_SUBTREE_DEPTH = 19
_SMALL_BIN = 512


class EnumerationCeilingError(RuntimeError):
    """Group size beyond what exhaustive enumeration supports."""


@dataclass(frozen=True)
class OutcomeDistribution:
    n: int
    probabilities: Tuple[float, ...]

    @property
    def mean(self) -> float:
        return math.fsum(k * p for k, p in enumerate(self.probabilities))

    @property
    def mode(self) -> int:
        return int(np.argmax(self.probabilities))


@dataclass(frozen=True)
class SocialResponseMatrix:
    max_prior: int
    cells: Dict[Tuple[int, int], float]


@dataclass(frozen=True)
class GroupMetrics:
    collective_accuracy: float
    individual_accuracy: float
    expected_total_reward: float


@dataclass(frozen=True)
class EnumerationResult:
    """Per-level sums indexed by ``level`` then ``n_A``.

    ``mass_a[L][k]`` is the total ``P(S | x=+1)`` of length-``L`` sequences with
    ``n_A = k``; ``mass_b`` is the same for ``x = -1``.  ``response[L][k]`` is the
    sum of ``P(S | x=+1) * P(next agent picks A | S, x=+1)`` (defined for ``L < n``).
    ``max_abs_threshold`` is the largest ``|delta*|`` met by any agent in any sequence.
    """

    n: int
    beta: float
    mass_a: Tuple[Tuple[float, ...], ...]
    mass_b: Tuple[Tuple[float, ...], ...]
    response: Tuple[Tuple[float, ...], ...]
    max_abs_threshold: float


def default_threads() -> int:
    value = os.environ.get("CASCADE_LAB_THREADS", "").strip()
    if value and value != "auto":
        return max(1, int(value))
    return os.cpu_count() or 1


def _bin_sums(values: np.ndarray, offsets: np.ndarray) -> List[float]:
    out = []
    for lo, hi in zip(offsets[:-1], offsets[1:]):
        if hi - lo <= _SMALL_BIN:
            out.append(math.fsum(values[lo:hi].tolist()))
        else:
            out.append(compensated_sum(values[lo:hi]))
    return out


class _Expander:
    """Level-by-level expansion of a subtree; all state kept ordered by n_A."""

    def __init__(self, n: int, model: SignalModel, log_beta: float):
        self.n = n
        self.inv_eps = 1.0 / model.epsilon
        self.half_var = 0.5 * model.epsilon**2
        self.log_beta = log_beta

    def run(self, thr, lpa, lpb, counts, level: int, stop: int):
        """Expand from ``level`` (nodes given) down to ``stop``.

        ``counts[k]`` is the number of nodes with ``n_A = base + k`` where
        ``base`` is the smallest n_A present.  Returns per-level bin sums for
        levels ``level .. stop`` and the final node arrays.
        """
        sums = []
        max_thr = 0.0
        while True:
            offsets = np.concatenate(([0], np.cumsum(counts)))
            pa = np.exp(lpa)
            pb = np.exp(lpb)
            if level == stop:
                sums.append((_bin_sums(pa, offsets), _bin_sums(pb, offsets), None))
                return sums, max_thr, (thr, lpa, lpb, counts)
            max_thr = max(max_thr, float(np.max(np.abs(thr))))
            z1 = (1.0 - thr) * self.inv_eps
            z2 = (-1.0 - thr) * self.inv_eps
            la_choose_a = log_norm_cdf_array(z1)
            la_choose_b = log_norm_cdf_array(-z1)
            lb_choose_a = log_norm_cdf_array(z2)
            lb_choose_b = log_norm_cdf_array(-z2)
            resp = np.exp(lpa + la_choose_a)
            sums.append((_bin_sums(pa, offsets), _bin_sums(pb, offsets), _bin_sums(resp, offsets)))

            lpa_a = lpa + la_choose_a
            lpb_a = lpb + lb_choose_a
            lpa_b = lpa + la_choose_b
            lpb_b = lpb + lb_choose_b
            if level + 1 < stop or stop < self.n:
                thr_a = threshold_step_array(thr, 1, self.inv_eps, self.half_var, self.log_beta)
                thr_b = threshold_step_array(thr, -1, self.inv_eps, self.half_var, self.log_beta)
            else:
                thr_a = thr_b = np.zeros_like(thr)

            # child group k: B-children of parent group k, then A-children of parent group k-1
            pieces_thr, pieces_lpa, pieces_lpb = [], [], []
            nbins = len(counts)
            for k in range(nbins + 1):
                if k < nbins:
                    sl = slice(offsets[k], offsets[k + 1])
                    pieces_thr.append(thr_b[sl])
                    pieces_lpa.append(lpa_b[sl])
                    pieces_lpb.append(lpb_b[sl])
                if k > 0:
                    sl = slice(offsets[k - 1], offsets[k])
                    pieces_thr.append(thr_a[sl])
                    pieces_lpa.append(lpa_a[sl])
                    pieces_lpb.append(lpb_a[sl])
            thr = np.concatenate(pieces_thr)
            lpa = np.concatenate(pieces_lpa)
            lpb = np.concatenate(pieces_lpb)
            counts = np.concatenate((counts, [0])) + np.concatenate(([0], counts))
            level += 1


def _check_n(n: int) -> int:
    if isinstance(n, bool) or int(n) != n or n < 1:
        raise ValueError(f"group size must be a positive integer, got {n!r}")
    n = int(n)
    if n > MAX_N:
        raise EnumerationCeilingError(f"exact enumeration supports n <= {MAX_N}, got n={n}")
    if n > WARN_N:
        warnings.warn(
            f"enumerating 2**{n} sequences; expect long runtimes above n={WARN_N}",
            RuntimeWarning,
            stacklevel=3,
        )
    return n


def enumerate_sequences(
    n: int,
    scheme: RewardScheme,
    model: SignalModel,
    threads: Optional[int] = None,
    split_depth: Optional[int] = None,
) -> EnumerationResult:
    """Exhaustively enumerate all ``2**n`` sequences given ``x = +1``."""
    n = _check_n(n)
    beta = resolve_beta(scheme, model)
    if threads is None:
        threads = default_threads()
    if split_depth is None:
        split_depth = max(DEFAULT_SPLIT_DEPTH, n - MAX_SUBTREE_DEPTH)
    split_depth = min(split_depth, n)
    return _enumerate_cached(n, beta, model.epsilon, max(1, int(threads)), split_depth)


@lru_cache(maxsize=256)
def _enumerate_cached(n: int, beta: float, epsilon: float, threads: int, split_depth: int) -> EnumerationResult:
    model = SignalModel(epsilon)
    expander = _Expander(n, model, math.log(beta))
    root = (np.zeros(1), np.zeros(1), np.zeros(1), np.array([1]))

    # levels 0 .. split_depth, with split_depth nodes becoming subtree roots
    head, head_max, (thr, lpa, lpb, counts) = expander.run(*root, level=0, stop=split_depth)
    mass_a = [list(s[0]) for s in head[:-1]]
    mass_b = [list(s[1]) for s in head[:-1]]
    response = [list(s[2]) for s in head[:-1]]

    # subtree roots in n_A order; remember each root's n_A to place its bins
    offsets = np.concatenate(([0], np.cumsum(counts)))
    root_na = np.repeat(np.arange(len(counts)), counts)
    roots = [(thr[i : i + 1], lpa[i : i + 1], lpb[i : i + 1], int(root_na[i])) for i in range(offsets[-1])]

    def work(root):
        t, a, b, base = root
        sums, sub_max, _ = expander.run(t, a, b, np.array([1]), level=split_depth, stop=n)
        return base, sums, sub_max

    if threads > 1 and len(roots) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(work, roots))
    else:
        parts = [work(r) for r in roots]

    for depth in range(n - split_depth + 1):
        level = split_depth + depth
        acc_a = [[] for _ in range(level + 1)]
        acc_b = [[] for _ in range(level + 1)]
        acc_r = [[] for _ in range(level + 1)]
        for base, sums, _ in parts:
            sa, sb, sr = sums[depth]
            for j in range(len(sa)):
                acc_a[base + j].append(sa[j])
                acc_b[base + j].append(sb[j])
                if sr is not None:
                    acc_r[base + j].append(sr[j])
        mass_a.append([math.fsum(v) for v in acc_a])
        mass_b.append([math.fsum(v) for v in acc_b])
        if level < n:
            response.append([math.fsum(v) for v in acc_r])

    return EnumerationResult(
        n=n,
        beta=beta,
        mass_a=tuple(tuple(v) for v in mass_a),
        mass_b=tuple(tuple(v) for v in mass_b),
        response=tuple(tuple(v) for v in response),
        max_abs_threshold=max([head_max] + [p[2] for p in parts]),
    )


def _geometric_reward(k: int, beta: float) -> float:
    """Total reward paid to ``k`` correct choosers of one option."""
    if beta == 1.0:
        return float(k)
    return math.fsum(beta ** (-i) for i in range(k))


def outcome_distribution(n: int, scheme: RewardScheme, model: SignalModel, threads: Optional[int] = None) -> OutcomeDistribution:
    res = enumerate_sequences(n, scheme, model, threads=threads)
    return OutcomeDistribution(res.n, res.mass_a[res.n])


def enumerate_metrics(n: int, scheme: RewardScheme, model: SignalModel, threads: Optional[int] = None) -> GroupMetrics:
    if isinstance(n, bool) or int(n) != n or n < 1 or n % 2 == 0:
        raise ValueError(f"group size must be an odd positive integer, got {n!r}")
    res = enumerate_sequences(n, scheme, model, threads=threads)
    return _metrics_from(res)


def _metrics_from(res: EnumerationResult) -> GroupMetrics:
    n = res.n
    probs = res.mass_a[n]
    collective = math.fsum(p for k, p in enumerate(probs) if 2 * k > n)
    individual = math.fsum(k * p for k, p in enumerate(probs)) / n
    reward = math.fsum(p * _geometric_reward(k, res.beta) for k, p in enumerate(probs))
    return GroupMetrics(collective, individual, reward)


def social_response_matrix(
    n: int, scheme: RewardScheme, model: SignalModel, threads: Optional[int] = None
) -> SocialResponseMatrix:
    """P(next agent picks A | n_A, n_B, x=+1), averaged over consistent sequences.

    Each cell is normalised by the probability mass of the sequences it
    averages over.  Cells whose mass underflows to zero are ``nan``.
    """
    res = enumerate_sequences(n, scheme, model, threads=threads)
    cells = {}
    for level in range(res.n):
        for n_a, (num, den) in enumerate(zip(res.response[level], res.mass_a[level])):
            cells[(n_a, level - n_a)] = num / den if den > 0 else math.nan
    return SocialResponseMatrix(res.n - 1, cells)


def expected_total_reward_exact(n: int, scheme: RewardScheme, model: SignalModel, threads: Optional[int] = None) -> float:
    res = enumerate_sequences(n, scheme, model, threads=threads)
    return _metrics_from(res).expected_total_reward
