"""Rational agents: Bayesian inference from a private signal and observed choices.

An agent facing history ``S`` picks A iff its private signal exceeds a critical
value ``delta*``.  Later agents can recompute that value, so each observed
choice reveals which side of its threshold the signal fell on.  Thresholds
therefore follow a one-step recursion along the sequence; with competitive
rewards the reward ratio adds ``C * log(beta)`` per observed choice.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Tuple

import numpy as np
from scipy.special import erfcx

from .model import A, B, DecisionSequence, RewardScheme, SignalModel, resolve_beta
from .numerics import SQRT1_2, log_norm_cdf, log_norm_cdf_array

__all__ = [
    "ThresholdTrace",
    "SequenceLikelihood",
    "threshold_trace",
    "sequence_log_likelihood",
    "posterior_correct",
    "choose",
    "threshold_step_array",
]


@dataclass(frozen=True)
class ThresholdTrace:
    """Critical private-signal values; ``thresholds[j]`` applies to agent ``j + 1``."""

    thresholds: Tuple[float, ...]
    scheme: RewardScheme
    model: SignalModel


@dataclass(frozen=True)
class SequenceLikelihood:
    log_p_given_A_correct: float
    log_p_given_B_correct: float


def threshold_step_array(thr, c, inv_eps, half_var, log_beta):
    """Threshold for the next agent after one observed choice ``c`` made at ``thr``.

    When both likelihood arguments lie in the lower normal tail, the Gaussian
    factors of the two log-CDFs cancel the old threshold exactly. What remains
    is a ratio of scaled complementary error functions, which avoids
    subtracting two large logs (and the ``eps^2/2`` amplification of that
    cancellation when ``q`` is close to one half).
    """
    thr = np.asarray(thr, dtype=np.float64)
    c = np.broadcast_to(np.asarray(c, dtype=np.float64), thr.shape)
    z_a = c * (1.0 - thr) * inv_eps
    z_b = c * (-1.0 - thr) * inv_eps
    out = thr + half_var * (log_norm_cdf_array(z_b) - log_norm_cdf_array(z_a) + c * log_beta)
    tail = (z_a < -1.0) & (z_b < -1.0)
    if np.any(tail):
        ratio = erfcx(-z_b[tail] * SQRT1_2) / erfcx(-z_a[tail] * SQRT1_2)
        out[tail] = half_var * (np.log(ratio) + c[tail] * log_beta)
    return out


def _walk(sequence: DecisionSequence, scheme: RewardScheme, model: SignalModel):
    eps = model.epsilon
    half_var = 0.5 * eps * eps
    log_beta = math.log(resolve_beta(scheme, model))
    thr = 0.0
    thresholds = [thr]
    terms_a: List[float] = []
    terms_b: List[float] = []
    for c in sequence:
        # log P(this choice | x) given the chooser's threshold
        la = log_norm_cdf(c * (1.0 - thr) / eps)
        lb = log_norm_cdf(c * (-1.0 - thr) / eps)
        terms_a.append(la)
        terms_b.append(lb)
        thr = float(threshold_step_array(np.array([thr]), c, 1.0 / eps, half_var, log_beta)[0])
        thresholds.append(thr)
    return thresholds, terms_a, terms_b


def threshold_trace(sequence: DecisionSequence, scheme: RewardScheme, model: SignalModel) -> ThresholdTrace:
    """Thresholds for every agent along ``sequence`` plus the next one (length + 1 values)."""
    thresholds, _, _ = _walk(DecisionSequence(sequence), scheme, model)
    return ThresholdTrace(tuple(thresholds), scheme, model)


def sequence_log_likelihood(
    sequence: DecisionSequence, scheme: RewardScheme, model: SignalModel
) -> SequenceLikelihood:
    _, terms_a, terms_b = _walk(DecisionSequence(sequence), scheme, model)
    return SequenceLikelihood(math.fsum(terms_a), math.fsum(terms_b))


def posterior_correct(delta, sequence: DecisionSequence, scheme: RewardScheme, model: SignalModel) -> float:
    """P(x = +1 | private signal, observed sequence) under the symmetric prior."""
    delta = float(getattr(delta, "delta", delta))
    lik = sequence_log_likelihood(sequence, scheme, model)
    # log posterior odds: Gaussian likelihood ratio exp(2 delta / eps^2) times social evidence
    log_odds = 2.0 * delta / model.epsilon**2 + lik.log_p_given_A_correct - lik.log_p_given_B_correct
    if log_odds >= 0:
        return 1.0 / (1.0 + math.exp(-log_odds))
    e = math.exp(log_odds)
    return e / (1.0 + e)


def choose(delta, threshold: float) -> int:
    """A iff the signal strictly exceeds the threshold; ties go to B."""
    delta = float(getattr(delta, "delta", delta))
    return A if delta > threshold else B
