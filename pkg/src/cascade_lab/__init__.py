"""Rational sequential binary choice under binary and competitive rewards.

Exact (full sequence enumeration) and Monte Carlo computation of individual
and collective accuracy, plus reward-design analytics.
"""

__version__ = "0.1.0"

from .agent import (
    SequenceLikelihood,
    ThresholdTrace,
    choose,
    posterior_correct,
    sequence_log_likelihood,
    threshold_trace,
)
from .enumeration import (
    EnumerationCeilingError,
    GroupMetrics,
    OutcomeDistribution,
    SocialResponseMatrix,
    enumerate_metrics,
    expected_total_reward_exact,
    outcome_distribution,
    social_response_matrix,
)
from .model import (
    A,
    B,
    Binary,
    Choice,
    Competitive,
    Condorcet,
    DecisionSequence,
    PrivateSignal,
    SignalModel,
    WorldState,
    realized_reward,
    reward_factor,
)
from .montecarlo import EstimateWithError, SimulationRun, estimate_metrics, simulate_sequence
from .rewards import (
    beta_sweep,
    cjt_accuracy,
    condorcet_scheme,
    expected_total_reward_formula,
    max_effective_beta,
    max_total_reward,
)
