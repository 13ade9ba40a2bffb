"""Decision environment, reward schemes and reward evaluation."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Union

from .numerics import inv_norm_cdf, norm_cdf

A = 1
B = -1


def _check_sign(value: int, what: str) -> int:
    if value not in (1, -1):
        raise ValueError(f"{what} must be +1 or -1, got {value!r}")
    return int(value)


@dataclass(frozen=True)
class WorldState:
    x: int

    def __post_init__(self):
        object.__setattr__(self, "x", _check_sign(self.x, "world state"))


@dataclass(frozen=True)
class Choice:
    c: int

    def __post_init__(self):
        object.__setattr__(self, "c", _check_sign(self.c, "choice"))


@dataclass(frozen=True)
class PrivateSignal:
    delta: float

    def __post_init__(self):
        if not math.isfinite(self.delta):
            raise ValueError(f"private signal must be finite, got {self.delta!r}")


@dataclass(frozen=True)
class SignalModel:
    """Gaussian private-signal model with noise ``epsilon``.

    ``q`` is the probability that a lone agent picks the correct option and
    ``Q = q / (1 - q)`` the corresponding odds.  Build from either parameter
    with :meth:`from_epsilon` or :meth:`from_q`.
    """

    epsilon: float
    q: float = field(init=False)
    Q: float = field(init=False)

    def __post_init__(self):
        eps = float(self.epsilon)
        if not (math.isfinite(eps) and eps > 0):
            raise ValueError(f"epsilon must be a positive finite number, got {self.epsilon!r}")
        q = norm_cdf(1.0 / eps)
        if not (0.5 < q < 1.0):
            raise ValueError(f"epsilon={eps!r} gives q={q!r}, outside (0.5, 1)")
        object.__setattr__(self, "epsilon", eps)
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "Q", q / (1.0 - q))

    @classmethod
    def from_epsilon(cls, epsilon: float) -> "SignalModel":
        return cls(epsilon)

    @classmethod
    def from_q(cls, q: float) -> "SignalModel":
        q = float(q)
        if not (0.5 < q < 1.0):
            raise ValueError(f"q must lie in (0.5, 1), got {q!r}")
        return cls(1.0 / inv_norm_cdf(q))


@dataclass(frozen=True)
class Binary:
    """Reward 1 for a correct choice regardless of what others chose."""

    def log_beta(self, model: SignalModel) -> float:
        return 0.0


@dataclass(frozen=True)
class Competitive:
    """Correct-choice reward discounted by ``beta**-a`` for ``a`` prior same-option choosers."""

    beta: float

    def __post_init__(self):
        beta = float(self.beta)
        if not (math.isfinite(beta) and beta > 0):
            raise ValueError(f"beta must be a positive finite number, got {self.beta!r}")
        object.__setattr__(self, "beta", beta)

    def log_beta(self, model: SignalModel) -> float:
        return math.log(self.beta)


@dataclass(frozen=True)
class Condorcet:
    """Competitive rewards with ``beta`` set to the odds ``Q`` of the signal model."""

    def log_beta(self, model: SignalModel) -> float:
        return math.log(model.Q)

    def resolve(self, model: SignalModel) -> Competitive:
        return Competitive(model.Q)


RewardScheme = Union[Binary, Competitive, Condorcet]


def resolve_beta(scheme: RewardScheme, model: SignalModel) -> float:
    """Competition strength of ``scheme`` (1 for binary rewards)."""
    if isinstance(scheme, Binary):
        return 1.0
    if isinstance(scheme, Competitive):
        return scheme.beta
    if isinstance(scheme, Condorcet):
        return model.Q
    raise TypeError(f"unknown reward scheme {scheme!r}")


class DecisionSequence(tuple):
    """Immutable ordered sequence of choices (+1 for A, -1 for B)."""

    def __new__(cls, choices: Iterable = ()):
        items = tuple(_check_sign(c.c if isinstance(c, Choice) else c, "choice") for c in choices)
        return super().__new__(cls, items)

    @property
    def n_a(self) -> int:
        return sum(1 for c in self if c == A)

    @property
    def n_b(self) -> int:
        return len(self) - self.n_a

    def __repr__(self):
        return "DecisionSequence(" + "".join("A" if c == A else "B" for c in self) + ")"

    @classmethod
    def from_string(cls, text: str) -> "DecisionSequence":
        mapping = {"A": A, "B": B}
        return cls(mapping[ch] for ch in text.upper())


def _as_sign(choice) -> int:
    return _check_sign(choice.c if isinstance(choice, Choice) else choice, "choice")


def reward_factor(scheme: RewardScheme, choice, history: DecisionSequence, model: SignalModel) -> float:
    c = _as_sign(choice)
    beta = resolve_beta(scheme, model)
    if beta == 1.0:
        return 1.0
    prior = history.n_a if c == A else history.n_b
    return beta ** (-prior)


def realized_reward(
    scheme: RewardScheme,
    choice,
    history: DecisionSequence,
    world,
    model: SignalModel,
) -> float:
    x = world.x if isinstance(world, WorldState) else _check_sign(world, "world state")
    if _as_sign(choice) != x:
        return 0.0
    return reward_factor(scheme, choice, history, model)
