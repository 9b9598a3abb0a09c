"""Parameters, the one-step law and the exact enumeration oracle.

The walk starts at 0, takes a Bernoulli(s) first step, and from then on
steps right with probability ``q + alpha * x / n`` where ``x`` is the
current position after ``n`` steps. That conditional law only depends on
the history through ``x / n``, so the pair ``(n, x)`` is a Markov chain
and its law at fixed ``n`` can be computed exactly in ``O(n^2)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterator, Mapping

import numpy as np

from .errors import CapExceeded, DegenerateStep, OutOfRange

DEFAULT_ENUMERATION_CAP = 4096


@dataclass(frozen=True)
class ModelParams:
    """Walk parameters ``(p, q, s)``.

    ``p`` is the probability of stepping right after recalling a past
    right-step, ``q`` after recalling a past rest, ``s`` the probability
    of the very first step. ``alpha`` is always derived, never stored.
    """

    p: float
    q: float
    s: float = 0.5

    @property
    def alpha(self) -> float:
        return self.p - self.q

    def as_dict(self) -> dict:
        return {"p": self.p, "q": self.q, "s": self.s}


def validate(params: ModelParams) -> ModelParams:
    """Check all three probabilities and return normalized float params."""
    values = {}
    for name in ("p", "q", "s"):
        raw = getattr(params, name)
        try:
            v = float(raw)
        except (TypeError, ValueError):
            raise OutOfRange(name, raw) from None
        if not (0.0 <= v <= 1.0):  # also rejects NaN
            raise OutOfRange(name, raw)
        values[name] = v
    return ModelParams(**values)


@dataclass(frozen=True)
class WalkState:
    n: int
    x: int

    def __post_init__(self):
        if self.n < 0 or not (0 <= self.x <= self.n):
            raise ValueError(f"invalid walk state (n={self.n}, x={self.x})")


def step_probability(state: WalkState, params: ModelParams) -> float:
    """Probability that the step after ``state`` goes right.

    Evaluated as ``q + (alpha * x) / n``; the simulation kernels use the
    identical expression so both round the same way.
    """
    if state.n == 0:
        raise DegenerateStep("the first step is Bernoulli(s); no memory rule at n=0")
    return params.q + params.alpha * state.x / state.n


@dataclass(frozen=True)
class DistributionTable:
    """Exact law of ``X_n``; ``mass[x]`` is ``P(X_n = x)`` for ``x = 0..n``."""

    n: int
    mass: np.ndarray = field(repr=False)

    def __post_init__(self):
        self.mass.setflags(write=False)

    def __getitem__(self, x: int) -> float:
        if 0 <= x <= self.n:
            return float(self.mass[x])
        return 0.0

    def as_mapping(self) -> Mapping[int, float]:
        return {x: float(m) for x, m in enumerate(self.mass)}

    @property
    def support(self) -> np.ndarray:
        return np.arange(self.n + 1)


def iter_distributions(
    params: ModelParams, n: int, cap: int = DEFAULT_ENUMERATION_CAP
) -> Iterator[DistributionTable]:
    """Exact laws of ``X_1, ..., X_n`` from one forward dynamic program."""
    params = validate(params)
    if n < 1:
        raise ValueError("n must be >= 1")
    if n > cap:
        raise CapExceeded(f"n={n} exceeds enumeration cap {cap}")

    mass = np.zeros(n + 1)
    mass[0] = 1.0 - params.s
    mass[1] = params.s
    alpha, q = params.alpha, params.q
    yield DistributionTable(n=1, mass=mass[:2].copy())
    for k in range(1, n):
        current = mass[: k + 1].copy()
        up = q + alpha * np.arange(k + 1) / k
        mass[: k + 1] = current * (1.0 - up)
        mass[1 : k + 2] += current * up
        yield DistributionTable(n=k + 1, mass=mass[: k + 2].copy())


def enumerate_distribution(
    params: ModelParams, n: int, cap: int = DEFAULT_ENUMERATION_CAP
) -> DistributionTable:
    """Forward dynamic program over positions, one step at a time."""
    for dist in iter_distributions(params, n, cap):
        pass
    return dist


def exact_moment(dist: DistributionTable, order: int) -> float:
    """Raw moment ``E[X_n^order]`` with compensated summation."""
    if order < 1:
        raise ValueError("order must be >= 1")
    x = dist.support.astype(float)
    return math.fsum(x**order * dist.mass)
