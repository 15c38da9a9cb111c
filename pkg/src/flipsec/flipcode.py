"""Random bit-flipping encoder and its discrete memoryless channel view.

A secret bit u is replicated across all n_tx antennas; q randomly selected
antennas flip it with configurable conditional probabilities. Seen per
antenna, u -> s is a binary channel with marginals

    partial = P(s=-1 | u=+1) = (q/M) * p_plus
    chi     = P(s=+1 | u=-1) = (q/M) * p_minus

and the transmitted symbol stream becomes useless to an observer of s
exactly when partial + chi = 1.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from numpy.random import Generator

from .channel import SystemDims

OPTIMAL_TOL = 1e-12


@dataclass(frozen=True)
class FlipPolicy:
    """Flip-count and conditional flip probabilities of the selected antennas.

    q: antennas selected for flipping per bit interval.
    m: total transmit antennas.
    p_plus: P(s=-1 | u=+1, selected).
    p_minus: P(s=+1 | u=-1, selected).
    """

    q: int
    m: int
    p_plus: float
    p_minus: float

    def __post_init__(self):
        if not 0 <= self.q <= self.m:
            raise ValueError(f"need 0 <= q <= m, got q={self.q}, m={self.m}")
        for name in ("p_plus", "p_minus"):
            p = getattr(self, name)
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"{name}={p} is not a probability")

    @classmethod
    def optimal(cls, q: int, m: int) -> "FlipPolicy":
        """Symmetric policy with partial = chi = 1/2.

        Requires q/m >= 1/2; below that the conditional probability m/(2q)
        would exceed 1, so no optimal policy exists.
        """
        if q <= 0 or 2 * q < m:
            raise ValueError(
                f"optimal flipping needs q/m >= 1/2, got q={q}, m={m}"
            )
        p = m / (2.0 * q)
        return cls(q=q, m=m, p_plus=p, p_minus=p)

    @classmethod
    def from_marginals(cls, q: int, m: int, partial: float, chi: float) -> "FlipPolicy":
        """Back-solve the conditional probabilities from target marginals."""
        if q == 0:
            if partial != 0.0 or chi != 0.0:
                raise ValueError("q=0 forces zero marginals")
            return cls(q=0, m=m, p_plus=0.0, p_minus=0.0)
        p_plus = partial * m / q
        p_minus = chi * m / q
        if p_plus > 1.0 + OPTIMAL_TOL or p_minus > 1.0 + OPTIMAL_TOL:
            raise ValueError(
                f"marginals ({partial}, {chi}) unreachable with q={q}, m={m}"
            )
        return cls(q=q, m=m, p_plus=min(p_plus, 1.0), p_minus=min(p_minus, 1.0))


@dataclass(frozen=True)
class FlipOutcome:
    """Encoded symbols for one bit interval.

    s: length-m symbols in {-1,+1}.
    flipped_mask: True at the q positions selected for flipping.
    u: the source bit.
    """

    s: np.ndarray
    flipped_mask: np.ndarray
    u: int


def marginals(policy: FlipPolicy) -> tuple[float, float]:
    """(partial, chi): unconditional flip probabilities per antenna."""
    frac = policy.q / policy.m
    return frac * policy.p_plus, frac * policy.p_minus


def transition_matrix(policy: FlipPolicy) -> np.ndarray:
    """Row-stochastic 2x2 channel matrix, rows u in (-1,+1), cols s in (-1,+1)."""
    partial, chi = marginals(policy)
    return np.array([[1.0 - chi, chi], [partial, 1.0 - partial]])


def is_optimal(policy: FlipPolicy) -> bool:
    """True when the marginals sum to 1 and s carries nothing about u."""
    partial, chi = marginals(policy)
    return abs(partial + chi - 1.0) < OPTIMAL_TOL


def min_flip_fraction() -> Fraction:
    """Smallest q/m admitting an optimal policy."""
    return Fraction(1, 2)


def encode(u: int, dims: SystemDims, policy: FlipPolicy, rng: Generator) -> FlipOutcome:
    """Select q antennas uniformly at random and flip their copies of u.

    Unselected antennas always carry u; each selected antenna flips with the
    policy's conditional probability for the current bit value. Positions are
    redrawn on every call.
    """
    if u not in (-1, 1):
        raise ValueError(f"u must be -1 or +1, got {u}")
    if policy.m != dims.n_tx:
        raise ValueError("policy and dims disagree on antenna count")
    m, q = policy.m, policy.q
    mask = np.zeros(m, dtype=bool)
    mask[rng.permutation(m)[:q]] = True
    p_flip = policy.p_plus if u == 1 else policy.p_minus
    flips = mask & (rng.random(m) < p_flip)
    s = np.full(m, u, dtype=np.int8)
    s[flips] = -u
    return FlipOutcome(s=s, flipped_mask=mask, u=u)


def split(outcome: FlipOutcome, dims: SystemDims) -> tuple[np.ndarray, np.ndarray]:
    """Partition s into (s_n, s_r) by selection, each in ascending position.

    s_n (unselected, length n_bob) feeds the range-space branch and always
    equals u; s_r (selected, length q = n_tx - n_bob) rides the null space.
    """
    q = int(np.count_nonzero(outcome.flipped_mask))
    if q != dims.n_flip:
        raise ValueError(
            f"selection count {q} != n_tx - n_bob = {dims.n_flip}"
        )
    s_n = outcome.s[~outcome.flipped_mask]
    s_r = outcome.s[outcome.flipped_mask]
    return s_n, s_r
