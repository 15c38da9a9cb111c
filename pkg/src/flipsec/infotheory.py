"""Mutual information of the flip channel, closed-form and LLR-estimated."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np


@dataclass(frozen=True)
class MiEstimate:
    """Mutual information in bits for a binary uniform input."""

    bits: float
    n_samples: int
    estimator: str
    std_error: Optional[float] = None

    def __post_init__(self):
        if not -1e-9 <= self.bits <= 1.0 + 1e-9:
            raise ValueError(f"MI of a binary input must lie in [0, 1], got {self.bits}")


def binary_entropy(p: float) -> float:
    """H2(p) in bits, with the 0 log 0 = 0 convention."""
    if p <= 0.0 or p >= 1.0:
        return 0.0
    return float(-p * np.log2(p) - (1.0 - p) * np.log2(1.0 - p))


def dmc_mi(partial: float, chi: float) -> MiEstimate:
    """I(u; s) of the flip channel with a uniform bit.

    I = H2((1 - partial + chi)/2) - (H2(partial) + H2(chi))/2, which is zero
    exactly on partial + chi = 1 (the output marginal no longer depends on u).
    """
    for name, p in (("partial", partial), ("chi", chi)):
        if not 0.0 <= p <= 1.0:
            raise ValueError(f"{name}={p} is not a probability")
    out = binary_entropy((1.0 - partial + chi) / 2.0)
    cond = 0.5 * (binary_entropy(partial) + binary_entropy(chi))
    return MiEstimate(bits=max(out - cond, 0.0), n_samples=0, estimator="closed_form")


def estimate_ami(llr_samples) -> MiEstimate:
    """Average mutual information from (u, llr) pairs with exact posteriors.

    For a binary uniform input and the true posterior log-odds L,
    I(U; y) = 1 - E[log2(1 + exp(-u L))]; the sample mean of that loss is
    the estimator, clamped to [0, 1], with its standard error alongside.
    """
    pairs = list(llr_samples)
    if not pairs:
        raise ValueError("estimate_ami needs at least one (u, llr) sample")
    u = np.array([p[0] for p in pairs], dtype=float)
    llr = np.array([p[1] for p in pairs], dtype=float)
    # log(1 + e^x) evaluated stably for both signs of x
    x = -u * llr
    loss = (np.logaddexp(0.0, x)) / np.log(2.0)
    bits = 1.0 - float(np.mean(loss))
    se = float(np.std(loss, ddof=1) / np.sqrt(len(pairs))) if len(pairs) > 1 else 0.0
    return MiEstimate(
        bits=float(np.clip(bits, 0.0, 1.0)),
        n_samples=len(pairs),
        estimator="llr_based",
        std_error=se,
    )
