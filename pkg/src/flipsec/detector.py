"""Exact log-likelihood-ratio detection for both receivers.

Each detector marginalizes the flip pattern: it sums the conditional
likelihood exp(-||y - mean(S)||^2 / sigma^2) over all candidate sign
vectors S, weighted by the per-branch flip priors under each bit
hypothesis, and takes the log of the ratio. Log-sum-exp keeps the
enumeration finite for any observation.

Bob's default priors are deterministic (his branches are never flipped),
collapsing his statistic to a two-hypothesis distance difference. Eve only
knows the overall flipping probability, so her priors apply the marginal
pair to every branch.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .flipcode import FlipPolicy, marginals
from .precoder import PrecoderSet

ENUM_LIMIT = 20


class EnumerationTooLargeError(ValueError):
    """2^branches exceeds the exact-detection limit."""


@dataclass(frozen=True)
class LlrResult:
    """Detection statistic, threshold and the resulting bit."""

    llr: float
    decision: int
    threshold: float


@dataclass(frozen=True)
class PriorTable:
    """Per-branch flip priors P(s_i != u | u) for each hypothesis.

    p_given_plus[i]  = P(s_i = -1 | u = +1) on branch i.
    p_given_minus[i] = P(s_i = +1 | u = -1) on branch i.
    """

    p_given_plus: np.ndarray
    p_given_minus: np.ndarray

    def __post_init__(self):
        for name in ("p_given_plus", "p_given_minus"):
            p = np.asarray(getattr(self, name), dtype=float)
            if np.any(p < 0.0) or np.any(p > 1.0):
                raise ValueError(f"{name} entries must lie in [0, 1]")
            object.__setattr__(self, name, p)
        if self.p_given_plus.shape != self.p_given_minus.shape:
            raise ValueError("prior arrays must have matching shapes")

    def __len__(self) -> int:
        return self.p_given_plus.shape[0]

    @classmethod
    def no_flip(cls, branches: int) -> "PriorTable":
        """Deterministic s = u on every branch (Bob's default)."""
        z = np.zeros(branches)
        return cls(p_given_plus=z, p_given_minus=z.copy())

    @classmethod
    def marginal(cls, policy: FlipPolicy, branches: int) -> "PriorTable":
        """The (partial, chi) marginals on every branch (Eve's default).

        Pairs complementary within the optimality tolerance are snapped to
        exact float complements: with partial + chi = 1 the two hypothesis
        priors are the same distribution, and the statistic must come out
        exactly zero rather than inherit rounding noise with a data-
        correlated sign.
        """
        partial, chi = marginals(policy)
        if abs(partial + chi - 1.0) < 1e-12:
            # double complement: the second subtraction is exact, so the
            # pair ends up complementary bit for bit
            if partial >= chi:
                chi = 1.0 - partial
                partial = 1.0 - chi
            else:
                partial = 1.0 - chi
                chi = 1.0 - partial
        return cls(
            p_given_plus=np.full(branches, partial),
            p_given_minus=np.full(branches, chi),
        )


def sign_table(n: int) -> np.ndarray:
    """All 2^n sign vectors, one per row; bit j of the row index sets entry j."""
    if n > ENUM_LIMIT:
        raise EnumerationTooLargeError(f"2^{n} exceeds 2^{ENUM_LIMIT}")
    if n == 0:
        return np.zeros((1, 0))
    bits = (np.arange(2**n)[:, None] >> np.arange(n)[None, :]) & 1
    return 1.0 - 2.0 * bits


def log_priors(table: PriorTable, signs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """log prod_i P(s_i | u) for each sign row, under u=+1 and u=-1.

    Keep-probabilities use plain log(1 - p) so that exactly complementary
    flip pairs (p, 1 - p) produce bit-identical prior vectors under the two
    hypotheses; log1p's extra internal precision would break that tie.
    """
    with np.errstate(divide="ignore"):
        lp_flip_p = np.log(table.p_given_plus)
        lp_keep_p = np.log(1.0 - table.p_given_plus)
        lp_flip_m = np.log(table.p_given_minus)
        lp_keep_m = np.log(1.0 - table.p_given_minus)
    minus = signs < 0
    lp_plus = np.where(minus, lp_flip_p[None, :], lp_keep_p[None, :]).sum(axis=1)
    lp_minus = np.where(minus, lp_keep_m[None, :], lp_flip_m[None, :]).sum(axis=1)
    return lp_plus, lp_minus


def logsumexp(a: np.ndarray) -> float:
    """Stable log(sum(exp(a))); tolerates -inf entries."""
    m = np.max(a)
    if not np.isfinite(m):
        return float(m)
    return float(m + np.log(np.sum(np.exp(a - m))))


def _llr_from_means(
    y: np.ndarray, means: np.ndarray, priors: PriorTable, sigma2: float
) -> float:
    """LLR of y against candidate means (rows of `means`) with sign priors."""
    sigma2 = max(float(sigma2), 1e-12)
    signs = sign_table(len(priors))
    ll = -np.sum(np.abs(y[None, :] - means) ** 2, axis=1) / sigma2
    lp_plus, lp_minus = log_priors(priors, signs)
    return logsumexp(ll + lp_plus) - logsumexp(ll + lp_minus)


def decide(llr: float, threshold: float = 0.0) -> int:
    """+1 when the statistic meets the threshold, else -1 (ties go to +1)."""
    return 1 if llr >= threshold else -1


def bob_llr(
    y_b: np.ndarray,
    ps: PrecoderSet,
    priors: PriorTable,
    sigma_b2: float,
    threshold: float = 0.0,
) -> LlrResult:
    """Bob's exact LLR, marginalizing his r range-space branches.

    Candidate means are alpha * U S over S in {-1,+1}^r, since the forward
    precoder pre-equalizes the channel (H F = U).
    """
    r = ps.rank
    if len(priors) != r:
        raise ValueError(f"priors must cover {r} branches")
    signs = sign_table(r)
    means = ps.alpha * (signs @ ps.u_left.T)  # rows: alpha * U @ S
    llr = _llr_from_means(np.asarray(y_b), means, priors, sigma_b2)
    return LlrResult(llr=llr, decision=decide(llr, threshold), threshold=threshold)


def bob_llr_reduced(
    y_b: np.ndarray,
    ps: PrecoderSet,
    priors: PriorTable,
    sigma_b2: float,
    threshold: float = 0.0,
) -> LlrResult:
    """Same statistic computed in rotated coordinates (U^H y_B)_{1:r}.

    The coordinates beyond r contribute a factor common to both hypotheses
    that cancels in the ratio, so the value matches bob_llr exactly.
    """
    r = ps.rank
    if len(priors) != r:
        raise ValueError(f"priors must cover {r} branches")
    y_rot = (ps.u_left.conj().T @ np.asarray(y_b))[:r]
    means = ps.alpha * sign_table(r).astype(complex)
    llr = _llr_from_means(y_rot, means, priors, sigma_b2)
    return LlrResult(llr=llr, decision=decide(llr, threshold), threshold=threshold)


def eve_llr(
    y_e: np.ndarray,
    g_eve: np.ndarray,
    ps: PrecoderSet,
    priors: PriorTable,
    sigma_e2: float,
    threshold: float = 0.0,
) -> LlrResult:
    """Eve's exact LLR over the full 2^M signal hypothesis set.

    Every transmit vector has the form alpha*(F s_n + Z s_r), so candidate
    means are alpha * G_E [F|Z] S with S the concatenated (s_n, s_r) signs.
    Branch order in `priors` follows that concatenation.
    """
    m = ps.forward.shape[0]
    if len(priors) != m:
        raise ValueError(f"priors must cover {m} branches")
    if m > ENUM_LIMIT:
        raise EnumerationTooLargeError(f"2^{m} exceeds 2^{ENUM_LIMIT}")
    comb = ps.alpha * (g_eve @ np.hstack([ps.forward, ps.null_basis]))
    means = sign_table(m) @ comb.T
    llr = _llr_from_means(np.asarray(y_e), means, priors, sigma_e2)
    return LlrResult(llr=llr, decision=decide(llr, threshold), threshold=threshold)
