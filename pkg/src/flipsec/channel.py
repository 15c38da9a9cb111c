"""Rayleigh channel generation and the eavesdropper's RIS-composed channel.

All entries are i.i.d. circularly symmetric complex Gaussian CN(0, 1):
real and imaginary parts each N(0, 1/2), so the average entry power is 1.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.random import Generator

# Bob's channel must stay invertible on its row space: the precoder applies
# the inverse singular values, so a near-singular draw would blow up power.
RANK_GUARD = 1e-6
MAX_REDRAWS = 100


class DegenerateChannelError(RuntimeError):
    """Raised when repeated draws fail the rank guard."""


class DimensionMismatchError(ValueError):
    """Raised when operands disagree on antenna / element counts."""


@dataclass(frozen=True)
class SystemDims:
    """Antenna and RIS element counts.

    n_tx: transmit antennas at Alice (M).
    n_bob: receive antennas at Bob (N_b), at most n_tx/2 unless strict=False.
    n_eve: receive antennas at Eve (N_e), unconstrained.
    n_ris: reflecting elements (L).
    """

    n_tx: int
    n_bob: int
    n_eve: int
    n_ris: int
    strict: bool = field(default=True, compare=False)

    def __post_init__(self):
        for name in ("n_tx", "n_bob", "n_eve", "n_ris"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        limit = self.n_tx / 2 if self.strict else self.n_tx
        if self.n_bob > limit:
            raise ValueError(
                f"n_bob={self.n_bob} exceeds the allowed ratio (n_tx={self.n_tx})"
            )

    @property
    def n_flip(self) -> int:
        """Flipped-antenna count q = n_tx - n_bob (fills the null space)."""
        return self.n_tx - self.n_bob


@dataclass(frozen=True)
class PhaseVector:
    """RIS phase configuration: L angles in [0, 2pi)."""

    theta: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.theta, dtype=float)
        if t.ndim != 1:
            raise ValueError("theta must be one-dimensional")
        if not np.all(np.isfinite(t)):
            raise ValueError("theta must be finite")
        object.__setattr__(self, "theta", np.mod(t, 2 * np.pi))
        if np.max(np.abs(np.abs(self.unit()) - 1.0), initial=0.0) > 1e-12:
            raise ValueError("phases do not map to unit-modulus reflections")

    def __len__(self) -> int:
        return self.theta.shape[0]

    def unit(self) -> np.ndarray:
        """Unit-modulus reflection coefficients e^{j*theta}."""
        return np.exp(1j * self.theta)

    def matrix(self) -> np.ndarray:
        """Diagonal reflection matrix."""
        return np.diag(self.unit())


@dataclass(frozen=True)
class ChannelRealization:
    """One draw of all four links for a single bit interval.

    h_bob:     Alice -> Bob, (n_bob, n_tx)
    h_eve:     Alice -> Eve direct path, (n_eve, n_tx)
    h_ris_eve: RIS -> Eve, (n_eve, n_ris)
    h_tx_ris:  Alice -> RIS, (n_ris, n_tx)
    """

    h_bob: np.ndarray
    h_eve: np.ndarray
    h_ris_eve: np.ndarray
    h_tx_ris: np.ndarray

    @property
    def dims(self) -> SystemDims:
        return SystemDims(
            n_tx=self.h_bob.shape[1],
            n_bob=self.h_bob.shape[0],
            n_eve=self.h_eve.shape[0],
            n_ris=self.h_ris_eve.shape[1],
            strict=False,
        )


def complex_gaussian(shape, rng: Generator, variance: float = 1.0) -> np.ndarray:
    """CN(0, variance) array: each real dimension carries variance/2."""
    scale = np.sqrt(variance / 2.0)
    return scale * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))


def draw_channels(dims: SystemDims, rng: Generator) -> ChannelRealization:
    """Draw one Rayleigh realization of all four channel matrices.

    Bob's matrix is redrawn (up to MAX_REDRAWS) until its smallest singular
    value exceeds RANK_GUARD times the largest, keeping the precoder's
    pre-equalization bounded. Same seed, same realization, bit for bit.
    """
    h_bob = None
    for _ in range(MAX_REDRAWS):
        cand = complex_gaussian((dims.n_bob, dims.n_tx), rng)
        sv = np.linalg.svd(cand, compute_uv=False)
        if sv[-1] > RANK_GUARD * sv[0]:
            h_bob = cand
            break
    if h_bob is None:
        raise DegenerateChannelError(
            f"no full-rank draw for h_bob in {MAX_REDRAWS} attempts"
        )
    h_eve = complex_gaussian((dims.n_eve, dims.n_tx), rng)
    h_ris_eve = complex_gaussian((dims.n_eve, dims.n_ris), rng)
    h_tx_ris = complex_gaussian((dims.n_ris, dims.n_tx), rng)
    return ChannelRealization(h_bob, h_eve, h_ris_eve, h_tx_ris)


def eve_effective_channel(ch: ChannelRealization, ph: PhaseVector) -> np.ndarray:
    """Eve's combined channel: direct path plus the single RIS reflection.

    Returns h_eve + h_ris_eve @ diag(e^{j theta}) @ h_tx_ris, shape (n_eve, n_tx).
    """
    if len(ph) != ch.h_ris_eve.shape[1]:
        raise DimensionMismatchError(
            f"phase vector has {len(ph)} entries, RIS has {ch.h_ris_eve.shape[1]}"
        )
    return ch.h_eve + (ch.h_ris_eve * ph.unit()[None, :]) @ ch.h_tx_ris


def diag_identity_check(ch: ChannelRealization, x: np.ndarray, ph: PhaseVector):
    """Both sides of the reflected-path rewrite used by the phase optimizer.

    lhs = h_ris_eve @ Theta @ h_tx_ris @ x, rhs = h_ris_eve @ diag(h_tx_ris x) @ v
    with v the unconjugated unit-modulus stack. Test helper only.
    """
    x = np.asarray(x)
    if x.shape[0] != ch.h_tx_ris.shape[1]:
        raise DimensionMismatchError("x length must equal n_tx")
    lhs = ch.h_ris_eve @ ph.matrix() @ ch.h_tx_ris @ x
    rhs = ch.h_ris_eve @ np.diag(ch.h_tx_ris @ x) @ ph.unit()
    return lhs, rhs


def add_awgn(signal: np.ndarray, sigma2: float, rng: Generator) -> np.ndarray:
    """Add CN(0, sigma2) noise per entry (variance split across re/im)."""
    if sigma2 < 0:
        raise ValueError(f"noise variance must be >= 0, got {sigma2}")
    if sigma2 == 0:
        return np.array(signal, copy=True)
    return signal + complex_gaussian(np.shape(signal), rng, variance=sigma2)
