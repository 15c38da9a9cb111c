"""SVD precoding: range-space pre-equalization for s_n, null-space carriage for s_r.

Bob's channel H = U S V^H is decomposed once per realization. The normal
symbols travel through F = V_r S_r^{-1} (so H F = U and Bob sees clean
copies), while the flipped symbols travel through the null basis Z (the
trailing right singular vectors, H Z = 0) and never reach Bob.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.random import Generator

from .channel import ChannelRealization, RANK_GUARD, add_awgn


class RankDeficientError(ValueError):
    """Channel matrix too ill-conditioned to pre-equalize."""


@dataclass(frozen=True)
class PrecoderSet:
    """SVD factors and derived precoding operators for one realization.

    u_left:    (n_bob, n_bob) unitary left factor.
    sigma:     (n_bob,) singular values, nonincreasing.
    v_right:   (n_tx, n_tx) unitary right factor.
    forward:   F = V_r diag(1/sigma), (n_tx, n_bob).
    null_basis: Z, (n_tx, n_tx - n_bob), H Z = 0.
    alpha:     power normalization, a function of the channel only.
    """

    u_left: np.ndarray
    sigma: np.ndarray
    v_right: np.ndarray
    forward: np.ndarray
    null_basis: np.ndarray
    alpha: float

    @property
    def rank(self) -> int:
        return self.sigma.shape[0]


def _canonicalize(u: np.ndarray, v: np.ndarray, rank: int):
    """Rotate singular-vector phases so each right vector's largest entry is
    real-positive; paired left vectors absorb the rotation. Makes the
    decomposition deterministic for golden-file comparisons."""
    v = v.copy()
    u = u.copy()
    for j in range(v.shape[1]):
        k = int(np.argmax(np.abs(v[:, j])))
        mag = abs(v[k, j])
        if mag == 0.0:
            continue
        phase = v[k, j] / mag
        v[:, j] /= phase
        if j < rank:
            u[:, j] /= phase
    return u, v


def build(h_bob: np.ndarray) -> PrecoderSet:
    """Decompose Bob's channel and assemble the precoding operators.

    alpha = 1 / sqrt(||F 1||^2 + ||Z||_F^2): with s_n = u*1 coherent and s_r
    sign-symmetric, E||X||^2 = 1. It depends on the channel only, never on
    the data, so both receivers' detectors may use it.
    """
    h_bob = np.asarray(h_bob)
    n_bob, n_tx = h_bob.shape
    u, sv, vh = np.linalg.svd(h_bob, full_matrices=True)
    if sv[-1] <= RANK_GUARD * sv[0]:
        raise RankDeficientError(
            f"sigma_min/sigma_max = {sv[-1] / sv[0]:.2e} below guard {RANK_GUARD}"
        )
    v = vh.conj().T
    u, v = _canonicalize(u, v, rank=n_bob)
    forward = v[:, :n_bob] / sv[None, :]
    null_basis = v[:, n_bob:]
    ones = np.ones(n_bob)
    alpha = 1.0 / np.sqrt(
        np.linalg.norm(forward @ ones) ** 2 + np.linalg.norm(null_basis) ** 2
    )
    return PrecoderSet(
        u_left=u,
        sigma=sv,
        v_right=v,
        forward=forward,
        null_basis=null_basis,
        alpha=float(alpha),
    )


def transmit(ps: PrecoderSet, s_n: np.ndarray, s_r: np.ndarray) -> np.ndarray:
    """X = alpha * (F s_n + Z s_r), length n_tx."""
    s_n = np.asarray(s_n)
    s_r = np.asarray(s_r)
    if s_n.shape[0] != ps.forward.shape[1]:
        raise ValueError(f"s_n must have length {ps.forward.shape[1]}")
    if s_r.shape[0] != ps.null_basis.shape[1]:
        raise ValueError(f"s_r must have length {ps.null_basis.shape[1]}")
    return ps.alpha * (ps.forward @ s_n + ps.null_basis @ s_r)


def bob_observe(
    ch: ChannelRealization,
    ps: PrecoderSet,
    x: np.ndarray,
    sigma_b2: float,
    rng: Generator,
) -> np.ndarray:
    """y_B = H X + n_b. Noiseless, this is alpha * U s_n: s_r never appears."""
    return add_awgn(ch.h_bob @ x, sigma_b2, rng)


def eve_observe(
    g_eve: np.ndarray,
    x: np.ndarray,
    sigma_e2: float,
    rng: Generator,
) -> np.ndarray:
    """y_E = G_E X + n_e. Eve's generic channel mixes both signal components."""
    return add_awgn(g_eve @ x, sigma_e2, rng)
