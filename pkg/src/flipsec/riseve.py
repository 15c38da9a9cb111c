"""Eve-side RIS phase optimization.

Both attack modes reduce to maximizing a Hermitian quadratic over
unit-modulus phases v, f(v) = v^H M v + 2 Re(v^H b) + c0:

  * known transmitted signal: f(v) = ||h_eve x + A v||^2 with
    A = h_ris_eve diag(h_tx_ris x) -- the worst case for the defender;
  * unknown signal: f(v) = ||h_eve + h_ris_eve Theta h_tx_ris||_F^2,
    the aggregate channel gain.

Solvers: per-element coordinate ascent (monotone, closed-form updates),
a lifted semidefinite relaxation solved by low-rank factorization with
projected gradient ascent, Gaussian randomization to recover a feasible
phase vector, plus exhaustive and random baselines used as oracles.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
from numpy.random import Generator

from .channel import ChannelRealization, DimensionMismatchError, PhaseVector

HERMITIAN_TOL = 1e-10
PSD_TOL = 1e-8
BRUTE_FORCE_CAP = 2**24


class InstanceTooLargeError(ValueError):
    """Exhaustive search would exceed the evaluation cap."""


@dataclass(frozen=True)
class QuadraticForm:
    """f(v) = v^H mat v + 2 Re(v^H lin) + const over unit-modulus v.

    kind is 'known_x' or 'unknown_x'; mat is Hermitian PSD by construction
    (a Gram matrix in both cases).
    """

    mat: np.ndarray
    lin: np.ndarray
    const: float
    kind: str

    def __post_init__(self):
        m = np.asarray(self.mat)
        if np.max(np.abs(m - m.conj().T), initial=0.0) > HERMITIAN_TOL:
            raise ValueError("matrix part is not Hermitian")
        if np.linalg.eigvalsh(m)[0] < -PSD_TOL:
            raise ValueError("matrix part is not positive semidefinite")

    @property
    def size(self) -> int:
        return self.mat.shape[0]

    def value(self, v: np.ndarray) -> float:
        """Objective at a (unit-modulus) phase stack v."""
        v = np.asarray(v)
        quad = np.real(v.conj() @ self.mat @ v)
        return float(quad + 2.0 * np.real(v.conj() @ self.lin) + self.const)

    def value_many(self, vs: np.ndarray) -> np.ndarray:
        """Objective for each row of vs, vectorized."""
        quad = np.einsum("ij,jk,ik->i", vs.conj(), self.mat, vs).real
        lin = 2.0 * (vs.conj() @ self.lin).real
        return quad + lin + self.const

    def lifted(self) -> np.ndarray:
        """(L+1)x(L+1) Hermitian lift R with vbar^H R vbar = f(v) for vbar=[v;1]."""
        n = self.size
        r = np.zeros((n + 1, n + 1), dtype=complex)
        r[:n, :n] = self.mat
        r[:n, n] = self.lin
        r[n, :n] = np.conj(self.lin)
        r[n, n] = self.const
        return r


@dataclass(frozen=True)
class PhaseSolution:
    """A feasible phase vector with its objective and provenance tag."""

    v: PhaseVector
    objective: float
    method: str
    sdr_upper_bound: Optional[float] = None


def _solution(vec: np.ndarray, qf: QuadraticForm, method: str,
              upper: Optional[float] = None) -> PhaseSolution:
    ph = PhaseVector(np.angle(vec))
    return PhaseSolution(
        v=ph, objective=qf.value(ph.unit()), method=method, sdr_upper_bound=upper
    )


def qf_known_x(ch: ChannelRealization, x: np.ndarray) -> QuadraticForm:
    """Received-power objective when Eve knows the transmitted vector x."""
    x = np.asarray(x)
    if x.shape[0] != ch.h_tx_ris.shape[1]:
        raise DimensionMismatchError("x length must equal n_tx")
    a = ch.h_ris_eve * (ch.h_tx_ris @ x)[None, :]
    direct = ch.h_eve @ x
    return QuadraticForm(
        mat=a.conj().T @ a,
        lin=a.conj().T @ direct,
        const=float(np.linalg.norm(direct) ** 2),
        kind="known_x",
    )


def qf_unknown_x(ch: ChannelRealization) -> QuadraticForm:
    """Aggregate channel-gain objective when the signal is unknown to Eve.

    Column n of the stacked map is vec(h_ris_eve[:, n] h_tx_ris[n, :]), so
    that Q v + vec(h_eve) is the vectorized effective channel.
    """
    n_eve, n_ris = ch.h_ris_eve.shape
    n_tx = ch.h_tx_ris.shape[1]
    q = np.empty((n_eve * n_tx, n_ris), dtype=complex)
    for n in range(n_ris):
        q[:, n] = np.outer(ch.h_ris_eve[:, n], ch.h_tx_ris[n, :]).flatten(order="F")
    c = ch.h_eve.flatten(order="F")
    return QuadraticForm(
        mat=q.conj().T @ q,
        lin=q.conj().T @ c,
        const=float(np.linalg.norm(c) ** 2),
        kind="unknown_x",
    )


def default_start(qf: QuadraticForm) -> PhaseVector:
    """Align each phase with the linear term: a cheap, deterministic start."""
    return PhaseVector(np.angle(qf.lin)) if qf.size else PhaseVector(np.zeros(0))


def bcd_optimize(
    qf: QuadraticForm,
    v0: PhaseVector,
    max_sweeps: int = 500,
    tol: float = 1e-8,
) -> PhaseSolution:
    """Coordinate ascent with the closed-form per-element maximizer.

    Holding the other phases fixed, the objective depends on v_n only through
    2 Re(v_n^* c_n) with c_n = lin_n + sum_{m != n} mat[n, m] v_m, so the
    update v_n <- c_n / |c_n| can never decrease f. Stops when a full sweep
    improves f by less than tol (relative) or after max_sweeps.
    """
    if len(v0) != qf.size:
        raise DimensionMismatchError("v0 length must match the form size")
    v = v0.unit()
    current = qf.value(v)
    for _ in range(max_sweeps):
        before = current
        for n in range(qf.size):
            c = qf.lin[n] + qf.mat[n, :] @ v - qf.mat[n, n] * v[n]
            mag = abs(c)
            if mag > 0.0:
                v[n] = c / mag
        current = qf.value(v)
        if current - before <= tol * max(1.0, abs(before)):
            break
    return _solution(v, qf, "bcd")


def _ascend(lift: np.ndarray, w: np.ndarray, iters: int) -> tuple[float, np.ndarray]:
    """Projected gradient ascent of tr(lift W W^H) over unit-norm rows of W."""

    def normalize(m):
        return m / np.linalg.norm(m, axis=1, keepdims=True)

    def objective(m):
        # tr(lift m m^H) = sum over factor columns of w^H lift w
        return float(np.real(np.einsum("ip,ij,jp->", m.conj(), lift, m)))

    w = normalize(w)
    best = objective(w)
    # spectral scale keeps the first steps in a sane range
    step = 1.0 / max(np.linalg.norm(lift, 2), 1e-12)
    no_progress = 0
    for _ in range(iters):
        cand = normalize(w + step * (lift @ w))
        val = objective(cand)
        if val > best + 1e-14 * max(1.0, abs(best)):
            w, best = cand, val
            step *= 1.2
            no_progress = 0
        else:
            if val > best:
                w, best = cand, val
            step *= 0.5
            no_progress += 1
            if no_progress >= 50 or step < 1e-18:
                break
    return best, w


def sdr_solve(
    qf: QuadraticForm,
    rank_p: Optional[int] = None,
    iters: int = 4000,
    rng: Optional[Generator] = None,
) -> tuple[float, np.ndarray]:
    """Semidefinite relaxation via low-rank factorization V = W W^H.

    Maximizes tr(R W W^H) subject to unit-norm rows of W ((L+1) x rank_p),
    i.e. the lifted program with diag(V) = 1, V PSD, rank(V) <= rank_p.
    At rank_p >= sqrt(2(L+1)) the factorized landscape empirically attains
    the SDP optimum; spectral plus random restarts guard against the rare
    bad basin. Returns (attained lifted objective, factor W).
    """
    if rng is None:
        rng = np.random.default_rng(0)
    n = qf.size + 1
    if rank_p is None:
        rank_p = int(np.ceil(np.sqrt(2.0 * n)))
    if rank_p < 2:
        raise ValueError("rank_p must be >= 2")
    lift = qf.lifted()

    # spectral start: top eigenvectors scaled by their (clipped) eigenvalues
    vals, vecs = np.linalg.eigh(lift)
    top = vecs[:, ::-1][:, :rank_p] * np.sqrt(np.clip(vals[::-1][:rank_p], 1e-12, None))
    starts = [top]
    for _ in range(2):
        starts.append(
            rng.standard_normal((n, rank_p)) + 1j * rng.standard_normal((n, rank_p))
        )

    best_val, best_w = -np.inf, None
    for w0 in starts:
        val, w = _ascend(lift, w0, iters)
        if val > best_val:
            best_val, best_w = val, w
    return best_val, best_w


def gaussian_randomize(
    factor: np.ndarray,
    qf: QuadraticForm,
    n_samples: int = 200,
    rng: Optional[Generator] = None,
) -> PhaseSolution:
    """Round the relaxed factor back to feasible unit-modulus phases.

    Draws z = W g with g standard complex Gaussian, de-rotates by the
    homogenization coordinate, and keeps the best of n_samples candidates.
    The attained lifted value rides along as sdr_upper_bound.
    """
    if rng is None:
        rng = np.random.default_rng(0)
    n = qf.size
    lift = qf.lifted()
    upper = float(np.real(np.einsum("ip,ij,jp->", factor.conj(), lift, factor)))

    g = rng.standard_normal((n_samples, factor.shape[1])) + 1j * rng.standard_normal(
        (n_samples, factor.shape[1])
    )
    z = g @ factor.T  # rows: candidate lifted vectors, length n+1
    ref = z[:, n].copy()
    ref[np.abs(ref) == 0.0] = 1.0
    cands = np.exp(1j * np.angle(z[:, :n] * np.conj(ref)[:, None]))
    vals = qf.value_many(cands)
    k = int(np.argmax(vals))
    return _solution(cands[k], qf, "sdr_randomized", upper=upper)


def brute_force_phases(qf: QuadraticForm, levels: int) -> PhaseSolution:
    """Exhaustive maximization over the uniform phase grid {2 pi k / levels}."""
    n = qf.size
    total = levels**n
    if total > BRUTE_FORCE_CAP:
        raise InstanceTooLargeError(
            f"{levels}^{n} grid points exceed the cap of {BRUTE_FORCE_CAP}"
        )
    grid = np.exp(2j * np.pi * np.arange(levels) / levels)
    best_val, best_idx = -np.inf, None
    chunk = 1 << 16
    for start in range(0, total, chunk):
        idx = np.arange(start, min(start + chunk, total))
        digits = (idx[:, None] // levels ** np.arange(n)[None, :]) % levels
        vs = grid[digits]
        vals = qf.value_many(vs)
        k = int(np.argmax(vals))
        if vals[k] > best_val:
            best_val, best_idx = float(vals[k]), digits[k]
    return _solution(grid[best_idx], qf, "brute_force")


def random_phases(qf: QuadraticForm, rng: Generator) -> PhaseSolution:
    """Uniform random phases: the no-optimization baseline."""
    theta = rng.uniform(0.0, 2 * np.pi, size=qf.size)
    return _solution(np.exp(1j * theta), qf, "random")
