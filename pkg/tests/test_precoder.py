import numpy as np
import pytest

from flipsec.channel import SystemDims, draw_channels
from flipsec.precoder import (
    RankDeficientError,
    bob_observe,
    build,
    eve_observe,
    transmit,
)


def rand_channel(seed, n_tx=9, n_bob=4):
    dims = SystemDims(n_tx=n_tx, n_bob=n_bob, n_eve=4, n_ris=9)
    return draw_channels(dims, np.random.default_rng(seed))


def test_canonical_channel():
    n_bob, n_tx = 3, 8
    h = np.hstack([np.eye(n_bob), np.zeros((n_bob, n_tx - n_bob))]).astype(complex)
    ps = build(h)
    assert np.allclose(ps.forward, np.vstack([np.eye(n_bob), np.zeros((5, n_bob))]))
    # null basis spans the last coordinates
    assert np.linalg.norm(ps.null_basis[:n_bob, :]) < 1e-12
    assert np.allclose(
        ps.null_basis.conj().T @ ps.null_basis, np.eye(n_tx - n_bob), atol=1e-12
    )
    assert ps.alpha == pytest.approx(1.0 / np.sqrt(n_tx))


def test_invariants_on_random_channels():
    for seed in range(30):
        h = rand_channel(seed).h_bob
        ps = build(h)
        n_bob, n_tx = h.shape
        assert np.linalg.norm(ps.u_left.conj().T @ ps.u_left - np.eye(n_bob)) < 1e-10
        assert np.linalg.norm(ps.v_right.conj().T @ ps.v_right - np.eye(n_tx)) < 1e-10
        sigma_full = np.zeros((n_bob, n_tx))
        sigma_full[:, :n_bob] = np.diag(ps.sigma)
        assert (
            np.linalg.norm(ps.u_left @ sigma_full @ ps.v_right.conj().T - h) < 1e-9
        )
        assert np.linalg.norm(h @ ps.null_basis) < 1e-9
        assert np.linalg.norm(h @ ps.forward - ps.u_left) < 1e-9
        assert np.all(np.diff(ps.sigma) <= 0)
        cols = ps.null_basis.conj().T @ ps.null_basis
        assert np.linalg.norm(cols - np.eye(n_tx - n_bob)) < 1e-10


def test_singular_values_match_eigendecomposition():
    h = rand_channel(123).h_bob
    ps = build(h)
    eig = np.sort(np.linalg.eigvalsh(h @ h.conj().T))[::-1]
    assert np.max(np.abs(np.sqrt(np.clip(eig, 0, None)) - ps.sigma)) < 1e-8


def test_build_is_deterministic_and_alpha_data_free():
    h = rand_channel(7).h_bob
    a, b = build(h), build(h)
    assert np.array_equal(a.v_right, b.v_right)
    assert a.alpha == b.alpha


def test_rank_deficient_rejected():
    row = (np.random.default_rng(0).standard_normal(6)
           + 1j * np.random.default_rng(1).standard_normal(6))
    h = np.vstack([row, row])  # rank 1
    with pytest.raises(RankDeficientError):
        build(h)


def test_transmit_components():
    h = rand_channel(2).h_bob
    ps = build(h)
    s_n = np.array([1, -1, 1, 1])
    s_r = np.zeros(5)
    x = transmit(ps, s_n, s_r)
    assert np.allclose(x, ps.alpha * ps.forward @ s_n)
    assert np.linalg.norm(h @ x / ps.alpha - ps.u_left @ s_n) < 1e-9
    x = transmit(ps, np.zeros(4), np.array([1, 1, -1, 1, -1]))
    assert np.linalg.norm(h @ x) < 1e-9


def test_transmit_matches_naive_sum_and_is_linear():
    rng = np.random.default_rng(4)
    h = rand_channel(4).h_bob
    ps = build(h)
    s_n = rng.choice([-1.0, 1.0], 4)
    s_r = rng.choice([-1.0, 1.0], 5)
    naive = np.zeros(9, dtype=complex)
    for j in range(4):
        naive += ps.forward[:, j] * s_n[j]
    for j in range(5):
        naive += ps.null_basis[:, j] * s_r[j]
    assert np.max(np.abs(transmit(ps, s_n, s_r) - ps.alpha * naive)) < 1e-12
    both = transmit(ps, s_n, s_r)
    parts = transmit(ps, s_n, np.zeros(5)) + transmit(ps, np.zeros(4), s_r)
    assert np.max(np.abs(both - parts)) < 1e-12
    with pytest.raises(ValueError):
        transmit(ps, np.ones(3), s_r)
    with pytest.raises(ValueError):
        transmit(ps, s_n, np.ones(4))


def test_bob_noiseless_does_not_see_s_r():
    ch = rand_channel(10)
    ps = build(ch.h_bob)
    rng = np.random.default_rng(0)
    s_n = np.ones(4)
    y0 = bob_observe(ch, ps, transmit(ps, s_n, np.ones(5)), 0.0, rng)
    y1 = bob_observe(ch, ps, transmit(ps, s_n, -np.ones(5)), 0.0, rng)
    assert np.linalg.norm(y0 - y1) < 1e-9
    assert np.linalg.norm(y0 - ps.alpha * ps.u_left @ s_n) < 1e-9
    # row sums of U when s_n is all ones
    assert np.allclose(y0, ps.alpha * ps.u_left.sum(axis=1), atol=1e-9)


def test_bob_observe_matches_direct_evaluation():
    ch = rand_channel(12)
    ps = build(ch.h_bob)
    x = transmit(ps, np.ones(4), np.ones(5))
    y = bob_observe(ch, ps, x, 0.5, np.random.default_rng(99))
    noise = np.random.default_rng(99)
    want = ch.h_bob @ x + np.sqrt(0.25) * (
        noise.standard_normal(4) + 1j * noise.standard_normal(4)
    )
    assert np.max(np.abs(y - want)) < 1e-12


def test_eve_sees_null_component():
    ch = rand_channel(20)
    ps = build(ch.h_bob)
    s_n = np.ones(4)
    s_r = np.array([1.0, -1.0, 1.0, -1.0, 1.0])
    rng = np.random.default_rng(0)
    # hypothetical eavesdropper sitting on Bob's channel: null part vanishes
    y_alias = eve_observe(ch.h_bob, transmit(ps, np.zeros(4), s_r), 0.0, rng)
    assert np.linalg.norm(y_alias) < 1e-9
    g_eve = np.random.default_rng(21).standard_normal((4, 9)) + 1j * (
        np.random.default_rng(22).standard_normal((4, 9))
    )
    y_null = eve_observe(g_eve, transmit(ps, np.zeros(4), s_r), 0.0, rng)
    assert np.linalg.norm(y_null) > 1e-6
    y = eve_observe(g_eve, transmit(ps, s_n, s_r), 0.0, rng)
    want = g_eve @ (ps.alpha * (ps.forward @ s_n + ps.null_basis @ s_r))
    assert np.max(np.abs(y - want)) < 1e-12
