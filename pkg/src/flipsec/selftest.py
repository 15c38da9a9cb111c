"""Oracle-backed invariant suite behind the `selftest` subcommand.

Each check is a thin, fast replay of the module's defining property against
an independent computation. Prints one line per check and returns the
number of failures.
"""
from __future__ import annotations

import numpy as np

from .channel import PhaseVector, SystemDims, add_awgn, draw_channels, eve_effective_channel
from .detector import PriorTable, bob_llr, bob_llr_reduced, eve_llr
from .flipcode import FlipPolicy, encode, marginals, transition_matrix
from .harness import ExperimentConfig, read_csv, run_ber, write_csv
from .infotheory import dmc_mi, estimate_ami
from .precoder import build, transmit
from .riseve import (
    bcd_optimize,
    brute_force_phases,
    default_start,
    gaussian_randomize,
    qf_known_x,
    sdr_solve,
)


def check_channel():
    dims = SystemDims(n_tx=6, n_bob=3, n_eve=3, n_ris=4)
    rng = np.random.default_rng(0)
    ch = draw_channels(dims, rng)
    ph = PhaseVector(rng.uniform(0, 2 * np.pi, 4))
    direct = ch.h_eve + ch.h_ris_eve @ np.diag(ph.unit()) @ ch.h_tx_ris
    assert np.max(np.abs(eve_effective_channel(ch, ph) - direct)) < 1e-12
    noise = add_awgn(np.zeros(100_000, dtype=complex), 1.5, rng)
    assert abs(np.mean(np.abs(noise) ** 2) - 1.5) < 0.05
    again = draw_channels(dims, np.random.default_rng(0))
    assert np.array_equal(ch.h_bob, again.h_bob)


def check_flipcode():
    pol = FlipPolicy.optimal(5, 9)
    t = transition_matrix(pol)
    assert np.max(np.abs(t.sum(axis=1) - 1)) < 1e-12
    dims = SystemDims(n_tx=9, n_bob=4, n_eve=4, n_ris=9)
    rng = np.random.default_rng(1)
    hits = sum(
        np.count_nonzero(encode(1, dims, pol, rng).s == -1) for _ in range(20_000)
    )
    partial, _ = marginals(pol)
    assert abs(hits / (20_000 * 9) - partial) < 0.01


def check_precoder():
    rng = np.random.default_rng(2)
    dims = SystemDims(n_tx=9, n_bob=4, n_eve=4, n_ris=9)
    for _ in range(100):
        ch = draw_channels(dims, rng)
        ps = build(ch.h_bob)
        assert np.linalg.norm(ch.h_bob @ ps.null_basis) < 1e-9
        x = transmit(ps, np.ones(4), rng.choice([-1.0, 1.0], 5))
        y = ch.h_bob @ x
        assert np.linalg.norm(y - ps.alpha * ps.u_left @ np.ones(4)) < 1e-9


def check_riseve():
    for seed in range(5):
        dims = SystemDims(n_tx=4, n_bob=2, n_eve=3, n_ris=3)
        ch = draw_channels(dims, np.random.default_rng(seed))
        rng = np.random.default_rng(seed + 50)
        x = rng.standard_normal(4) + 1j * rng.standard_normal(4)
        qf = qf_known_x(ch, x)
        bcd = bcd_optimize(qf, default_start(qf))
        lifted, w = sdr_solve(qf, rng=np.random.default_rng(seed))
        rnd = gaussian_randomize(w, qf, rng=np.random.default_rng(seed))
        ref = brute_force_phases(qf, 32)
        assert max(bcd.objective, rnd.objective) >= ref.objective * 0.995
        assert lifted >= ref.objective - 1e-6


def check_detector():
    import itertools
    import math

    dims = SystemDims(n_tx=4, n_bob=2, n_eve=2, n_ris=2)
    rng = np.random.default_rng(3)
    for _ in range(5):
        ch = draw_channels(dims, rng)
        ps = build(ch.h_bob)
        priors = PriorTable.marginal(FlipPolicy.from_marginals(2, 4, 0.3, 0.4), 4)
        x = transmit(ps, np.ones(2), np.array([1.0, -1.0]))
        y = add_awgn(ch.h_eve @ x, 0.5, rng)
        got = eve_llr(y, ch.h_eve, ps, priors, 0.5).llr
        comb = ps.alpha * (ch.h_eve @ np.hstack([ps.forward, ps.null_basis]))
        num = den = 0.0
        for s in itertools.product([-1, 1], repeat=4):
            sv = np.array(s, dtype=float)
            like = math.exp(-float(np.sum(np.abs(y - comb @ sv) ** 2)) / 0.5)
            w_p = math.prod(0.3 if b == -1 else 0.7 for b in s)
            w_m = math.prod(0.4 if b == 1 else 0.6 for b in s)
            num += like * w_p
            den += like * w_m
        assert abs(got - (math.log(num) - math.log(den))) < 1e-9
    for _ in range(100):
        ch = draw_channels(dims, rng)
        ps = build(ch.h_bob)
        pri = PriorTable.no_flip(2)
        y = add_awgn(ps.alpha * ps.u_left @ np.ones(2), 0.6, rng)
        assert abs(bob_llr(y, ps, pri, 0.6).llr - bob_llr_reduced(y, ps, pri, 0.6).llr) < 1e-9


def check_infotheory():
    assert dmc_mi(0.6, 0.4).bits < 1e-12
    assert dmc_mi(0.0, 0.0).bits == 1.0
    rng = np.random.default_rng(4)
    u = rng.choice([-1, 1], 50_000)
    flip = rng.random(50_000) < 0.1
    llr = np.where(flip, -u, u) * np.log(9.0)
    assert abs(estimate_ami(zip(u, llr)).bits - 0.531) < 0.02


def check_harness(tmp_dir=None):
    import tempfile
    from pathlib import Path

    cfg = ExperimentConfig(
        experiment="ber_eve", snr_grid=(0.8,), frame_len=40,
        target_frame_errors=4, max_frames=6, seed=1,
    )
    rows = run_ber(cfg)
    assert rows == run_ber(cfg)
    with tempfile.TemporaryDirectory() as d:
        path = Path(d) / "selftest.csv"
        write_csv(rows, path)
        assert read_csv(path) == rows


CHECKS = [
    ("channel", check_channel),
    ("flipcode", check_flipcode),
    ("precoder", check_precoder),
    ("riseve", check_riseve),
    ("detector", check_detector),
    ("infotheory", check_infotheory),
    ("harness", check_harness),
]


def run_selftest(out=print) -> int:
    failures = 0
    for name, fn in CHECKS:
        try:
            fn()
            out(f"{name:<12} PASS")
        except Exception as exc:  # report and keep going
            failures += 1
            out(f"{name:<12} FAIL  {exc!r}")
    out(f"{len(CHECKS) - failures}/{len(CHECKS)} module suites passed")
    return failures
