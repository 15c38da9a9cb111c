import itertools
import math

import numpy as np
import pytest

from flipsec.channel import SystemDims, add_awgn, draw_channels
from flipsec.detector import (
    EnumerationTooLargeError,
    LlrResult,
    PriorTable,
    bob_llr,
    bob_llr_reduced,
    decide,
    eve_llr,
)
from flipsec.flipcode import FlipPolicy, encode, split
from flipsec.precoder import build, transmit


def setup(seed, n_tx=6, n_bob=3, n_eve=3, n_ris=4):
    dims = SystemDims(n_tx=n_tx, n_bob=n_bob, n_eve=n_eve, n_ris=n_ris)
    ch = draw_channels(dims, np.random.default_rng(seed))
    return dims, ch, build(ch.h_bob)


def literal_bob_llr(y, ps, priors, sigma2):
    """Independent oracle: explicit double sum over sign tuples."""
    r = ps.rank
    num = 0.0
    den = 0.0
    for s in itertools.product([-1, 1], repeat=r):
        mean = ps.alpha * ps.u_left @ np.array(s, dtype=float)
        like = math.exp(-float(np.sum(np.abs(y - mean) ** 2)) / sigma2)
        w_plus = math.prod(
            priors.p_given_plus[i] if s[i] == -1 else 1 - priors.p_given_plus[i]
            for i in range(r)
        )
        w_minus = math.prod(
            priors.p_given_minus[i] if s[i] == 1 else 1 - priors.p_given_minus[i]
            for i in range(r)
        )
        num += like * w_plus
        den += like * w_minus
    return math.log(num) - math.log(den)


def literal_eve_llr(y, g_eve, ps, priors, sigma2):
    m = ps.forward.shape[0]
    comb = ps.alpha * (g_eve @ np.hstack([ps.forward, ps.null_basis]))
    num = 0.0
    den = 0.0
    for s in itertools.product([-1, 1], repeat=m):
        sv = np.array(s, dtype=float)
        like = math.exp(-float(np.sum(np.abs(y - comb @ sv) ** 2)) / sigma2)
        w_plus = math.prod(
            priors.p_given_plus[i] if s[i] == -1 else 1 - priors.p_given_plus[i]
            for i in range(m)
        )
        w_minus = math.prod(
            priors.p_given_minus[i] if s[i] == 1 else 1 - priors.p_given_minus[i]
            for i in range(m)
        )
        num += like * w_plus
        den += like * w_minus
    return math.log(num) - math.log(den)


def test_decide_boundary():
    assert decide(0.1, 0.0) == 1
    assert decide(-0.1, 0.0) == -1
    assert decide(0.0, 0.0) == 1  # ties resolve to +1


def test_prior_table_validation():
    with pytest.raises(ValueError):
        PriorTable(p_given_plus=np.array([1.2]), p_given_minus=np.array([0.1]))
    with pytest.raises(ValueError):
        PriorTable(p_given_plus=np.zeros(2), p_given_minus=np.zeros(3))
    t = PriorTable.no_flip(4)
    assert len(t) == 4 and np.all(t.p_given_plus == 0)


def test_bob_noiseless_decisions():
    _, ch, ps = setup(1)
    priors = PriorTable.no_flip(3)
    y = ps.alpha * ps.u_left @ np.ones(3)  # u = +1, no noise
    res = bob_llr(y, ps, priors, 0.01)
    assert res.llr > 0 and res.decision == 1
    res = bob_llr(-y, ps, priors, 0.01)
    assert res.llr < 0 and res.decision == -1


def test_bob_equidistant_observation_gives_zero():
    _, ch, ps = setup(2)
    priors = PriorTable.no_flip(3)
    res = bob_llr(np.zeros(3, dtype=complex), ps, priors, 0.5)
    assert abs(res.llr) < 1e-9
    assert res.decision == 1


def test_bob_default_priors_reduce_to_distance_difference():
    _, ch, ps = setup(3)
    priors = PriorTable.no_flip(3)
    rng = np.random.default_rng(0)
    y = add_awgn(ps.alpha * ps.u_left @ np.ones(3), 0.4, rng)
    m = ps.alpha * ps.u_left @ np.ones(3)
    want = (np.sum(np.abs(y + m) ** 2) - np.sum(np.abs(y - m) ** 2)) / 0.4
    got = bob_llr(y, ps, priors, 0.4).llr
    assert abs(got - want) < 1e-9


def test_bob_llr_matches_literal_enumeration():
    rng = np.random.default_rng(5)
    for seed in range(10):
        _, ch, ps = setup(seed + 10)
        priors = PriorTable(
            p_given_plus=rng.uniform(0.05, 0.6, 3),
            p_given_minus=rng.uniform(0.05, 0.6, 3),
        )
        y = add_awgn(ps.alpha * ps.u_left @ np.ones(3), 0.7, rng)
        want = literal_bob_llr(y, ps, priors, 0.7)
        assert abs(bob_llr(y, ps, priors, 0.7).llr - want) < 1e-9


def test_reduced_equals_full():
    rng = np.random.default_rng(6)
    agree = 0
    for seed in range(300):
        _, ch, ps = setup(seed % 25)
        priors = PriorTable(
            p_given_plus=rng.uniform(0.0, 0.7, 3),
            p_given_minus=rng.uniform(0.0, 0.7, 3),
        )
        u = 1 if rng.random() < 0.5 else -1
        y = add_awgn(ps.alpha * ps.u_left @ (u * np.ones(3)), 0.8, rng)
        full = bob_llr(y, ps, priors, 0.8)
        red = bob_llr_reduced(y, ps, priors, 0.8)
        assert abs(full.llr - red.llr) < 1e-9
        agree += full.decision == red.decision
    assert agree == 300


def test_eve_llr_matches_literal_enumeration():
    rng = np.random.default_rng(7)
    dims = SystemDims(n_tx=4, n_bob=2, n_eve=2, n_ris=3)
    for seed in range(10):
        ch = draw_channels(dims, np.random.default_rng(seed + 40))
        ps = build(ch.h_bob)
        g_eve = ch.h_eve
        priors = PriorTable(
            p_given_plus=rng.uniform(0.05, 0.6, 4),
            p_given_minus=rng.uniform(0.05, 0.6, 4),
        )
        x = transmit(ps, np.ones(2), np.array([1.0, -1.0]))
        y = add_awgn(g_eve @ x, 0.6, rng)
        want = literal_eve_llr(y, g_eve, ps, priors, 0.6)
        assert abs(eve_llr(y, g_eve, ps, priors, 0.6).llr - want) < 1e-9


def test_optimal_pairs_snap_to_exact_complements():
    """Any marginal pair on the partial + chi = 1 line yields bit-identical
    hypothesis priors, so the statistic is exactly zero (not rounding noise
    with a data-correlated sign)."""
    from flipsec.detector import log_priors, sign_table

    for q, m, a, b in ((11, 15, 0.6, 0.4), (11, 15, 0.33, 0.67), (5, 9, 0.5, 0.5)):
        pol = FlipPolicy.from_marginals(q, m, a, b)
        priors = PriorTable.marginal(pol, m)
        lp_plus, lp_minus = log_priors(priors, sign_table(m))
        assert np.array_equal(lp_plus, lp_minus)
        assert abs(priors.p_given_plus[0] + priors.p_given_minus[0] - 1.0) == 0.0
    off = PriorTable.marginal(FlipPolicy.from_marginals(5, 9, 0.3, 0.3), 9)
    lp_plus, lp_minus = log_priors(off, sign_table(9))
    assert not np.array_equal(lp_plus, lp_minus)


def test_eve_blind_when_flip_sum_is_one():
    """With partial + chi = 1 the prior weights coincide under both
    hypotheses, so the statistic is exactly zero and errors run at 1/2."""
    dims = SystemDims(n_tx=4, n_bob=2, n_eve=2, n_ris=2)
    pol = FlipPolicy.optimal(q=2, m=4)
    priors = PriorTable.marginal(pol, 4)
    rng = np.random.default_rng(8)
    errors = 0
    n = 10_000
    for _ in range(n):
        ch = draw_channels(dims, rng)
        ps = build(ch.h_bob)
        u = 1 if rng.random() < 0.5 else -1
        s_n, s_r = split(encode(u, dims, pol, rng), dims)
        y = ch.h_eve @ transmit(ps, s_n, s_r)  # sigma -> 0
        res = eve_llr(y, ch.h_eve, ps, priors, 1e-9)
        assert res.llr == 0.0
        errors += res.decision != u
    assert 0.47 <= errors / n <= 0.53


def test_eve_with_bob_channel_and_no_flips_matches_bob():
    _, ch, ps = setup(9, n_tx=6, n_bob=3)
    rng = np.random.default_rng(9)
    y = add_awgn(ch.h_bob @ transmit(ps, np.ones(3), np.zeros(3)), 0.5, rng)
    bob = bob_llr(y, ps, PriorTable.no_flip(3), 0.5)
    eve = eve_llr(y, ch.h_bob, ps, PriorTable.no_flip(6), 0.5)
    assert abs(bob.llr - eve.llr) < 1e-9


def test_detectors_stay_finite_at_extremes():
    _, ch, ps = setup(11)
    y = np.full(3, 1e6 + 1e6j)
    res = bob_llr(y, ps, PriorTable.no_flip(3), 1e-12)
    assert np.isfinite(res.llr)
    res = eve_llr(np.full(3, 1e6 + 0j), ch.h_eve, ps, PriorTable.no_flip(6), 1e-12)
    assert np.isfinite(res.llr)


def test_noiseless_sign_matches_matched_filter():
    rng = np.random.default_rng(13)
    for seed in range(20):
        _, ch, ps = setup(seed + 60)
        u = 1 if rng.random() < 0.5 else -1
        y = ps.alpha * ps.u_left @ (u * np.ones(3))
        res = bob_llr(y, ps, PriorTable.no_flip(3), 0.3)
        stat = np.real(np.vdot(ps.alpha * ps.u_left @ np.ones(3), y))
        assert np.sign(res.llr) == np.sign(stat)


def test_enumeration_guards():
    _, ch, ps = setup(14)
    with pytest.raises(ValueError):
        bob_llr(np.zeros(3), ps, PriorTable.no_flip(2), 0.1)
    big = PriorTable.no_flip(25)
    with pytest.raises(EnumerationTooLargeError):
        from flipsec.detector import sign_table

        sign_table(25)
    with pytest.raises(ValueError):
        eve_llr(np.zeros(3), ch.h_eve, ps, big, 0.1)


def test_llr_result_contract():
    res = LlrResult(llr=0.2, decision=1, threshold=0.0)
    assert res.decision == decide(res.llr, res.threshold)
