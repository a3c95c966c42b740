import math

import numpy as np
import pytest

from kneadlab import (NoReversingFixedPoint, TooShallow, build_nest,
                      make_logistic, make_quadratic, nest_asymptotics,
                      nest_lyapunov, orientation_reversing_fixed_point)
from kneadlab.nest import (NestLevel, NestReport, find_restrictive_interval,
                           nice_on_horizon, spreading_central_domain)


def _report_from_vs(vs, cs=None):
    levels = []
    cs = cs or [0.5] * len(vs)
    for i, v in enumerate(vs):
        levels.append(NestLevel(i, (-0.5 / (i + 1), 0.5 / (i + 1)), v,
                                s_n=1, c_n=cs[i]))
    seq = tuple(2.0 * math.log(b.v_n) / a.v_n
                for a, b in zip(levels, levels[1:]))
    return NestReport(tuple(levels), "DepthReached", None, 1, 32, False, seq)


# --- orientation reversing fixed point ---------------------------------

def test_orfp_q2(q2):
    assert orientation_reversing_fixed_point(q2) == pytest.approx(0.5, abs=1e-13)


def test_orfp_q19(q19):
    # quadratic formula: discriminant 1 + 4*1.9*0.9 = 7.84 = 2.8^2
    assert orientation_reversing_fixed_point(q19) == pytest.approx(
        9 / 19, abs=1e-12)


def test_orfp_small_tau_raises():
    with pytest.raises(NoReversingFixedPoint):
        orientation_reversing_fixed_point(make_quadratic(0.6))


# --- nest construction --------------------------------------------------

def test_nest_q2_critical_non_return(q2):
    rep = build_nest(q2, 2, 10 ** 6)
    assert rep.termination == "CriticalNonReturn"
    assert rep.termination_level == 0
    assert len(rep.levels) == 0


def test_nest_q19_level0(q19):
    rep = build_nest(q19, 1, 10 ** 6)
    lv0 = rep.levels[0]
    assert lv0.interval[0] == pytest.approx(-9 / 19, abs=1e-12)
    assert lv0.interval[1] == pytest.approx(9 / 19, abs=1e-12)
    assert lv0.v_n == 3
    assert rep.renormalization_period == 1


def test_nest_q19_central_return(q19):
    # f^3(0) = 0.1242... already lands in I_1, a central return
    rep = build_nest(q19, 2, 10 ** 6)
    assert rep.levels[0].s_n == 0
    assert rep.levels[0].central_return is True
    assert rep.levels[1].v_n == rep.levels[0].v_n
    assert 0.0 < rep.levels[0].c_n < 1.0


def test_nest_pullback_matches_spreading_oracle(q19, screened_taus):
    # dual route: exact pullback vs brute-force constant-return-time probe
    for m in [q19] + [make_quadratic(t) for t in screened_taus[:3]]:
        rep = build_nest(m, 2, 10 ** 6)
        if len(rep.levels) < 2 or rep.renormalization_period != 1:
            continue
        for lv, nxt in zip(rep.levels, rep.levels[1:]):
            lo, hi = spreading_central_domain(m, lv.interval, lv.v_n)
            assert nxt.interval[0] == pytest.approx(lo, abs=1e-9)
            assert nxt.interval[1] == pytest.approx(hi, abs=1e-9)


def test_nest_validation(q19):
    with pytest.raises(ValueError):
        build_nest(q19, 9, 10 ** 6)
    with pytest.raises(ValueError):
        build_nest(q19, 2, 10 ** 5)


from nest_checks import check_nest_invariants as _check_invariants  # noqa: E402


def test_nest_invariants_q19(q19):
    rep = build_nest(q19, 4, 10 ** 6)
    assert len(rep.levels) >= 3
    _check_invariants(q19, rep)


def test_nest_invariants_sample_screened(screened_taus):
    for tau in screened_taus[:5]:
        m = make_quadratic(tau)
        rep = build_nest(m, 5, 10 ** 6)
        _check_invariants(m, rep)


# --- renormalization ----------------------------------------------------

def test_restrictive_interval_q2(q2):
    k, cycle = find_restrictive_interval(q2)
    assert k == 1


def test_renormalized_nest_period_two():
    # tau = 1.799 sits in the two-band window: period-2 renormalization
    m = make_quadratic(1.799)
    rep = build_nest(m, 3, 10 ** 6)
    assert rep.renormalization_period == 2
    assert rep.renorm_search_horizon == 32
    for lv in rep.levels:
        assert lv.v_n % 2 == 0
    _check_invariants(m, rep)


def test_renormalized_nest_period_three_window():
    # stochastic parameter inside the period-3 window (6-band attractor)
    m = make_quadratic(1.92538)
    rep = build_nest(m, 3, 10 ** 6)
    assert rep.renormalization_period % 3 == 0
    for lv in rep.levels:
        assert lv.v_n % rep.renormalization_period == 0
    _check_invariants(m, rep)


# --- extended precision ---------------------------------------------------

def test_extended_precision_agrees_at_shallow_levels(q19):
    double = build_nest(q19, 2, 10 ** 6)
    extended = build_nest(q19, 2, 10 ** 6, extended_precision=True)
    assert extended.extended_precision
    for a, b in zip(double.levels, extended.levels):
        # shallow v_n are small, so double stays point-accurate here
        assert a.v_n == b.v_n
        assert a.interval[0] == pytest.approx(b.interval[0], abs=1e-12)
        assert a.interval[1] == pytest.approx(b.interval[1], abs=1e-12)


# --- derived sequences -----------------------------------------------------

def test_nest_lyapunov_arithmetic():
    rep = _report_from_vs([3, 7])
    assert nest_lyapunov(rep) == [pytest.approx(2 * math.log(7) / 3)]
    with pytest.raises(TooShallow):
        nest_lyapunov(_report_from_vs([3]))


def test_nest_asymptotics_arithmetic():
    rep = _report_from_vs([3, 7, 20], cs=[0.1, 0.2, 0.3])
    rows = nest_asymptotics(rep)
    assert rows[0]["ratio_ln_v"] == pytest.approx(math.log(7) / math.log(10))
    with pytest.raises(TooShallow):
        nest_asymptotics(_report_from_vs([3, 7]))


def test_nest_asymptotics_flags_bad_ratio():
    rep = _report_from_vs([3, 7, 20], cs=[1.5, 0.2, 0.3])
    rows = nest_asymptotics(rep)
    assert rows[0]["c_n_invariant_violated"]
    assert rows[0]["ratio_ln_v"] is None


def test_nest_asymptotics_band_at_screened_parameter(screened_taus):
    # finite levels fluctuate around the limit 1; this inspects the trend
    for tau in screened_taus:
        m = make_quadratic(tau)
        rep = build_nest(m, 5, 10 ** 6)
        if len(rep.levels) >= 3:
            rows = nest_asymptotics(rep)
            for row in rows:
                assert not row["c_n_invariant_violated"]
                assert row["ratio_ln_v"] > 0.0
            return
    pytest.skip("no screened parameter reached 3 levels")
