"""The principal nest: central domains of successive first-return maps
around the critical point, return times, scaling ratios, and the nest
Lyapunov formula.

Level 0 is [-p, p] (in critical-point-centered coordinates) where p is the
orientation reversing fixed point of the return map of the smallest
restrictive interval found by the renormalization pre-search.  Each next
level is the central component of the first-return domain, computed by an
exact monotone pullback of I_n along the critical orbit followed by one
central fold preimage.  Return times v_n count iterates of the base map f
throughout, also for renormalized maps.

Construction is sequential across levels; reports are immutable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import (CriticalNonReturn, NoReversingFixedPoint,
                     PrecisionExhausted, TooShallow)
from .maps import LEFT, RIGHT, UnimodalMap

WIDTH_FLOOR_DOUBLE = 1e-13
WIDTH_FLOOR_EXTENDED = 1e-18
# consecutive central returns before we declare a deeper renormalization
CENTRAL_CASCADE_LIMIT = 16
DEFAULT_RENORM_SEARCH_PERIOD = 32


@dataclass(frozen=True)
class NestLevel:
    index: int
    interval: tuple[float, float]
    v_n: int
    s_n: Optional[int] = None
    c_n: Optional[float] = None
    landing_word_length: Optional[int] = None
    central_return: Optional[bool] = None

    @property
    def width(self) -> float:
        return self.interval[1] - self.interval[0]


@dataclass(frozen=True)
class NestReport:
    levels: tuple[NestLevel, ...]
    termination: str  # DepthReached | CriticalNonReturn | RestrictiveIntervalFound | PrecisionExhausted
    termination_level: Optional[int]
    renormalization_period: int
    renorm_search_horizon: int
    extended_precision: bool
    lyapunov_nest_sequence: tuple[float, ...]


# ---------------------------------------------------------------------------
# arithmetic adapter (double or mpmath) for the nest inner loops
# ---------------------------------------------------------------------------

class _Arith:
    def __init__(self, m: UnimodalMap, extended: bool):
        self.m = m
        self.extended = extended
        if not extended:
            self.f = m._f
            if m._inv_left is not None:
                self.inv_left = m._inv_left
                self.inv_right = m._inv_right
            else:
                from .maps import branch_inverse
                self.inv_left = lambda y: branch_inverse(m, LEFT, y)
                self.inv_right = lambda y: branch_inverse(m, RIGHT, y)
            self.c = m.critical_point
            self.lo, self.hi = m.domain
            self.to_float = float
            return
        import mpmath as mp
        self.mp = mp
        self.prec = 120  # > 80-bit significand
        p = m.parameter
        with mp.workprec(self.prec):
            c = mp.mpf(m.critical_point)
            if m.family_tag == "quadratic":
                tau = mp.mpf(p)

                def f(x):
                    return tau - 1 - tau * x * x

                def inv_l(y):
                    return -mp.sqrt(max((tau - 1 - y) / tau, mp.mpf(0)))

                def inv_r(y):
                    return mp.sqrt(max((tau - 1 - y) / tau, mp.mpf(0)))
            elif m.family_tag == "logistic":
                a = mp.mpf(p)

                def f(x):
                    return a * x * (1 - x)

                def inv_l(y):
                    return (1 - mp.sqrt(max(1 - 4 * y / a, mp.mpf(0)))) / 2

                def inv_r(y):
                    return (1 + mp.sqrt(max(1 - 4 * y / a, mp.mpf(0)))) / 2
            elif m.family_tag == "sine":
                a = mp.mpf(p)
                s = mp.sqrt(a) / 2

                def f(x):
                    u = s * mp.sin(mp.pi * x)
                    u = max(mp.mpf(-1), min(mp.mpf(1), u))
                    return 2 / mp.pi * mp.asin(u)

                def inv_l(y):
                    u = mp.sin(mp.pi * y / 2) / s
                    u = max(mp.mpf(-1), min(mp.mpf(1), u))
                    return mp.asin(u) / mp.pi

                def inv_r(y):
                    return 1 - inv_l(y)
            else:
                raise ValueError(
                    "extended precision supports built-in families only")
        self.f = f
        self.inv_left = inv_l
        self.inv_right = inv_r
        self.c = c
        self.lo, self.hi = mp.mpf(m.domain[0]), mp.mpf(m.domain[1])
        self.to_float = float

    def run(self, fn):
        if not self.extended:
            return fn()
        with self.mp.workprec(self.prec):
            return fn()


# ---------------------------------------------------------------------------
# restrictive intervals (renormalization pre-search)
# ---------------------------------------------------------------------------

def _interval_image(m: UnimodalMap, J):
    """Exact image of an interval under a unimodal map (max at c)."""
    a, b = J
    fa, fb = m._f(a), m._f(b)
    if a <= m.critical_point <= b:
        return (min(fa, fb), m.critical_value)
    return (fa, fb) if fa <= fb else (fb, fa)


def find_restrictive_interval(m: UnimodalMap, max_period: int = DEFAULT_RENORM_SEARCH_PERIOD):
    """Search for the deepest restrictive interval of period <= max_period.

    Candidate T_0 = [f^{2k}(0), f^k(0)] is tested by exact interval-image
    propagation: f^k(T_0) inside T_0 and pairwise disjoint interiors of the
    cycle.  Returns (period, cycle_intervals); period 1 means no
    renormalization was detected (T_0 = [f^2(0), f(0)]).  Detecting the
    smallest restrictive interval rigorously is undecidable numerically;
    this finite-horizon search is reported as such.
    """
    c = m.critical_point
    xs = [c]
    x = c
    for _ in range(2 * max_period):
        x = m._f(x)
        xs.append(x)
    best = None
    for k in range(1, max_period + 1):
        lo, hi = sorted((xs[2 * k], xs[k]))
        if hi - lo <= 0.0:
            continue
        if k > 1 and not (lo < c < hi):
            continue
        cyc = [(lo, hi)]
        for _ in range(k):
            cyc.append(_interval_image(m, cyc[-1]))
        T0 = cyc[0]
        Tk = cyc[k]
        slack = 1e-9 * (hi - lo) + 1e-14
        if Tk[0] < T0[0] - slack or Tk[1] > T0[1] + slack:
            continue
        ok = True
        ordered = sorted(cyc[:k])
        for (a1, b1), (a2, b2) in zip(ordered, ordered[1:]):
            if a2 < b1 - slack:
                ok = False
                break
        if ok:
            best = (k, cyc[:k])
    if best is None:
        # k = 1 candidate can fail for maps whose critical orbit has not
        # settled; fall back to the full domain as the trivial cycle
        return 1, [m.domain]
    return best


# ---------------------------------------------------------------------------
# orientation reversing fixed point
# ---------------------------------------------------------------------------

def _reversing_fixed_point(ar: _Arith, m: UnimodalMap, period: int, T):
    """Fixed point p of g = f^period on its orientation reversing branch,
    with Dg(p) <= -1, located by bisection."""

    def job():
        c = ar.c
        t_lo, t_hi = T
        if ar.extended:
            t_lo, t_hi = ar.mp.mpf(t_lo), ar.mp.mpf(t_hi)

        def g(x):
            y = x
            for _ in range(period):
                y = ar.f(y)
            return y

        eps = (t_hi - t_lo) * 1e-9
        g_c = g(c)
        # decreasing branch of g sits right of c for a max, left for a min;
        # probe a width/8 step (g is quadratically flat at c, tiny steps
        # underflow the comparison)
        h = (t_hi - t_lo) / 8
        if g(c + h) <= g_c:
            lo, hi = c + eps, t_hi
        else:
            lo, hi = t_lo, c - eps
        glo, ghi = g(lo) - lo, g(hi) - hi
        if glo == 0:
            p = lo
        elif ghi == 0:
            p = hi
        elif glo * ghi > 0:
            raise NoReversingFixedPoint(
                f"no fixed point of f^{period} on the reversing branch")
        else:
            for _ in range(200):
                mid = (lo + hi) / 2
                if mid == lo or mid == hi:
                    break
                if (g(mid) - mid > 0) == (glo > 0):
                    lo = mid
                else:
                    hi = mid
                if abs(hi - lo) < 1e-14 and not ar.extended:
                    break
            p = (lo + hi) / 2
        dg = 1.0
        y = p
        for _ in range(period):
            dg *= m._df(float(y)) if not ar.extended else float(m._df(float(y)))
            y = ar.f(y)
        if dg > -1.0 + 1e-9:
            raise NoReversingFixedPoint(
                f"fixed point of f^{period} has Df^{period} = {dg} > -1")
        return p

    return ar.run(job)


def orientation_reversing_fixed_point(m: UnimodalMap) -> float:
    """The fixed point p > c on the decreasing branch with Df(p) <= -1."""
    ar = _Arith(m, False)
    return float(_reversing_fixed_point(ar, m, 1, m.domain))


# ---------------------------------------------------------------------------
# nest construction
# ---------------------------------------------------------------------------

def _level_scan(ar: _Arith, I, I_prev, v_prev, max_iter, tie_tol):
    """Iterate the critical orbit until it enters int I.

    Returns (v, sides, s_prev) where sides[j] is the branch side of f^j(c)
    for 1 <= j < v and s_prev counts visits to int I_prev at times in
    [v_prev, v).  v is None when there is no return within max_iter.
    """

    def job():
        c = ar.c
        lo, hi = I
        plo, phi = (I_prev if I_prev is not None else (None, None))
        x = c
        sides = []
        s_prev = 0
        for t in range(1, max_iter + 1):
            x = ar.f(x)
            if lo < x < hi:
                return t, sides, s_prev
            if I_prev is not None and t >= v_prev and plo < x < phi:
                s_prev += 1
            d = x - c
            if abs(d) <= tie_tol:
                sides.append(None)
            else:
                sides.append(0 if d < 0 else 1)
        return None, sides, s_prev

    return ar.run(job)


def _pullback_level(ar: _Arith, I, sides):
    """Monotone pullback of I along the critical orbit, then the central
    fold preimage: the next nest level."""

    def job():
        lo, hi = I
        f_lo, f_hi = ar.f(ar.lo), ar.f(ar.c)  # left-branch range; shared max
        f_rlo = ar.f(ar.hi)
        J = (lo, hi)
        for side in reversed(sides):
            if side is None:
                raise PrecisionExhausted(
                    "critical-orbit point within tie tolerance of c during pullback")
            a, b = J
            if side == 0:
                a2, b2 = max(a, f_lo), min(b, f_hi)
                if a2 > b2:
                    raise PrecisionExhausted("pullback interval left the branch range")
                J = (ar.inv_left(a2), ar.inv_left(b2))
            else:
                a2, b2 = max(a, f_rlo), min(b, f_hi)
                if a2 > b2:
                    raise PrecisionExhausted("pullback interval left the branch range")
                J = (ar.inv_right(b2), ar.inv_right(a2))
        a = J[0]
        return (ar.inv_left(a), ar.inv_right(a))

    return ar.run(job)


def build_nest(m: UnimodalMap, max_depth: int, max_iterates: int, *,
               extended_precision: bool = False,
               renorm_search_period: int = DEFAULT_RENORM_SEARCH_PERIOD) -> NestReport:
    """Build the principal nest to at most max_depth levels.

    Restrictive intervals of period <= renorm_search_period are searched
    first; when one is found the nest is built for the renormalized return
    map (v_n still counts base-map iterates) and the report says so.
    """
    if max_depth > 8:
        raise ValueError("max_depth <= 8 required")
    if max_iterates < 10 ** 6:
        raise ValueError("max_iterates >= 1e6 required")
    period, cycle = find_restrictive_interval(m, renorm_search_period)
    ar = _Arith(m, extended_precision)
    p = _reversing_fixed_point(ar, m, period, cycle[0])
    width_floor = WIDTH_FLOOR_EXTENDED if extended_precision else WIDTH_FLOOR_DOUBLE
    tie_tol = m.tie_tolerance

    c = ar.c
    d = abs(p - c)
    I = (c - d, c + d)
    levels: list[dict] = []
    termination = "DepthReached"
    term_level: Optional[int] = None
    central_streak = 0
    n = 0
    while n <= max_depth:
        I_prev = levels[-1]["interval"] if levels else None
        v_prev = levels[-1]["v"] if levels else 0
        v, sides, s_prev = _level_scan(ar, I, I_prev, v_prev, max_iterates, tie_tol)
        if v is None:
            termination = "CriticalNonReturn"
            term_level = n
            break
        if levels:
            prev = levels[-1]
            prev["s"] = s_prev
            prev["central"] = (s_prev == 0)
            central_streak = central_streak + 1 if s_prev == 0 else 0
        levels.append({"interval": I, "v": v, "s": None, "c_ratio": None,
                       "central": None})
        if central_streak >= CENTRAL_CASCADE_LIMIT:
            termination = "RestrictiveIntervalFound"
            term_level = n
            break
        if n == max_depth:
            break
        try:
            I_next = _pullback_level(ar, I, sides)
        except PrecisionExhausted:
            termination = "PrecisionExhausted"
            term_level = n + 1
            break
        levels[-1]["c_ratio"] = float((I_next[1] - I_next[0]) / (I[1] - I[0]))
        if float(I_next[1] - I_next[0]) < width_floor:
            termination = "PrecisionExhausted"
            term_level = n + 1
            break
        I = I_next
        n += 1

    out_levels = []
    for i, rec in enumerate(levels):
        lo, hi = float(rec["interval"][0]), float(rec["interval"][1])
        out_levels.append(NestLevel(
            index=i,
            interval=(lo, hi),
            v_n=rec["v"],
            s_n=rec["s"],
            c_n=rec["c_ratio"],
            landing_word_length=rec["s"],
            central_return=rec["central"],
        ))
    seq = tuple(2.0 * math.log(b.v_n) / a.v_n
                for a, b in zip(out_levels, out_levels[1:]))
    return NestReport(
        levels=tuple(out_levels),
        termination=termination,
        termination_level=term_level,
        renormalization_period=period,
        renorm_search_horizon=renorm_search_period,
        extended_precision=extended_precision,
        lyapunov_nest_sequence=seq,
    )


def nest_lyapunov(report: NestReport) -> list[float]:
    """The sequence 2 ln(v_{n+1}) / v_n over consecutive levels."""
    if len(report.levels) < 2:
        raise TooShallow("need at least 2 nest levels")
    return list(report.lyapunov_nest_sequence)


def nest_asymptotics(report: NestReport) -> list[dict]:
    """Per-level ratios ln v_{n+1} / ln(1/c_n) and ln s_n / ln(1/c_n).

    The limits of both ratios are 1 for almost every non-regular map;
    finite levels fluctuate, so this is a diagnostic table, not a test.
    Levels with c_n >= 1 are surfaced with a flag rather than dropped.
    """
    if len(report.levels) < 3:
        raise TooShallow("need at least 3 nest levels")
    rows = []
    for a, b in zip(report.levels, report.levels[1:]):
        if a.c_n is None:
            continue
        flagged = a.c_n >= 1.0
        log_inv_c = math.log(1.0 / a.c_n) if not flagged else None
        rows.append({
            "n": a.index,
            "v_next": b.v_n,
            "s_n": a.s_n,
            "c_n": a.c_n,
            "ratio_ln_v": (math.log(b.v_n) / log_inv_c) if log_inv_c else None,
            "ratio_ln_s": (math.log(a.s_n) / log_inv_c)
                          if (log_inv_c and a.s_n and a.s_n > 0) else None,
            "c_n_invariant_violated": flagged,
        })
    return rows


def nice_on_horizon(m: UnimodalMap, interval, horizon: int,
                    roundoff_factor: float = 128.0) -> bool:
    """Check that the endpoint orbits of a nice interval stay out of its
    interior for `horizon` iterates.

    Boundary orbits are repelling-shadowed, so a computed orbit drifts off
    the true one at the rate of the accumulated derivative product; a
    penetration only counts as a violation when it exceeds the roundoff
    amplified by that product.
    """
    lo, hi = interval
    eps = roundoff_factor * 2.3e-16
    for e in (lo, hi):
        x = e
        amp = 1.0
        for _ in range(horizon):
            amp *= max(1.0, abs(m.raw_derivative(x)))
            x = m.raw(x)
            tol = eps * amp
            if lo + tol < x < hi - tol:
                return False
    return True


# test oracle: outward spreading with a constant-return-time probe --------

def spreading_central_domain(m: UnimodalMap, I, v: int, bisections: int = 80):
    """Brute-force oracle for the central domain: spread outward from the
    critical point while the first-return time stays v and the return image
    stays in I.  Independent of the pullback implementation."""
    lo, hi = I

    def good(x):
        y = x
        for t in range(1, v + 1):
            y = m._f(y)
            if t < v and lo < y < hi:
                return False
        return lo <= y <= hi

    c = m.critical_point
    out = []
    for direction, limit in ((-1.0, lo), (1.0, hi)):
        a, b = c, limit
        if not good(c + direction * 1e-15 * max(1.0, abs(c))):
            out.append(c)
            continue
        for _ in range(bisections):
            mid = 0.5 * (a + b)
            if good(mid):
                a = mid
            else:
                b = mid
        out.append(a)
    return (out[0], out[1])
